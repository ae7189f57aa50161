#include "validator.hpp"

#include <algorithm>
#include <sstream>

#include "errors.hpp"
#include "similarity.hpp"

namespace gpuval {

namespace {

// Scores each segment and finds the longest rejection run. carry is the run
// length inherited from a previous trace in stream mode.
Verdict score_segments(const std::vector<Segment>& segments, const GoldenModel& model,
                       const ValidationPolicy& policy, std::uint32_t carry,
                       std::uint32_t* carry_out) {
  Verdict verdict;
  std::uint32_t run = carry;
  std::uint32_t best_run = 0;
  std::optional<std::size_t> flagged;
  std::optional<std::size_t> run_start;
  XcorrOptions options;
  // Marker decoding pins segment boundaries, so observed and reference bodies
  // agree in length up to genuine tempo changes. Wide lag freedom would let a
  // partly damaged segment slide its clean stretch onto a look-alike span of
  // the reference, so only small alignment slack is admitted here.
  options.min_overlap_frac = 0.75;
  for (const auto& segment : segments) {
    const auto config = segment.meta.config_id;
    const auto& reference = select_reference(model, config);
    const auto observed = flatten(segment, model.group, Reduction::sum_instances);
    const auto result = match_series(observed, reference.series, policy.tau_corr, options);
    SegmentCheck check;
    check.kernel_ordinal = segment.kernel_ordinal;
    check.config_id = config;
    check.coefficient = result.coefficient;
    check.matched = result.matched;
    verdict.per_segment.push_back(check);
    if (result.matched) {
      run = 0;
      run_start.reset();
    } else {
      if (run == 0 || !run_start) run_start = segment.kernel_ordinal;
      ++run;
      best_run = std::max(best_run, run);
      if (run >= policy.reject_run_len && !flagged) {
        // Flag the start of the offending run; a carried run began upstream.
        flagged = run_start ? *run_start : segment.kernel_ordinal;
      }
    }
  }
  verdict.max_consecutive_rejections = best_run;
  if (flagged) {
    verdict.decision = Decision::compromised;
    verdict.flagged_kernel = static_cast<std::uint32_t>(*flagged);
  } else {
    verdict.decision = Decision::benign;
  }
  if (carry_out) *carry_out = run;
  return verdict;
}

Verdict incomplete(const std::string& why, std::optional<std::uint32_t> ordinal = {}) {
  Verdict verdict;
  verdict.decision = Decision::incomplete;
  verdict.diagnostic = why;
  verdict.divergence_ordinal = ordinal;
  return verdict;
}

Verdict validate_impl(const Trace& trace, const GoldenModel& model,
                      const ValidationPolicy& policy, std::uint32_t carry,
                      std::uint32_t* carry_out) {
  if (carry_out) *carry_out = carry;
  std::vector<Segment> segments;
  try {
    segments =
        segment_trace(trace, model.marker, model.configs, policy.epsilon_amplitude);
  } catch (const Error& err) {
    return incomplete(err.what());
  }
  const auto& expected = model.sequence;
  const auto common = std::min(segments.size(), expected.size());
  std::size_t divergence = common;
  for (std::size_t i = 0; i < common; ++i) {
    if (segments[i].meta.config_id != expected[i]) {
      divergence = i;
      break;
    }
  }
  if (segments.size() != expected.size() || divergence < common) {
    std::ostringstream why;
    if (segments.size() < expected.size()) {
      why << "missing segment: sequence diverges at ordinal " << divergence
          << "; expected " << expected.size() << " kernels, observed "
          << segments.size();
    } else if (segments.size() > expected.size()) {
      why << "unexpected extra segment: sequence diverges at ordinal " << divergence
          << "; expected " << expected.size() << " kernels, observed "
          << segments.size();
    } else {
      why << "wrong kernel at ordinal " << divergence << ": expected config "
          << expected[divergence] << ", observed "
          << segments[divergence].meta.config_id;
    }
    return incomplete(why.str(), static_cast<std::uint32_t>(divergence));
  }
  try {
    return score_segments(segments, model, policy, carry, carry_out);
  } catch (const Error& err) {
    return incomplete(err.what());
  }
}

}  // namespace

Verdict validate_trace(const Trace& trace, const GoldenModel& model) {
  return validate_trace(trace, model, model.policy);
}

Verdict validate_trace(const Trace& trace, const GoldenModel& model,
                       const ValidationPolicy& policy) {
  policy.validate();
  return validate_impl(trace, model, policy, 0, nullptr);
}

StreamValidator::StreamValidator(const GoldenModel& model) : model_(&model) {
  model.policy.validate();
}

Verdict StreamValidator::next(const Trace& trace) {
  return validate_impl(trace, *model_, model_->policy, carry_, &carry_);
}

CampaignReport run_campaign(const GoldenModel& model, const std::vector<Trace>& normal,
                            const std::vector<Trace>& attacks) {
  CampaignReport report;
  report.normal_count = normal.size();
  report.attack_count = attacks.size();
  std::size_t false_positives = 0;
  std::size_t detections = 0;
  auto evaluate = [&](const Trace& trace, bool attack, std::size_t index) {
    TraceOutcome outcome;
    outcome.trace_id = (attack ? "attack-" : "normal-") + std::to_string(index);
    outcome.attack = attack;
    outcome.verdict = validate_trace(trace, model);
    for (const auto& check : outcome.verdict.per_segment) {
      if (!outcome.min_coefficient || check.coefficient < *outcome.min_coefficient) {
        outcome.min_coefficient = check.coefficient;
      }
    }
    const bool hit = outcome.verdict.decision != Decision::benign;
    if (attack && hit) ++detections;
    if (!attack && hit) ++false_positives;
    report.outcomes.push_back(std::move(outcome));
  };
  for (std::size_t i = 0; i < normal.size(); ++i) evaluate(normal[i], false, i);
  for (std::size_t i = 0; i < attacks.size(); ++i) evaluate(attacks[i], true, i);
  if (!attacks.empty()) {
    report.tpr = static_cast<double>(detections) / static_cast<double>(attacks.size());
  }
  if (!normal.empty()) {
    report.fpr =
        static_cast<double>(false_positives) / static_cast<double>(normal.size());
  }
  return report;
}

}  // namespace gpuval
