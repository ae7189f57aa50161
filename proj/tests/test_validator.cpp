#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <vector>

#include "attacks.hpp"
#include "errors.hpp"
#include "golden.hpp"
#include "model.hpp"
#include "presets.hpp"
#include "sim.hpp"
#include "validator.hpp"

using namespace gpuval;

namespace {

struct Fixture {
  Preset preset = make_preset("vecadd");
  GoldenModel model;

  Fixture() {
    std::vector<Trace> traces;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
      traces.push_back(simulate(preset.program, preset.standard_group, preset.device,
                                preset.marker, NoiseSpec{}, seed));
    model = build_golden(traces, preset.marker, preset.policy, preset.configs);
  }

  Trace clean(std::uint64_t seed) const {
    return simulate(preset.program, preset.standard_group, preset.device, preset.marker,
                    NoiseSpec{}, seed);
  }
};

// Overwrites the body windows of `run` consecutive kernels with a shape the
// reference cannot match: rates migrate to a random-looking sawtooth.
Trace with_broken_kernels(const Fixture& fx, std::uint64_t seed, std::size_t first,
                          std::size_t run) {
  ProgramSpec program = fx.preset.program;
  for (std::size_t k = first; k < first + run; ++k) {
    auto& phases = program.kernels[k].profile.phases;
    phases.clear();
    for (std::size_t w = 0; w < 8; ++w) {
      Phase p;
      p.duration_windows = 1;
      const double level = (w % 2 == 0) ? 40.0 : 400.0;
      p.rates = {{"inst_executed", level},
                 {"global_load", 500.0 - level},
                 {"global_store", level}};
      p.dispersion = 0.0;
      phases.push_back(p);
    }
  }
  return simulate(program, fx.preset.standard_group, fx.preset.device, fx.preset.marker,
                  NoiseSpec{}, seed);
}

}  // namespace

TEST_CASE("clean traces come back benign with all segments matched") {
  const Fixture fx;
  const Verdict v = validate_trace(fx.clean(333), fx.model);
  CHECK(v.decision == Decision::benign);
  CHECK(v.per_segment.size() == fx.preset.program.kernels.size());
  for (const SegmentCheck& check : v.per_segment) {
    CHECK(check.matched);
    CHECK(check.coefficient > 0.9);
  }
  CHECK(v.max_consecutive_rejections == 0);
  CHECK_FALSE(v.flagged_kernel.has_value());
  CHECK_FALSE(v.divergence_ordinal.has_value());
}

TEST_CASE("rejection runs below the policy length stay benign") {
  const Fixture fx;
  // Three broken kernels in a row, policy needs four.
  const Trace t = with_broken_kernels(fx, 41, 2, 3);
  const Verdict v = validate_trace(t, fx.model);
  CHECK(v.decision == Decision::benign);
  CHECK(v.max_consecutive_rejections == 3);
  CHECK_FALSE(v.flagged_kernel.has_value());
}

TEST_CASE("a run meeting the policy length convicts and flags its start") {
  const Fixture fx;
  const Trace t = with_broken_kernels(fx, 42, 2, 4);
  const Verdict v = validate_trace(t, fx.model);
  CHECK(v.decision == Decision::compromised);
  CHECK(v.max_consecutive_rejections == 4);
  REQUIRE(v.flagged_kernel.has_value());
  CHECK(*v.flagged_kernel == 2);
}

TEST_CASE("the flag names the first qualifying run") {
  const Fixture fx;
  // Two runs: length 4 at kernel 0 and length 4 at kernel 4 merge into 8.
  const Trace t = with_broken_kernels(fx, 43, 0, 8);
  const Verdict v = validate_trace(t, fx.model);
  CHECK(v.decision == Decision::compromised);
  CHECK(v.max_consecutive_rejections == 8);
  REQUIRE(v.flagged_kernel.has_value());
  CHECK(*v.flagged_kernel == 0);
}

TEST_CASE("a custom policy can lower the run length") {
  const Fixture fx;
  const Trace t = with_broken_kernels(fx, 44, 5, 2);
  ValidationPolicy strict = fx.model.policy;
  strict.reject_run_len = 2;
  const Verdict relaxed = validate_trace(t, fx.model);
  CHECK(relaxed.decision == Decision::benign);
  const Verdict tight = validate_trace(t, fx.model, strict);
  CHECK(tight.decision == Decision::compromised);
  REQUIRE(tight.flagged_kernel.has_value());
  CHECK(*tight.flagged_kernel == 5);
}

TEST_CASE("tau sweep: impossible threshold rejects everything") {
  const Fixture fx;
  ValidationPolicy impossible = fx.model.policy;
  impossible.tau_corr = 1.0;  // strict >: nothing can pass
  const Verdict v = validate_trace(fx.clean(55), fx.model, impossible);
  CHECK(v.decision == Decision::compromised);
  CHECK(v.max_consecutive_rejections == fx.preset.program.kernels.size());
  ValidationPolicy generous = fx.model.policy;
  generous.tau_corr = -1.0;
  CHECK(validate_trace(fx.clean(56), fx.model, generous).decision == Decision::benign);
}

TEST_CASE("a skipped kernel is incomplete with the divergence ordinal set") {
  const Fixture fx;
  AttackSpec spec;
  spec.kind = AttackKind::kernel_skip;
  spec.target_kernel = 3;
  const ProgramSpec skipped = inject_kernel_skip(fx.preset.program, spec);
  const Trace t = simulate(skipped, fx.preset.standard_group, fx.preset.device,
                           fx.preset.marker, NoiseSpec{}, 60);
  const Verdict v = validate_trace(t, fx.model);
  CHECK(v.decision == Decision::incomplete);
  REQUIRE(v.divergence_ordinal.has_value());
  // vecadd launches one config eight times; the loss shows as a short tail.
  CHECK(*v.divergence_ordinal == fx.model.sequence.size() - 1);
  CHECK_FALSE(v.diagnostic.empty());
}

TEST_CASE("undecodable markers are incomplete, not crashes") {
  const Fixture fx;
  Trace t = fx.clean(61);
  // Scale every marker window's counts so the burst total decodes nowhere.
  const auto mark = *t.group.index_of(fx.preset.marker.marker_event);
  for (Sample& s : t.samples) {
    for (auto& v : s.values[mark]) v *= 3;
  }
  const Verdict v = validate_trace(t, fx.model);
  CHECK(v.decision == Decision::incomplete);
  CHECK_FALSE(v.diagnostic.empty());
}

TEST_CASE("stream validator carries rejection runs across traces") {
  const Fixture fx;
  StreamValidator stream(fx.model);
  // Two broken kernels at the tail of the first trace, two at the head of
  // the second: only the carry makes four.
  const Trace first = with_broken_kernels(fx, 70, 6, 2);
  const Trace second = with_broken_kernels(fx, 71, 0, 2);
  const Verdict v1 = stream.next(first);
  CHECK(v1.decision == Decision::benign);
  CHECK(stream.pending_run() == 2);
  const Verdict v2 = stream.next(second);
  CHECK(v2.decision == Decision::compromised);
  REQUIRE(v2.flagged_kernel.has_value());
  CHECK(*v2.flagged_kernel == 0);

  stream.reset();
  CHECK(stream.pending_run() == 0);
  const Verdict v3 = stream.next(with_broken_kernels(fx, 72, 0, 2));
  CHECK(v3.decision == Decision::benign);

  // A benign trace clears the carry.
  StreamValidator fresh(fx.model);
  (void)fresh.next(with_broken_kernels(fx, 73, 6, 2));
  CHECK(fresh.pending_run() == 2);
  (void)fresh.next(fx.clean(74));
  CHECK(fresh.pending_run() == 0);
}

TEST_CASE("run_campaign counts detections on both sides") {
  const Fixture fx;
  std::vector<Trace> normal;
  for (std::uint64_t s = 200; s < 210; ++s) normal.push_back(fx.clean(s));
  std::vector<Trace> attacks;
  for (std::uint64_t s = 300; s < 305; ++s)
    attacks.push_back(with_broken_kernels(fx, s, 1, 5));
  const CampaignReport report = run_campaign(fx.model, normal, attacks);
  CHECK(report.normal_count == 10);
  CHECK(report.attack_count == 5);
  REQUIRE(report.tpr.has_value());
  CHECK(*report.tpr == 1.0);
  CHECK(report.fpr == 0.0);
  CHECK(report.outcomes.size() == 15);
  for (const TraceOutcome& o : report.outcomes) {
    if (o.attack) CHECK(o.verdict.decision == Decision::compromised);
    REQUIRE(o.min_coefficient.has_value());
  }

  const CampaignReport no_attack = run_campaign(fx.model, normal, {});
  CHECK_FALSE(no_attack.tpr.has_value());
}
