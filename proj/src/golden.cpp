#include "golden.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace gpuval {

namespace {

double median_of(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::size_t lower_median(std::vector<std::size_t> values) {
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

}  // namespace

void ValidationPolicy::validate() const {
  if (!(tau_corr >= -1.0 && tau_corr <= 1.0))
    raise(errc::invalid_argument, "tau_corr must lie in [-1, 1]");
  if (reject_run_len == 0) raise(errc::invalid_argument, "reject_run_len must be at least 1");
  if (!(epsilon_amplitude >= 0.0))
    raise(errc::invalid_argument, "epsilon_amplitude must be non-negative");
  if (marker_threshold == 0) raise(errc::invalid_argument, "marker_threshold must be at least 1");
}

Series resample_series(const Series& series, std::size_t target_len) {
  if (target_len == 0) raise(errc::invalid_argument, "cannot resample to length 0");
  std::size_t len = series_length(series);
  if (len == 0) raise(errc::invalid_argument, "cannot resample an empty series");
  Series out(series.size(), std::vector<double>(target_len, 0.0));
  for (std::size_t ch = 0; ch < series.size(); ++ch) {
    for (std::size_t t = 0; t < target_len; ++t) {
      double pos = target_len == 1
                       ? static_cast<double>(len - 1) / 2.0
                       : static_cast<double>(t) * static_cast<double>(len - 1) /
                             static_cast<double>(target_len - 1);
      auto lo = static_cast<std::size_t>(pos);
      if (lo >= len - 1) {
        out[ch][t] = series[ch][len - 1];
      } else {
        double frac = pos - static_cast<double>(lo);
        out[ch][t] = series[ch][lo] * (1.0 - frac) + series[ch][lo + 1] * frac;
      }
    }
  }
  return out;
}

GoldenModel build_golden(const std::vector<Trace>& traces, const MarkerSpec& marker,
                         const ValidationPolicy& policy, const ConfigTable& table) {
  policy.validate();
  if (traces.empty()) raise(errc::invalid_argument, "golden build needs at least one trace");

  GoldenModel model;
  model.group = traces.front().group;
  model.device = traces.front().device;
  model.marker = marker;
  model.policy = policy;
  model.configs = table;

  // config id -> flattened segment series, pooled across traces and ordinals.
  std::map<std::uint32_t, std::vector<Series>> pools;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const Trace& trace = traces[t];
    if (!(trace.group == model.group))
      raise(errc::invalid_argument, "golden traces must share one event group");
    std::vector<Segment> segments =
        segment_trace(trace, marker, table, policy.epsilon_amplitude);
    std::vector<std::uint32_t> sequence;
    sequence.reserve(segments.size());
    for (const Segment& segment : segments) sequence.push_back(segment.meta.config_id);
    if (t == 0) {
      model.sequence = sequence;
    } else if (sequence != model.sequence) {
      raise(errc::inconsistent_kernel_sequence,
            "trace " + std::to_string(t) + " segments into a different kernel sequence");
    }
    for (const Segment& segment : segments)
      pools[segment.meta.config_id].push_back(
          flatten(segment, model.group, Reduction::sum_instances));
  }

  for (auto& [config_id, pool] : pools) {
    std::vector<std::size_t> lengths;
    lengths.reserve(pool.size());
    for (const Series& series : pool) lengths.push_back(series_length(series));
    std::size_t target_len = lower_median(lengths);

    std::vector<Series> aligned;
    aligned.reserve(pool.size());
    for (const Series& series : pool) aligned.push_back(resample_series(series, target_len));

    ReferenceSegment ref;
    ref.config_id = config_id;
    ref.support = aligned.size();
    std::size_t channels = aligned.front().size();
    ref.series.assign(channels, std::vector<double>(target_len, 0.0));
    ref.per_window_spread.assign(channels, std::vector<double>(target_len, 0.0));
    std::vector<double> column(aligned.size());
    std::vector<double> deviations(aligned.size());
    for (std::size_t ch = 0; ch < channels; ++ch) {
      for (std::size_t w = 0; w < target_len; ++w) {
        for (std::size_t s = 0; s < aligned.size(); ++s) column[s] = aligned[s][ch][w];
        double med = median_of(column);
        ref.series[ch][w] = med;
        for (std::size_t s = 0; s < aligned.size(); ++s)
          deviations[s] = std::abs(aligned[s][ch][w] - med);
        ref.per_window_spread[ch][w] = median_of(deviations);
      }
    }
    model.references.emplace(config_id, std::move(ref));
  }
  return model;
}

const ReferenceSegment& select_reference(const GoldenModel& model, std::uint32_t config_id) {
  auto it = model.references.find(config_id);
  if (it == model.references.end())
    raise(errc::no_reference_for_config,
          "model holds no reference for config " + std::to_string(config_id));
  return it->second;
}

}  // namespace gpuval
