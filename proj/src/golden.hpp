#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "model.hpp"
#include "segmentation.hpp"
#include "similarity.hpp"

namespace gpuval {

struct ValidationPolicy {
  double tau_corr = 0.8;             // strict >
  std::size_t reject_run_len = 4;    // consecutive mismatches that convict
  double epsilon_amplitude = 0.1;    // relative tolerance for burst decode
  std::uint64_t marker_threshold = 1;

  void validate() const;
};

// Per-configuration reference shape: the element-wise median of the aligned
// golden segments plus their median absolute deviation, both [event][window].
struct ReferenceSegment {
  std::uint32_t config_id = 0;
  Series series;
  Series per_window_spread;
  std::size_t support = 0;
};

struct GoldenModel {
  EventGroup group;
  DeviceConfig device;
  MarkerSpec marker;
  ValidationPolicy policy;
  ConfigTable configs;
  std::vector<std::uint32_t> sequence;  // expected config id per kernel ordinal
  std::map<std::uint32_t, ReferenceSegment> references;
};

// Linear interpolation onto target_len equally spaced positions, channel by
// channel. target_len 1 samples the midpoint.
Series resample_series(const Series& series, std::size_t target_len);

// Builds references from clean traces. Every trace must segment into the same
// config-id sequence; per config the flattened segments are resampled to the
// pool's lower-median length and reduced element-wise to median and MAD. The
// result is invariant to the order of the input traces.
GoldenModel build_golden(const std::vector<Trace>& traces, const MarkerSpec& marker,
                         const ValidationPolicy& policy, const ConfigTable& table);

// Exact lookup; raises no_reference_for_config rather than interpolating.
const ReferenceSegment& select_reference(const GoldenModel& model, std::uint32_t config_id);

}  // namespace gpuval
