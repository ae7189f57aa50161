#include "segmentation.hpp"

#include <cmath>
#include <cstdlib>

#include "errors.hpp"

namespace gpuval {

void MarkerSpec::validate() const {
  if (marker_event.empty()) raise(errc::invalid_argument, "marker event name is empty");
  if (presence_threshold == 0)
    raise(errc::invalid_argument, "presence threshold must be at least 1");
  for (const auto& [id, amplitude] : expected_amplitude) {
    if (amplitude < presence_threshold)
      raise(errc::invalid_argument,
            "amplitude for config " + std::to_string(id) + " sits below the threshold");
    for (const auto& [other_id, other] : expected_amplitude) {
      if (other_id != id && other == amplitude)
        raise(errc::invalid_argument,
              "configs " + std::to_string(id) + " and " + std::to_string(other_id) +
                  " share amplitude " + std::to_string(amplitude));
    }
  }
}

std::vector<MarkerBurst> detect_markers(const Trace& trace, const MarkerSpec& spec) {
  spec.validate();
  auto event = trace.group.index_of(spec.marker_event);
  if (!event)
    raise(errc::marker_event_absent,
          "trace group does not carry marker event '" + spec.marker_event + "'");

  std::vector<MarkerBurst> bursts;
  bool open = false;
  for (std::size_t w = 0; w < trace.samples.size(); ++w) {
    std::uint64_t sum = 0;
    for (std::uint64_t v : trace.samples[w].values[*event]) sum += v;
    if (sum >= spec.presence_threshold) {
      if (!open) {
        bursts.push_back(MarkerBurst{w, w, 0});
        open = true;
      }
      bursts.back().last_sample = w;
      bursts.back().total += sum;
    } else {
      open = false;
    }
  }
  return bursts;
}

std::vector<SegmentSlice> split_segments(const Trace& trace,
                                         const std::vector<MarkerBurst>& bursts) {
  if (bursts.size() % 2 != 0)
    raise(errc::unpaired_marker,
          std::to_string(bursts.size()) + " marker bursts cannot be paired");
  std::vector<SegmentSlice> slices;
  for (std::size_t k = 0; 2 * k < bursts.size(); ++k) {
    const MarkerBurst& open = bursts[2 * k];
    const MarkerBurst& close = bursts[2 * k + 1];
    SegmentSlice slice;
    slice.kernel_ordinal = k;
    slice.begin = open.last_sample + 1;
    slice.end = close.first_sample;
    slice.open_total = open.total;
    slice.close_total = close.total;
    if (slice.begin >= slice.end)
      raise(errc::segmentation_failure,
            "kernel " + std::to_string(k) + " has no windows between its markers");
    if (slice.end > trace.samples.size())
      raise(errc::segmentation_failure, "burst positions fall outside the trace");
    slices.push_back(slice);
  }
  return slices;
}

std::uint32_t decode_metadata(std::uint64_t total_count, const MarkerSpec& spec,
                              double epsilon_amplitude) {
  if (!(epsilon_amplitude >= 0.0))
    raise(errc::invalid_argument, "amplitude tolerance must be non-negative");
  bool found = false;
  std::uint32_t decoded = 0;
  for (const auto& [id, amplitude] : spec.expected_amplitude) {
    double deviation = std::abs(static_cast<double>(total_count) - static_cast<double>(amplitude));
    if (deviation <= epsilon_amplitude * static_cast<double>(amplitude)) {
      if (found)
        raise(errc::ambiguous_amplitude,
              "burst total " + std::to_string(total_count) + " fits configs " +
                  std::to_string(decoded) + " and " + std::to_string(id));
      found = true;
      decoded = id;
    }
  }
  if (!found)
    raise(errc::unknown_amplitude,
          "burst total " + std::to_string(total_count) + " matches no known amplitude");
  return decoded;
}

std::vector<Segment> segment_trace(const Trace& trace, const MarkerSpec& spec,
                                   const ConfigTable& table, double epsilon_amplitude) {
  std::vector<MarkerBurst> bursts = detect_markers(trace, spec);
  std::vector<SegmentSlice> slices = split_segments(trace, bursts);
  std::vector<Segment> segments;
  segments.reserve(slices.size());
  for (const SegmentSlice& slice : slices) {
    std::uint32_t config_id = decode_metadata(slice.open_total, spec, epsilon_amplitude);
    Segment segment;
    segment.kernel_ordinal = slice.kernel_ordinal;
    segment.meta = metadata_for(config_id, table);
    segment.samples.assign(trace.samples.begin() + static_cast<std::ptrdiff_t>(slice.begin),
                           trace.samples.begin() + static_cast<std::ptrdiff_t>(slice.end));
    segments.push_back(std::move(segment));
  }
  return segments;
}

}  // namespace gpuval
