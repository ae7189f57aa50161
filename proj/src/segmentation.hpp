#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "model.hpp"

namespace gpuval {

// Where to find kernel boundaries in a trace. The marker event is the atomic
// counter the boundary stub hammers; a burst's total count doubles as a
// covert word naming the launch configuration.
struct MarkerSpec {
  std::string marker_event;
  std::uint64_t presence_threshold = 1;  // per-window sum that counts as "on"
  std::map<std::uint32_t, std::uint64_t> expected_amplitude;  // config_id -> total

  void validate() const;
};

struct MarkerBurst {
  std::size_t first_sample = 0;  // positions into trace.samples, inclusive
  std::size_t last_sample = 0;
  std::uint64_t total = 0;       // marker counts summed over the burst
};

// Maximal runs of consecutive samples whose summed marker count reaches the
// presence threshold. Raises marker_event_absent when the trace's group does
// not carry the marker event.
std::vector<MarkerBurst> detect_markers(const Trace& trace, const MarkerSpec& spec);

struct SegmentSlice {
  std::size_t kernel_ordinal = 0;
  std::size_t begin = 0;  // sample positions strictly between the burst pair
  std::size_t end = 0;
  std::uint64_t open_total = 0;
  std::uint64_t close_total = 0;
};

// Pairs burst 2i with burst 2i+1 as the open/close boundaries of kernel i.
// Raises unpaired_marker on an odd burst count and segmentation_failure when
// a pair encloses no windows.
std::vector<SegmentSlice> split_segments(const Trace& trace,
                                         const std::vector<MarkerBurst>& bursts);

// Maps a burst total back to the launch configuration whose expected
// amplitude lies within relative tolerance epsilon. Exactly one candidate may
// qualify: none raises unknown_amplitude, several raise ambiguous_amplitude.
std::uint32_t decode_metadata(std::uint64_t total_count, const MarkerSpec& spec,
                              double epsilon_amplitude);

// detect + split + decode in one pass, resolving each kernel's metadata
// through the registry. The opening burst of each pair carries the word.
std::vector<Segment> segment_trace(const Trace& trace, const MarkerSpec& spec,
                                   const ConfigTable& table, double epsilon_amplitude);

}  // namespace gpuval
