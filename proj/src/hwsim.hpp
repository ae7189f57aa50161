#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "model.hpp"
#include "segmentation.hpp"
#include "sim.hpp"

namespace gpuval {

// Cycle-level model of the on-chip validator: per-SM PMUs emit one packet per
// sampling window into small ring buffers, packets cross a shared
// token-bucket link, and an aggregation cache sums them per window before the
// comparison against preloaded reference windows.

inline constexpr std::size_t kHwMetricCount = 8;

using MetricArray = std::array<std::uint32_t, kHwMetricCount>;

struct PmuPacket {
  std::uint32_t sm_id = 0;
  std::uint32_t ts = 0;  // window ordinal, namespaced by kernel
  MetricArray metrics{};
};

// One per-SM monitoring unit: eight 32-bit saturating counters behind eight
// 8-to-1 line multiplexers, a window-cycle register and an output ring of
// eight packet slots. Emission into a full ring fails so the caller can model
// backpressure stalls.
class Pmu {
 public:
  static constexpr std::size_t kRingEntries = 8;

  explicit Pmu(std::uint32_t sm_id);

  // selector[i] names the event line feeding counter i.
  void configure_mux(const std::array<std::uint8_t, kHwMetricCount>& selector);

  // One clock tick: counter i advances when its selected line is asserted.
  void step(const std::array<bool, kHwMetricCount>& lines);

  // Batched equivalent of `cycles` ticks where line i is asserted
  // `asserted[i]` times (asserted[i] <= cycles). Order within the window does
  // not matter for the counts.
  void accumulate(const std::array<std::uint32_t, kHwMetricCount>& asserted,
                  std::uint32_t cycles);

  // Freeze at a window boundary (or kernel end, for a partial window): emits
  // a packet carrying the counter snapshot and resets the counters. Returns
  // false when the ring is full; counters stay frozen and the caller must
  // retry, counting the lost cycle as a stall.
  bool window_end(std::uint32_t ts);

  const PmuPacket* peek() const;
  PmuPacket pop();
  bool ring_empty() const { return ring_.empty(); }
  std::size_t ring_size() const { return ring_.size(); }
  bool overflowed() const { return overflow_; }
  const MetricArray& counters() const { return counters_; }

 private:
  std::uint32_t sm_id_;
  std::array<std::uint8_t, kHwMetricCount> mux_{};
  MetricArray counters_{};
  bool overflow_ = false;
  std::deque<PmuPacket> ring_;
};

struct WindowCheck {
  std::uint32_t ts = 0;
  MetricArray metrics{};
};

// Timestamp-tagged store that sums per-SM packets until the remaining-PMU
// countdown hits zero, then evicts the completed aggregate. Sums saturate at
// 2^32-1, which keeps the aggregate independent of arrival order.
class AggCache {
 public:
  explicit AggCache(std::size_t capacity);

  // active_count is the number of PMUs the dispatcher armed for this window.
  // Throws errc::cache_capacity_exceeded when a new window would evict an
  // incomplete entry.
  std::optional<WindowCheck> receive(const PmuPacket& packet, std::uint32_t active_count);

  std::size_t live_entries() const { return entries_.size(); }

 private:
  struct Entry {
    MetricArray acc{};
    std::uint32_t act = 0;
  };
  std::size_t capacity_;
  std::map<std::uint32_t, Entry> entries_;
};

struct HwConfig {
  std::uint32_t num_sms = 15;
  std::uint32_t window_cycles = 2048;
  // Packets per cycle on the shared link; infinity removes contention.
  double link_bandwidth = 0.04;
  std::uint32_t link_latency = 20;
  double background_traffic = 0.01;  // workload DMA packets per cycle
  std::size_t cache_entries = 8;
  std::size_t fetch_entries = 4;
  double tau_scale = 6.0;
  // Run-to-run input variation: each body window's rates move together by a
  // bounded factor drawn uniformly from [-noise_rel, +noise_rel]. The bound
  // is what makes a tau_scale x MAD threshold safe against false flags.
  double noise_rel = 0.02;
  // Channels are expressed in units of (golden mean / dtw_scale) before the
  // warping-distance comparison.
  double dtw_scale = 14.0;

  void validate() const;
};

using AggregateSeries = std::vector<MetricArray>;  // one aggregate per window

struct HwGolden {
  std::vector<std::string> kernel_names;
  std::vector<AggregateSeries> windows;                          // medians per kernel
  std::vector<std::vector<std::array<double, kHwMetricCount>>> spread;  // per-window MAD
  std::array<double, kHwMetricCount> tau{};  // tau_scale x worst-window MAD
};

struct HwFlag {
  std::size_t kernel = 0;
  std::uint32_t window = 0;  // ordinal within the kernel
  std::size_t metric = 0;    // first offending metric
};

struct HwKernelScore {
  std::string kernel_name;
  double dtw = 1.0;
};

struct HwRunResult {
  std::uint64_t cycles = 0;
  std::uint64_t stall_cycles = 0;
  std::uint64_t fetch_stall_cycles = 0;
  std::uint64_t packets_delivered = 0;
  bool overflow = false;
  std::optional<HwFlag> flag;
  std::vector<AggregateSeries> aggregates;  // per kernel, per window
  std::vector<HwKernelScore> per_kernel;    // filled on validation runs
  // Conservation bookkeeping: per SM, the asserted-cycle totals the driver
  // produced and the metric totals the PMU emitted.
  std::vector<std::array<std::uint64_t, kHwMetricCount>> driven_totals;
  std::vector<std::array<std::uint64_t, kHwMetricCount>> emitted_totals;
};

// Reference build: median aggregate and MAD per window over the given seeds,
// thresholds tau_m = tau_scale x (largest window MAD of metric m).
HwGolden build_hw_golden(const ProgramSpec& program, const EventGroup& group,
                         const MarkerSpec& marker, const HwConfig& cfg,
                         const std::vector<std::uint64_t>& seeds);

// Drives the program through PMUs, link and validator. golden == nullptr runs
// the profiling configuration (packets DMA to memory at the same link cost,
// nothing is checked); with a golden model the validator fetches reference
// windows over the same link and compares every completed aggregate,
// halting on the first flag. Same seed, same result, byte for byte.
HwRunResult run_hwsim(const ProgramSpec& program, const EventGroup& group,
                      const MarkerSpec& marker, const HwConfig& cfg, std::uint64_t seed,
                      const HwGolden* golden);

// Warping-distance similarity per kernel between observed aggregates and the
// reference windows, each channel expressed in units of its reference mean
// over dtw_scale. Runs that halted early can score their partial aggregates
// from a separate profiling pass instead.
std::vector<HwKernelScore> hw_dtw_scores(const HwGolden& golden,
                                         const std::vector<AggregateSeries>& observed,
                                         double dtw_scale);

}  // namespace gpuval
