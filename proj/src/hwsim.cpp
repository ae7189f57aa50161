#include "hwsim.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "rng.hpp"
#include "similarity.hpp"

namespace gpuval {

namespace {

constexpr std::uint32_t kCounterMax = 0xffffffffu;
constexpr std::uint32_t kTsKernelShift = 20;
constexpr std::uint32_t kTsWindowMask = (1u << kTsKernelShift) - 1;

std::uint32_t saturating_add(std::uint32_t a, std::uint32_t b, bool* overflow) {
  if (a > kCounterMax - b) {
    if (overflow) *overflow = true;
    return kCounterMax;
  }
  return a + b;
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// One sampling window of the per-SM schedule. Marker windows are
// deterministic; body windows carry per-metric mean rates.
struct HwWindow {
  bool marker = false;
  std::uint64_t amplitude = 0;
  std::array<double, kHwMetricCount> rates{};
};

struct KernelPlan {
  std::string name;
  std::vector<HwWindow> windows;
};

std::vector<KernelPlan> plan_windows(const ProgramSpec& program, const EventGroup& group,
                                     const MarkerSpec& marker) {
  for (const auto& kernel : program.kernels) kernel.profile.validate();
  marker.validate();
  if (!group.index_of(marker.marker_event)) {
    raise(errc::marker_event_absent,
          "marker event '" + marker.marker_event + "' is not in the counter group");
  }
  if (group.events().size() > kHwMetricCount) {
    raise(errc::invalid_argument, "counter group exceeds the PMU's eight metric slots");
  }
  std::vector<KernelPlan> plans;
  for (const auto& kernel : program.kernels) {
    const auto amp_it = marker.expected_amplitude.find(kernel.meta.config_id);
    if (amp_it == marker.expected_amplitude.end()) {
      raise(errc::unknown_configuration,
            "no marker amplitude for config " + std::to_string(kernel.meta.config_id));
    }
    KernelPlan plan;
    plan.name = kernel.profile.name;
    HwWindow burst;
    burst.marker = true;
    burst.amplitude = amp_it->second;
    plan.windows.push_back(burst);
    for (const auto& phase : kernel.profile.phases) {
      HwWindow window;
      for (std::size_t m = 0; m < group.events().size(); ++m) {
        auto it = phase.rates.find(group.events()[m].name);
        window.rates[m] = it != phase.rates.end() ? std::max(0.0, it->second) : 0.0;
      }
      for (std::uint64_t d = 0; d < phase.duration_windows; ++d) {
        plan.windows.push_back(window);
      }
    }
    plan.windows.push_back(burst);
    if (plan.windows.size() > kTsWindowMask) {
      raise(errc::invalid_argument, "kernel too long for the window ordinal field");
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

// Drawn counts for one window. All SMs share the same body counts (input
// variation moves them together, which keeps the aggregate's deviation inside
// a provable bound); marker bursts split the amplitude with the remainder on
// low SM ids.
struct WindowCounts {
  std::array<std::uint32_t, kHwMetricCount> base{};
  bool marker = false;
  std::size_t marker_channel = 0;
  std::uint32_t marker_remainder = 0;
};

using CountPlan = std::vector<std::vector<WindowCounts>>;  // per kernel, per window

CountPlan synth_counts(const std::vector<KernelPlan>& plans, const EventGroup& group,
                       const MarkerSpec& marker, const HwConfig& cfg,
                       std::uint64_t seed) {
  const auto marker_channel = *group.index_of(marker.marker_event);
  auto rng = make_stream(seed, "hwdrive", 0);
  std::uniform_real_distribution<double> jitter(-cfg.noise_rel, cfg.noise_rel);
  CountPlan counts(plans.size());
  for (std::size_t k = 0; k < plans.size(); ++k) {
    counts[k].resize(plans[k].windows.size());
    for (std::size_t w = 0; w < plans[k].windows.size(); ++w) {
      const auto& window = plans[k].windows[w];
      auto& out = counts[k][w];
      if (window.marker) {
        out.marker = true;
        out.marker_channel = marker_channel;
        out.base[marker_channel] = static_cast<std::uint32_t>(
            std::min<std::uint64_t>(window.amplitude / cfg.num_sms, cfg.window_cycles));
        out.marker_remainder =
            static_cast<std::uint32_t>(window.amplitude % cfg.num_sms);
        continue;
      }
      for (std::size_t m = 0; m < kHwMetricCount; ++m) {
        const double u = jitter(rng);
        if (window.rates[m] <= 0.0) continue;
        const auto drawn = std::llround(window.rates[m] * (1.0 + u));
        out.base[m] = static_cast<std::uint32_t>(std::clamp<long long>(
            drawn, 0, static_cast<long long>(cfg.window_cycles)));
      }
    }
  }
  return counts;
}

std::array<std::uint32_t, kHwMetricCount> counts_for_sm(const WindowCounts& wc,
                                                        std::uint32_t sm) {
  auto counts = wc.base;
  if (wc.marker && sm < wc.marker_remainder) ++counts[wc.marker_channel];
  return counts;
}

MetricArray aggregate_counts(const WindowCounts& wc, std::uint32_t num_sms) {
  MetricArray agg{};
  for (std::size_t m = 0; m < kHwMetricCount; ++m) {
    std::uint64_t total = static_cast<std::uint64_t>(wc.base[m]) * num_sms;
    if (wc.marker && m == wc.marker_channel) total += wc.marker_remainder;
    agg[m] = static_cast<std::uint32_t>(std::min<std::uint64_t>(total, kCounterMax));
  }
  return agg;
}

}  // namespace

Pmu::Pmu(std::uint32_t sm_id) : sm_id_(sm_id) {
  for (std::size_t i = 0; i < kHwMetricCount; ++i) {
    mux_[i] = static_cast<std::uint8_t>(i);
  }
}

void Pmu::configure_mux(const std::array<std::uint8_t, kHwMetricCount>& selector) {
  for (auto line : selector) {
    if (line >= kHwMetricCount) {
      raise(errc::invalid_argument, "mux selector names a nonexistent event line");
    }
  }
  mux_ = selector;
}

void Pmu::step(const std::array<bool, kHwMetricCount>& lines) {
  for (std::size_t i = 0; i < kHwMetricCount; ++i) {
    if (lines[mux_[i]]) counters_[i] = saturating_add(counters_[i], 1, &overflow_);
  }
}

void Pmu::accumulate(const std::array<std::uint32_t, kHwMetricCount>& asserted,
                     std::uint32_t cycles) {
  for (auto count : asserted) {
    if (count > cycles) {
      raise(errc::invalid_argument,
            "a one-bit line cannot assert more than once per cycle");
    }
  }
  for (std::size_t i = 0; i < kHwMetricCount; ++i) {
    counters_[i] = saturating_add(counters_[i], asserted[mux_[i]], &overflow_);
  }
}

bool Pmu::window_end(std::uint32_t ts) {
  if (ring_.size() >= kRingEntries) return false;
  PmuPacket packet;
  packet.sm_id = sm_id_;
  packet.ts = ts;
  packet.metrics = counters_;
  ring_.push_back(packet);
  counters_ = {};
  return true;
}

const PmuPacket* Pmu::peek() const { return ring_.empty() ? nullptr : &ring_.front(); }

PmuPacket Pmu::pop() {
  PmuPacket packet = ring_.front();
  ring_.pop_front();
  return packet;
}

AggCache::AggCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) raise(errc::invalid_argument, "aggregation cache needs capacity");
}

std::optional<WindowCheck> AggCache::receive(const PmuPacket& packet,
                                             std::uint32_t active_count) {
  if (active_count == 0) {
    raise(errc::invalid_argument, "a window needs at least one active PMU");
  }
  auto it = entries_.find(packet.ts);
  if (it == entries_.end()) {
    if (entries_.size() >= capacity_) {
      raise(errc::cache_capacity_exceeded,
            "window " + std::to_string(packet.ts) +
                " would evict an incomplete aggregate");
    }
    it = entries_.emplace(packet.ts, Entry{{}, active_count}).first;
  }
  auto& entry = it->second;
  for (std::size_t m = 0; m < kHwMetricCount; ++m) {
    entry.acc[m] = saturating_add(entry.acc[m], packet.metrics[m], nullptr);
  }
  --entry.act;
  if (entry.act > 0) return std::nullopt;
  WindowCheck check{packet.ts, entry.acc};
  entries_.erase(it);
  return check;
}

void HwConfig::validate() const {
  if (num_sms == 0) raise(errc::invalid_argument, "num_sms must be positive");
  if (window_cycles == 0) raise(errc::invalid_argument, "window_cycles must be positive");
  if (!(link_bandwidth > 0.0)) {
    raise(errc::invalid_argument, "link bandwidth must be positive");
  }
  if (background_traffic < 0.0) {
    raise(errc::invalid_argument, "background traffic cannot be negative");
  }
  if (cache_entries == 0 || fetch_entries == 0) {
    raise(errc::invalid_argument, "cache and fetch buffers need capacity");
  }
  if (tau_scale < 0.0 || noise_rel < 0.0 || dtw_scale <= 0.0) {
    raise(errc::invalid_argument, "scale parameters must be positive");
  }
}

HwGolden build_hw_golden(const ProgramSpec& program, const EventGroup& group,
                         const MarkerSpec& marker, const HwConfig& cfg,
                         const std::vector<std::uint64_t>& seeds) {
  cfg.validate();
  if (seeds.empty()) raise(errc::invalid_argument, "golden build needs seeds");
  const auto plans = plan_windows(program, group, marker);
  std::vector<CountPlan> runs;
  runs.reserve(seeds.size());
  for (auto seed : seeds) runs.push_back(synth_counts(plans, group, marker, cfg, seed));
  HwGolden golden;
  golden.tau = {};
  for (std::size_t k = 0; k < plans.size(); ++k) {
    golden.kernel_names.push_back(plans[k].name);
    AggregateSeries medians(plans[k].windows.size());
    std::vector<std::array<double, kHwMetricCount>> spreads(plans[k].windows.size());
    for (std::size_t w = 0; w < plans[k].windows.size(); ++w) {
      for (std::size_t m = 0; m < kHwMetricCount; ++m) {
        std::vector<double> values;
        values.reserve(runs.size());
        for (const auto& run : runs) {
          values.push_back(
              static_cast<double>(aggregate_counts(run[k][w], cfg.num_sms)[m]));
        }
        const double med = median_of(values);
        std::vector<double> deviations;
        deviations.reserve(values.size());
        for (double v : values) deviations.push_back(std::abs(v - med));
        const double mad = median_of(std::move(deviations));
        medians[w][m] = static_cast<std::uint32_t>(
            std::min<double>(static_cast<double>(std::llround(med)), kCounterMax));
        spreads[w][m] = mad;
        golden.tau[m] = std::max(golden.tau[m], cfg.tau_scale * mad);
      }
    }
    golden.windows.push_back(std::move(medians));
    golden.spread.push_back(std::move(spreads));
  }
  return golden;
}

namespace {

enum class PacketKind { pmu, fetch, background };

struct Delivery {
  std::uint64_t cycle = 0;
  PacketKind kind = PacketKind::pmu;
  PmuPacket packet;
  std::uint32_t fetch_ts = 0;
};

struct SmState {
  explicit SmState(std::uint32_t id) : pmu(id) {}
  Pmu pmu;
  std::deque<std::uint64_t> emit_cycles;  // ready time per ring entry
  std::size_t kernel = 0;
  std::size_t window = 0;
  std::uint64_t exec_remaining = 0;
  std::uint64_t gap_remaining = 0;
  bool emitting = false;
  bool done = false;
};

}  // namespace

HwRunResult run_hwsim(const ProgramSpec& program, const EventGroup& group,
                      const MarkerSpec& marker, const HwConfig& cfg, std::uint64_t seed,
                      const HwGolden* golden) {
  cfg.validate();
  const auto plans = plan_windows(program, group, marker);
  const auto counts = synth_counts(plans, group, marker, cfg, seed);
  const bool infinite_bw = std::isinf(cfg.link_bandwidth);
  const bool validating = golden != nullptr;
  const std::uint64_t gap_cycles =
      program.inter_kernel_gap * static_cast<std::uint64_t>(cfg.window_cycles);

  std::uint64_t total_windows = 0;
  std::vector<std::uint32_t> fetch_schedule;
  for (std::size_t k = 0; k < plans.size(); ++k) {
    total_windows += plans[k].windows.size();
    for (std::size_t w = 0; w < plans[k].windows.size(); ++w) {
      fetch_schedule.push_back(static_cast<std::uint32_t>((k << kTsKernelShift) | w));
    }
  }
  if (validating && golden->windows.size() != plans.size()) {
    raise(errc::golden_unavailable, "reference model does not cover this program");
  }

  HwRunResult result;
  result.aggregates.resize(plans.size());
  for (std::size_t k = 0; k < plans.size(); ++k) {
    result.aggregates[k].resize(plans[k].windows.size());
    if (validating && golden->windows[k].size() != plans[k].windows.size()) {
      raise(errc::golden_unavailable, "reference model does not cover this program");
    }
  }
  result.driven_totals.assign(cfg.num_sms, {});
  result.emitted_totals.assign(cfg.num_sms, {});

  std::vector<SmState> sms;
  sms.reserve(cfg.num_sms);
  for (std::uint32_t s = 0; s < cfg.num_sms; ++s) sms.emplace_back(s);

  // Loads the current window's counts into the PMU and starts its execution.
  auto start_window = [&](SmState& sm, std::uint32_t sm_id) {
    const auto asserted = counts_for_sm(counts[sm.kernel][sm.window], sm_id);
    sm.pmu.accumulate(asserted, cfg.window_cycles);
    for (std::size_t m = 0; m < kHwMetricCount; ++m) {
      result.driven_totals[sm_id][m] += asserted[m];
    }
    sm.exec_remaining = cfg.window_cycles;
  };

  // Emission at a window boundary; false when the ring pushes back.
  auto try_emit = [&](SmState& sm, std::uint32_t sm_id, std::uint64_t now) {
    const auto ts = static_cast<std::uint32_t>((sm.kernel << kTsKernelShift) | sm.window);
    if (!sm.pmu.window_end(ts)) {
      sm.emitting = true;
      return false;
    }
    sm.emitting = false;
    sm.emit_cycles.push_back(now);
    ++sm.window;
    if (sm.window == plans[sm.kernel].windows.size()) {
      sm.window = 0;
      ++sm.kernel;
      if (sm.kernel == plans.size()) {
        sm.done = true;
      } else if (gap_cycles > 0) {
        sm.gap_remaining = gap_cycles;
      } else {
        start_window(sm, sm_id);
      }
    } else {
      start_window(sm, sm_id);
    }
    return true;
  };

  const bool empty_program = plans.empty();
  for (std::uint32_t s = 0; s < cfg.num_sms; ++s) {
    if (empty_program) {
      sms[s].done = true;
    } else {
      start_window(sms[s], s);
    }
  }

  AggCache cache(cfg.cache_entries);
  std::deque<Delivery> deliveries;
  std::deque<WindowCheck> checks;
  // Pending link requests: fetches carry the window they ask for.
  std::deque<std::pair<std::uint64_t, std::uint32_t>> fetch_ready;
  std::deque<std::uint64_t> bg_ready;
  std::size_t next_fetch = 0;
  std::size_t fetch_outstanding = 0;
  std::map<std::uint32_t, MetricArray> fetch_filled;
  std::map<std::uint32_t, MetricArray> sink;  // off-mode DMA aggregation target
  std::uint64_t checks_done = 0;
  double tokens = 0.0;
  double bg_accumulator = 0.0;
  const double burst_cap = infinite_bw ? 0.0 : std::max(1.0, cfg.link_bandwidth);
  bool halted = false;

  constexpr std::uint64_t kCycleCap = 2000000000ull;
  std::uint64_t cycle = 0;
  for (; cycle < kCycleCap; ++cycle) {
    const bool executing =
        std::any_of(sms.begin(), sms.end(), [](const SmState& sm) { return !sm.done; });

    // Workload DMA traffic competes for the link while kernels execute.
    if (executing && cfg.background_traffic > 0.0) {
      bg_accumulator += cfg.background_traffic;
      while (bg_accumulator >= 1.0) {
        bg_ready.push_back(cycle);
        bg_accumulator -= 1.0;
      }
    }

    for (std::uint32_t s = 0; s < cfg.num_sms; ++s) {
      auto& sm = sms[s];
      if (sm.done) continue;
      if (sm.gap_remaining > 0) {
        if (--sm.gap_remaining == 0) start_window(sm, s);
        continue;
      }
      if (sm.emitting) {
        if (!try_emit(sm, s, cycle)) ++result.stall_cycles;
        continue;
      }
      if (--sm.exec_remaining == 0) {
        if (!try_emit(sm, s, cycle)) ++result.stall_cycles;
      }
    }

    // Validator prefetch keeps the fetch buffer busy with upcoming windows.
    if (validating && !halted) {
      while (fetch_filled.size() + fetch_outstanding < cfg.fetch_entries &&
             next_fetch < fetch_schedule.size()) {
        fetch_ready.emplace_back(cycle, fetch_schedule[next_fetch]);
        ++fetch_outstanding;
        ++next_fetch;
      }
    }

    // Link arbitration: FIFO by emission time, token-bucket bandwidth.
    if (!infinite_bw) tokens = std::min(tokens + cfg.link_bandwidth, burst_cap);
    while (infinite_bw || tokens >= 1.0) {
      std::uint64_t best_ready = 0;
      int best_rank = -1;
      std::uint32_t best_sm = 0;
      for (std::uint32_t s = 0; s < cfg.num_sms; ++s) {
        if (sms[s].emit_cycles.empty()) continue;
        const auto ready = sms[s].emit_cycles.front();
        if (best_rank < 0 || ready < best_ready) {
          best_ready = ready;
          best_rank = 0;
          best_sm = s;
        }
      }
      if (!fetch_ready.empty() &&
          (best_rank < 0 || fetch_ready.front().first < best_ready)) {
        best_ready = fetch_ready.front().first;
        best_rank = 1;
      }
      if (!bg_ready.empty() && (best_rank < 0 || bg_ready.front() < best_ready)) {
        best_rank = 2;
      }
      if (best_rank < 0) break;
      Delivery delivery;
      delivery.cycle = cycle + cfg.link_latency;
      if (best_rank == 0) {
        delivery.kind = PacketKind::pmu;
        delivery.packet = sms[best_sm].pmu.pop();
        sms[best_sm].emit_cycles.pop_front();
      } else if (best_rank == 1) {
        delivery.kind = PacketKind::fetch;
        delivery.fetch_ts = fetch_ready.front().second;
        fetch_ready.pop_front();
      } else {
        delivery.kind = PacketKind::background;
        bg_ready.pop_front();
      }
      deliveries.push_back(delivery);
      if (!infinite_bw) tokens -= 1.0;
    }

    // Arrivals.
    while (!deliveries.empty() && deliveries.front().cycle <= cycle) {
      const auto delivery = deliveries.front();
      deliveries.pop_front();
      ++result.packets_delivered;
      if (halted || delivery.kind == PacketKind::background) continue;
      if (delivery.kind == PacketKind::fetch) {
        const auto ts = delivery.fetch_ts;
        fetch_filled[ts] = golden->windows[ts >> kTsKernelShift][ts & kTsWindowMask];
        --fetch_outstanding;
        continue;
      }
      const auto& packet = delivery.packet;
      for (std::size_t m = 0; m < kHwMetricCount; ++m) {
        result.emitted_totals[packet.sm_id][m] += packet.metrics[m];
      }
      if (validating) {
        if (auto check = cache.receive(packet, cfg.num_sms)) {
          checks.push_back(*check);
        }
      } else {
        auto& acc = sink[packet.ts];
        for (std::size_t m = 0; m < kHwMetricCount; ++m) {
          acc[m] = saturating_add(acc[m], packet.metrics[m], nullptr);
        }
      }
    }

    // Comparison against the fetched reference windows, in window order. A
    // completed aggregate whose reference has not arrived yet waits.
    while (validating && !halted && !checks.empty()) {
      const auto& check = checks.front();
      auto it = fetch_filled.find(check.ts);
      if (it == fetch_filled.end()) {
        ++result.fetch_stall_cycles;
        break;
      }
      const auto k = check.ts >> kTsKernelShift;
      const auto w = check.ts & kTsWindowMask;
      result.aggregates[k][w] = check.metrics;
      std::optional<std::size_t> offending;
      for (std::size_t m = 0; m < kHwMetricCount; ++m) {
        const double deviation = std::abs(static_cast<double>(check.metrics[m]) -
                                          static_cast<double>(it->second[m]));
        if (deviation > golden->tau[m]) {
          offending = m;
          break;
        }
      }
      fetch_filled.erase(it);
      ++checks_done;
      checks.pop_front();
      if (offending) {
        result.flag = HwFlag{k, w, *offending};
        halted = true;
      }
    }

    if (halted) {
      result.cycles = cycle + 1;
      break;
    }
    const bool drained =
        std::all_of(sms.begin(), sms.end(),
                    [](const SmState& sm) {
                      return sm.done && sm.pmu.ring_empty();
                    }) &&
        deliveries.empty() && bg_ready.empty() && fetch_ready.empty();
    const bool finished =
        validating ? (drained && checks_done == total_windows) : drained;
    if (finished) {
      result.cycles = cycle + (empty_program ? 0 : 1);
      break;
    }
  }
  if (cycle >= kCycleCap) {
    raise(errc::invalid_argument, "hardware simulation exceeded the cycle cap");
  }

  for (const auto& sm : sms) {
    if (sm.pmu.overflowed()) result.overflow = true;
  }

  if (!validating) {
    // Off-mode aggregates come from the DMA sink; the saturating sum makes
    // them independent of delivery order.
    for (const auto& [ts, acc] : sink) {
      const auto k = ts >> kTsKernelShift;
      const auto w = ts & kTsWindowMask;
      if (k < result.aggregates.size() && w < result.aggregates[k].size()) {
        result.aggregates[k][w] = acc;
      }
    }
  }
  if (validating && !result.flag) {
    result.per_kernel = hw_dtw_scores(*golden, result.aggregates, cfg.dtw_scale);
  }
  return result;
}

std::vector<HwKernelScore> hw_dtw_scores(const HwGolden& golden,
                                         const std::vector<AggregateSeries>& observed,
                                         double dtw_scale) {
  std::vector<HwKernelScore> scores;
  DtwOptions options;
  options.znormalize = false;
  for (std::size_t k = 0; k < golden.windows.size() && k < observed.size(); ++k) {
    const auto& ref = golden.windows[k];
    const auto& obs = observed[k];
    HwKernelScore score;
    score.kernel_name = k < golden.kernel_names.size() ? golden.kernel_names[k] : "";
    if (ref.empty() || obs.empty()) {
      score.dtw = 0.0;
      scores.push_back(std::move(score));
      continue;
    }
    std::array<double, kHwMetricCount> denom{};
    for (std::size_t m = 0; m < kHwMetricCount; ++m) {
      double sum = 0.0;
      for (const auto& window : ref) sum += static_cast<double>(window[m]);
      denom[m] = std::max(1.0, sum / static_cast<double>(ref.size()));
    }
    Series a(kHwMetricCount), b(kHwMetricCount);
    for (std::size_t m = 0; m < kHwMetricCount; ++m) {
      a[m].reserve(obs.size());
      b[m].reserve(ref.size());
      for (const auto& window : obs) {
        a[m].push_back(static_cast<double>(window[m]) / denom[m] * dtw_scale);
      }
      for (const auto& window : ref) {
        b[m].push_back(static_cast<double>(window[m]) / denom[m] * dtw_scale);
      }
    }
    score.dtw = dtw_similarity(a, b, options).similarity;
    scores.push_back(std::move(score));
  }
  return scores;
}

}  // namespace gpuval
