#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "attacks.hpp"
#include "errors.hpp"
#include "hwsim.hpp"
#include "model.hpp"
#include "presets.hpp"

using namespace gpuval;

namespace {

HwConfig small_config() {
  HwConfig cfg;
  cfg.num_sms = 15;
  cfg.window_cycles = 2048;
  cfg.link_bandwidth = 0.04;
  cfg.link_latency = 20;
  cfg.background_traffic = 0.01;
  cfg.cache_entries = 8;
  cfg.fetch_entries = 4;
  return cfg;
}

struct HwRig {
  Preset preset = make_preset("vecadd");
  HwConfig cfg = small_config();

  HwRunResult run(std::uint64_t seed, const HwGolden* golden = nullptr) const {
    return run_hwsim(preset.program, preset.memory_group, preset.marker, cfg, seed,
                     golden);
  }

  HwGolden golden(std::size_t seeds = 12) const {
    std::vector<std::uint64_t> s(seeds);
    for (std::size_t i = 0; i < seeds; ++i) s[i] = 1000 + i;
    return build_hw_golden(preset.program, preset.memory_group, preset.marker, cfg, s);
  }
};

}  // namespace

TEST_CASE("pmu step and accumulate agree under a permuted mux") {
  Pmu one(0), two(0);
  const std::array<std::uint8_t, kHwMetricCount> mux{3, 1, 0, 2, 7, 6, 5, 4};
  one.configure_mux(mux);
  two.configure_mux(mux);

  std::mt19937_64 rng(5);
  std::array<std::uint32_t, kHwMetricCount> asserted{};
  const std::uint32_t cycles = 64;
  for (auto& a : asserted) a = static_cast<std::uint32_t>(rng() % (cycles + 1));

  // Drive `one` cycle by cycle with each line high `asserted[line]` times.
  for (std::uint32_t c = 0; c < cycles; ++c) {
    std::array<bool, kHwMetricCount> lines{};
    for (std::size_t l = 0; l < kHwMetricCount; ++l) lines[l] = c < asserted[l];
    one.step(lines);
  }
  two.accumulate(asserted, cycles);
  CHECK(one.counters() == two.counters());
  // Counter i follows its selected line, not its own slot.
  CHECK(two.counters()[0] == asserted[3]);
  CHECK(two.counters()[4] == asserted[7]);

  std::array<std::uint32_t, kHwMetricCount> overdriven{};
  overdriven[2] = cycles + 1;
  CHECK_THROWS_AS(two.accumulate(overdriven, cycles), Error);
  std::array<std::uint8_t, kHwMetricCount> bad_mux{};
  bad_mux[0] = kHwMetricCount;
  CHECK_THROWS_AS(one.configure_mux(bad_mux), Error);
}

TEST_CASE("pmu counters saturate and latch the overflow bit") {
  Pmu pmu(1);
  const std::uint32_t big = std::numeric_limits<std::uint32_t>::max();
  std::array<std::uint32_t, kHwMetricCount> full{};
  full[0] = big;
  pmu.accumulate(full, big);
  CHECK(pmu.counters()[0] == big);
  CHECK_FALSE(pmu.overflowed());
  std::array<std::uint32_t, kHwMetricCount> one{};
  one[0] = 1;
  pmu.accumulate(one, 1);
  CHECK(pmu.counters()[0] == big);  // saturated, not wrapped
  CHECK(pmu.overflowed());
}

TEST_CASE("pmu ring holds eight packets and freezes on pressure") {
  Pmu pmu(2);
  std::array<std::uint32_t, kHwMetricCount> inc{};
  inc[1] = 7;
  for (std::uint32_t w = 0; w < Pmu::kRingEntries; ++w) {
    pmu.accumulate(inc, 7);
    CHECK(pmu.window_end(w));
  }
  CHECK(pmu.ring_size() == Pmu::kRingEntries);

  pmu.accumulate(inc, 7);
  CHECK_FALSE(pmu.window_end(8));  // full: counters stay frozen
  CHECK(pmu.counters()[1] == 7);

  const PmuPacket oldest = pmu.pop();
  CHECK(oldest.ts == 0);
  CHECK(oldest.metrics[1] == 7);
  CHECK(pmu.window_end(8));  // retry succeeds with the frozen snapshot
  CHECK(pmu.counters()[1] == 0);

  // Packets drain in emission order.
  CHECK(pmu.peek()->ts == 1);
}

TEST_CASE("aggregation matches a direct sum under random arrival orders") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint32_t sms = 2 + rng() % 12;
    std::vector<PmuPacket> packets;
    std::array<std::uint64_t, kHwMetricCount> expected{};
    for (std::uint32_t s = 0; s < sms; ++s) {
      PmuPacket p;
      p.sm_id = s;
      p.ts = 77;
      for (auto& m : p.metrics) m = static_cast<std::uint32_t>(rng() % 100000);
      for (std::size_t m = 0; m < kHwMetricCount; ++m) expected[m] += p.metrics[m];
      packets.push_back(p);
    }
    std::shuffle(packets.begin(), packets.end(), rng);

    AggCache cache(4);
    std::optional<WindowCheck> done;
    for (std::size_t i = 0; i < packets.size(); ++i) {
      auto r = cache.receive(packets[i], sms);
      if (i + 1 < packets.size()) {
        CHECK_FALSE(r.has_value());  // never completes early
      } else {
        REQUIRE(r.has_value());
        done = r;
      }
    }
    CHECK(cache.live_entries() == 0);
    for (std::size_t m = 0; m < kHwMetricCount; ++m)
      CHECK(done->metrics[m] == expected[m]);
  }
}

TEST_CASE("aggregation sums saturate instead of wrapping") {
  AggCache cache(2);
  PmuPacket a;
  a.ts = 5;
  a.metrics[0] = 0xffff0000u;
  PmuPacket b = a;
  b.sm_id = 1;
  b.metrics[0] = 0x00020000u;
  CHECK_FALSE(cache.receive(a, 2).has_value());
  const auto done = cache.receive(b, 2);
  REQUIRE(done.has_value());
  CHECK(done->metrics[0] == 0xffffffffu);
}

TEST_CASE("a full cache refuses to evict incomplete windows") {
  AggCache cache(2);
  PmuPacket p;
  for (std::uint32_t ts = 0; ts < 2; ++ts) {
    p.ts = ts;
    CHECK_FALSE(cache.receive(p, 3).has_value());
  }
  CHECK(cache.live_entries() == 2);
  p.ts = 9;
  try {
    cache.receive(p, 3);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::cache_capacity_exceeded);
  }
}

TEST_CASE("interleaved windows complete independently") {
  AggCache cache(4);
  PmuPacket p;
  // Window 1 gets its two packets around window 2's first.
  p.ts = 1;
  p.sm_id = 0;
  p.metrics[2] = 10;
  CHECK_FALSE(cache.receive(p, 2).has_value());
  p.ts = 2;
  p.metrics[2] = 99;
  CHECK_FALSE(cache.receive(p, 2).has_value());
  p.ts = 1;
  p.sm_id = 1;
  p.metrics[2] = 5;
  const auto done = cache.receive(p, 2);
  REQUIRE(done.has_value());
  CHECK(done->ts == 1);
  CHECK(done->metrics[2] == 15);
  CHECK(cache.live_entries() == 1);
}

TEST_CASE("hw runs are deterministic per seed") {
  const HwRig rig;
  const HwRunResult a = rig.run(42);
  const HwRunResult b = rig.run(42);
  CHECK(a.cycles == b.cycles);
  CHECK(a.stall_cycles == b.stall_cycles);
  CHECK(a.packets_delivered == b.packets_delivered);
  CHECK(a.aggregates == b.aggregates);

  const HwRunResult c = rig.run(43);
  CHECK(c.aggregates != a.aggregates);  // noise_rel moves body windows
}

TEST_CASE("per-sm driven and emitted totals agree") {
  const HwRig rig;
  const HwRunResult r = rig.run(7);
  CHECK_FALSE(r.overflow);
  REQUIRE(r.driven_totals.size() == rig.cfg.num_sms);
  REQUIRE(r.emitted_totals.size() == rig.cfg.num_sms);
  for (std::size_t s = 0; s < r.driven_totals.size(); ++s) {
    CHECK(r.driven_totals[s] == r.emitted_totals[s]);
  }
  // Something was actually driven.
  std::uint64_t grand = 0;
  for (const auto& per_sm : r.driven_totals)
    for (auto v : per_sm) grand += v;
  CHECK(grand > 0);
}

TEST_CASE("aggregates carry every planned window") {
  const HwRig rig;
  const HwRunResult r = rig.run(3);
  REQUIRE(r.aggregates.size() == rig.preset.program.kernels.size());
  for (std::size_t k = 0; k < r.aggregates.size(); ++k) {
    // marker + body + marker
    CHECK(r.aggregates[k].size() ==
          rig.preset.program.kernels[k].profile.body_windows() + 2);
  }
}

TEST_CASE("clean runs never flag against their own golden") {
  const HwRig rig;
  const HwGolden golden = rig.golden();
  for (std::uint64_t seed : {5000, 5001, 5002}) {
    const HwRunResult r = rig.run(seed, &golden);
    CHECK_FALSE(r.flag.has_value());
    REQUIRE_FALSE(r.per_kernel.empty());
    for (const HwKernelScore& score : r.per_kernel) CHECK(score.dtw > 0.5);
  }
}

TEST_CASE("an attacked run flags and halts") {
  const HwRig rig;
  const HwGolden golden = rig.golden();
  AttackSpec spec;
  spec.kind = AttackKind::buffer_overflow;
  spec.magnitude = 4.0;
  spec.seed = 9;
  const ProgramSpec attacked =
      inject_buffer_overflow(rig.preset.program, rig.preset.memory_group, spec, 1.0);
  const HwRunResult hit = run_hwsim(attacked, rig.preset.memory_group, rig.preset.marker,
                                    rig.cfg, 6000, &golden);
  REQUIRE(hit.flag.has_value());
  CHECK(hit.flag->kernel < rig.preset.program.kernels.size());

  const HwRunResult full = run_hwsim(attacked, rig.preset.memory_group, rig.preset.marker,
                                     rig.cfg, 6000, nullptr);
  CHECK(hit.cycles <= full.cycles);  // validation halts at the flag
}

TEST_CASE("infinite bandwidth removes link stalls") {
  HwRig rig;
  rig.cfg.link_bandwidth = std::numeric_limits<double>::infinity();
  rig.cfg.background_traffic = 0.0;
  const HwRunResult off = rig.run(1);
  const HwGolden golden = rig.golden();
  const HwRunResult on = rig.run(1, &golden);
  CHECK(off.stall_cycles == 0);
  CHECK(on.stall_cycles == 0);
  CHECK(on.fetch_stall_cycles == 0);
  CHECK(on.cycles == off.cycles);
}

TEST_CASE("hw config validation rejects broken knobs") {
  HwConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  HwConfig zero_bw = cfg;
  zero_bw.link_bandwidth = 0.0;
  CHECK_THROWS_AS(zero_bw.validate(), Error);
  HwConfig no_cache = cfg;
  no_cache.cache_entries = 0;
  CHECK_THROWS_AS(no_cache.validate(), Error);
  HwConfig bad_dtw = cfg;
  bad_dtw.dtw_scale = 0.0;
  CHECK_THROWS_AS(bad_dtw.validate(), Error);
}

TEST_CASE("dtw scores separate clean from attacked aggregates") {
  const HwRig rig;
  const HwGolden golden = rig.golden();
  const HwRunResult clean = rig.run(8000);
  const auto clean_scores = hw_dtw_scores(golden, clean.aggregates, rig.cfg.dtw_scale);
  REQUIRE(clean_scores.size() == golden.kernel_names.size());
  for (const auto& s : clean_scores) CHECK(s.dtw > 0.5);

  AttackSpec spec;
  spec.kind = AttackKind::buffer_overflow;
  spec.magnitude = 4.0;
  spec.seed = 2;
  const ProgramSpec attacked =
      inject_buffer_overflow(rig.preset.program, rig.preset.memory_group, spec, 1.0);
  const HwRunResult bad = run_hwsim(attacked, rig.preset.memory_group, rig.preset.marker,
                                    rig.cfg, 8001, nullptr);
  const auto bad_scores = hw_dtw_scores(golden, bad.aggregates, rig.cfg.dtw_scale);
  double worst = 1.0;
  for (const auto& s : bad_scores) worst = std::min(worst, s.dtw);
  CHECK(worst < 0.1);
}
