#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "attacks.hpp"
#include "golden.hpp"
#include "hwsim.hpp"
#include "presets.hpp"
#include "validator.hpp"

namespace gpuval {

// Batch experiment drivers behind the CLI. Every driver derives one RNG seed
// per trace from a disjoint base offset per role (golden, normal, attack,
// noise cell, reference build, trial), so enlarging one set never shifts the
// draws of another and reruns are reproducible bit for bit.

double default_attack_magnitude(AttackKind kind);

// Which counter group watches which attack: code-tampering attacks show on
// the per-SM group, bandwidth attacks on the DRAM/L2 group.
const EventGroup& group_for_attack(const Preset& preset, AttackKind kind);

struct SwCampaignOptions {
  AttackKind attack = AttackKind::buffer_overflow;
  std::size_t golden_traces = 25;
  std::size_t normal_traces = 100;
  std::size_t attack_traces = 100;
  std::optional<double> magnitude;  // per-kind default when unset
  double payload_fraction = 0.5;
  std::size_t skip_target = 1;
  std::size_t keep_every = 1;  // decimates runtime traces, never golden ones
  std::vector<double> roc_taus = {0.50, 0.55, 0.60, 0.65, 0.70,
                                  0.75, 0.80, 0.85, 0.90, 0.95};
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0 sizes the pool from the hardware
};

struct RocPoint {
  double tau = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

struct SwCampaignResult {
  std::string preset;
  std::string attack;
  GoldenModel model;
  CampaignReport report;
  std::vector<RocPoint> roc;
};

// Build a model from clean traces, then score normal and attacked runs
// against it. keep_every > 1 decimates both runtime sets.
SwCampaignResult run_sw_campaign(const Preset& preset, const SwCampaignOptions& options);

struct NoiseStudyOptions {
  std::size_t golden_traces = 20;
  std::size_t traces_per_cell = 20;
  std::size_t max_concurrency = 3;
  double occupancy = 0.4;        // of each concurrent source
  double dispersion_scale = 1.0; // scales every count law; 0 makes runs exact
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

struct NoiseCell {
  std::string source;  // "baseline", "self" or "external"
  std::size_t concurrency = 0;
  std::size_t traces = 0;
  double mean_similarity = 0.0;
  double min_similarity = 0.0;
  double max_similarity = 0.0;
};

struct NoiseStudyResult {
  std::string preset;
  std::vector<NoiseCell> cells;  // baseline, then self 1..n, then external 1..n
};

// Mean shape similarity (warping distance on flattened segments against the
// model references) as concurrent tenants pile on. Levels share trace seeds
// across source kinds, so cells of equal concurrency are paired.
NoiseStudyResult run_noise_study(const Preset& preset, const NoiseStudyOptions& options);

struct HwStudyOptions {
  HwConfig config;
  std::size_t golden_seeds = 25;
  std::vector<double> bandwidth_sweep = {0.008, 0.016, 0.032, 0.064,
                                         std::numeric_limits<double>::infinity()};
  std::size_t attack_trials = 20;
  double attack_magnitude = 4.0;
  double payload_fraction = 1.0;
  std::uint64_t seed = 1;
};

struct HwSweepPoint {
  double bandwidth = 0.0;
  std::uint64_t cycles_on = 0;   // validation configuration
  std::uint64_t cycles_off = 0;  // profiling configuration, same seed
  double overhead = 0.0;         // cycles_on / cycles_off - 1
  bool flagged = false;
  double min_dtw = 1.0;  // lowest per-kernel score of the validation run
};

struct HwAttackTrial {
  std::uint64_t seed = 0;
  std::uint64_t cycles_on = 0;   // halted at the flag when one fires
  std::uint64_t cycles_off = 0;  // full profiled run of the same seed
  bool flagged = false;
  std::size_t kernel = 0;
  std::uint32_t window = 0;
  std::size_t metric = 0;
  // First window whose profiled aggregate strays past tau, recomputed from
  // an unchecked run of the same seed; a healthy validator flags exactly it.
  bool deviation_found = false;
  std::size_t expected_kernel = 0;
  std::uint32_t expected_window = 0;
  bool matches_expected = false;
  double min_dtw = 1.0;  // scored on the profiled aggregates
};

struct HwStudyResult {
  std::string preset;
  HwGolden golden;
  std::vector<HwSweepPoint> sweep;
  std::vector<HwAttackTrial> attacks;
};

// Overhead sweep over link bandwidths plus tampering trials at the default
// configuration. The tampered program is the payload injection at full
// coverage, so every body window deviates.
HwStudyResult run_hw_study(const Preset& preset, const HwStudyOptions& options);

// Runs fn(0..count-1) on a small pool; results must go into per-index slots.
// The first exception wins and is rethrown after the join.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace gpuval
