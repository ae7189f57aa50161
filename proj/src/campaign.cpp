#include "campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "errors.hpp"
#include "sim.hpp"
#include "similarity.hpp"

namespace gpuval {

namespace {

// Role bases for per-trace seeds; see the header comment.
constexpr std::uint64_t kNormalBase = 100000;
constexpr std::uint64_t kAttackBase = 200000;
constexpr std::uint64_t kNoiseBase = 300000;
constexpr std::uint64_t kNoiseCellStride = 10000;
constexpr std::uint64_t kHwGoldenBase = 400000;
constexpr std::uint64_t kHwSweepBase = 450000;
constexpr std::uint64_t kHwTrialBase = 500000;

unsigned pool_size(unsigned requested, std::size_t count) {
  unsigned n = requested != 0 ? requested
                              : std::min(8u, std::max(1u, std::thread::hardware_concurrency()));
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(1, count)));
}

Trace maybe_decimate(Trace trace, std::size_t keep_every) {
  if (keep_every <= 1) return trace;
  return sampling_decimate(trace, keep_every);
}

Trace make_attack_trace(const Preset& preset, const EventGroup& group,
                        AttackKind kind, double magnitude,
                        const SwCampaignOptions& options, std::uint64_t seed) {
  AttackSpec spec;
  spec.kind = kind;
  spec.magnitude = magnitude;
  spec.seed = seed;
  ProgramSpec program = preset.program;
  NoiseSpec noise;
  switch (kind) {
    case AttackKind::buffer_overflow:
      program = inject_buffer_overflow(program, group, spec, options.payload_fraction);
      break;
    case AttackKind::kernel_skip:
      spec.target_kernel = options.skip_target;
      program = inject_kernel_skip(program, spec);
      break;
    case AttackKind::rowhammer:
      noise.concurrent.push_back(make_rowhammer_source(program, group, spec));
      break;
    case AttackKind::slowdown: {
      auto injection = inject_slowdown(program, group, spec);
      program = std::move(injection.program);
      noise.concurrent.push_back(std::move(injection.noise));
      break;
    }
  }
  return simulate(program, group, preset.device, preset.marker, noise, seed);
}

KernelProfile scale_profile_dispersion(KernelProfile profile, double scale) {
  for (auto& phase : profile.phases) phase.dispersion *= scale;
  return profile;
}

ProgramSpec scale_program_dispersion(ProgramSpec program, double scale) {
  for (auto& kernel : program.kernels) {
    kernel.profile = scale_profile_dispersion(std::move(kernel.profile), scale);
  }
  return program;
}

// Mean over segments of the warping similarity against each segment's
// reference shape.
double trace_shape_score(const Trace& trace, const GoldenModel& model) {
  auto segments = segment_trace(trace, model.marker, model.configs,
                                model.policy.epsilon_amplitude);
  if (segments.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& segment : segments) {
    const auto& reference = select_reference(model, segment.meta.config_id);
    Series observed = flatten(segment, model.group, Reduction::sum_instances);
    sum += dtw_similarity(observed, reference.series).similarity;
  }
  return sum / static_cast<double>(segments.size());
}

}  // namespace

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
  const unsigned workers = pool_size(threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (error) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& thread : pool) thread.join();
  if (error) std::rethrow_exception(error);
}

double default_attack_magnitude(AttackKind kind) {
  switch (kind) {
    case AttackKind::buffer_overflow:
      return 0.5;
    case AttackKind::kernel_skip:
      return 1.0;  // unused by the injector; kept positive for the record
    case AttackKind::rowhammer:
      return 20.0;
    case AttackKind::slowdown:
      return 3.8;
  }
  raise(errc::invalid_argument, "unknown attack kind");
}

const EventGroup& group_for_attack(const Preset& preset, AttackKind kind) {
  if (kind == AttackKind::rowhammer || kind == AttackKind::slowdown) {
    return preset.memory_group;
  }
  return preset.standard_group;
}

SwCampaignResult run_sw_campaign(const Preset& preset, const SwCampaignOptions& options) {
  if (options.golden_traces == 0) {
    raise(errc::invalid_argument, "campaign needs at least one golden trace");
  }
  const EventGroup& group = group_for_attack(preset, options.attack);
  const double magnitude =
      options.magnitude.value_or(default_attack_magnitude(options.attack));

  std::vector<Trace> golden(options.golden_traces);
  parallel_for(golden.size(), options.threads, [&](std::size_t i) {
    golden[i] = simulate(preset.program, group, preset.device, preset.marker,
                         NoiseSpec{}, options.seed + i);
  });
  SwCampaignResult result;
  result.preset = preset.name;
  result.attack = attack_kind_name(options.attack);
  result.model = build_golden(golden, preset.marker, preset.policy, preset.configs);
  golden.clear();

  std::vector<Trace> normal(options.normal_traces);
  parallel_for(normal.size(), options.threads, [&](std::size_t i) {
    normal[i] = maybe_decimate(
        simulate(preset.program, group, preset.device, preset.marker, NoiseSpec{},
                 options.seed + kNormalBase + i),
        options.keep_every);
  });
  std::vector<Trace> attacked(options.attack_traces);
  parallel_for(attacked.size(), options.threads, [&](std::size_t i) {
    attacked[i] = maybe_decimate(
        make_attack_trace(preset, group, options.attack, magnitude, options,
                          options.seed + kAttackBase + i),
        options.keep_every);
  });

  result.report = run_campaign(result.model, normal, attacked);

  result.roc.reserve(options.roc_taus.size());
  for (double tau : options.roc_taus) {
    ValidationPolicy policy = result.model.policy;
    policy.tau_corr = tau;
    std::size_t false_positives = 0;
    std::size_t detections = 0;
    for (const auto& trace : normal) {
      if (validate_trace(trace, result.model, policy).decision != Decision::benign) {
        ++false_positives;
      }
    }
    for (const auto& trace : attacked) {
      if (validate_trace(trace, result.model, policy).decision != Decision::benign) {
        ++detections;
      }
    }
    RocPoint point;
    point.tau = tau;
    point.tpr = attacked.empty()
                    ? 0.0
                    : static_cast<double>(detections) / static_cast<double>(attacked.size());
    point.fpr = normal.empty()
                    ? 0.0
                    : static_cast<double>(false_positives) /
                          static_cast<double>(normal.size());
    result.roc.push_back(point);
  }
  return result;
}

NoiseStudyResult run_noise_study(const Preset& preset, const NoiseStudyOptions& options) {
  if (options.golden_traces == 0 || options.traces_per_cell == 0) {
    raise(errc::invalid_argument, "noise study needs golden traces and cell traces");
  }
  const EventGroup& group = preset.standard_group;
  const ProgramSpec program =
      scale_program_dispersion(preset.program, options.dispersion_scale);

  std::vector<Trace> golden(options.golden_traces);
  parallel_for(golden.size(), options.threads, [&](std::size_t i) {
    golden[i] = simulate(program, group, preset.device, preset.marker, NoiseSpec{},
                         options.seed + i);
  });
  const GoldenModel model =
      build_golden(golden, preset.marker, preset.policy, preset.configs);
  golden.clear();

  struct CellPlan {
    std::string source;
    std::size_t concurrency;
    NoiseSpec noise;
  };
  std::vector<CellPlan> plan;
  plan.push_back({"baseline", 0, NoiseSpec{}});
  for (int kind = 0; kind < 2; ++kind) {
    const bool self = kind == 0;
    for (std::size_t level = 1; level <= options.max_concurrency; ++level) {
      CellPlan cell;
      cell.source = self ? "self" : "external";
      cell.concurrency = level;
      for (std::size_t i = 0; i < level; ++i) {
        NoiseSource source;
        source.profile = scale_profile_dispersion(
            self ? noise_profile_from_program(program, options.occupancy, "tenant")
                 : external_noise_profile(options.occupancy),
            options.dispersion_scale);
        // All tenants of a cell ramp up together just after the opening
        // marker. Staggered starts would let copies of one burst train fill
        // each other's gaps, so the summed interference would flatten out as
        // concurrency grows instead of deepening.
        source.start_window = 2;
        source.kind = self ? NoiseKind::self_noise : NoiseKind::external_noise;
        cell.noise.concurrent.push_back(std::move(source));
      }
      plan.push_back(std::move(cell));
    }
  }

  NoiseStudyResult result;
  result.preset = preset.name;
  for (const auto& cell : plan) {
    std::vector<double> scores(options.traces_per_cell);
    parallel_for(scores.size(), options.threads, [&](std::size_t t) {
      // Cells of one concurrency level share seeds regardless of source
      // kind, and the victim's draws are noise-independent, so the
      // comparison between kinds is paired per trace.
      const std::uint64_t seed =
          options.seed + kNoiseBase + kNoiseCellStride * cell.concurrency + t;
      Trace trace =
          simulate(program, group, preset.device, preset.marker, cell.noise, seed);
      scores[t] = trace_shape_score(trace, model);
    });
    NoiseCell out;
    out.source = cell.source;
    out.concurrency = cell.concurrency;
    out.traces = scores.size();
    out.min_similarity = *std::min_element(scores.begin(), scores.end());
    out.max_similarity = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += s;
    out.mean_similarity = sum / static_cast<double>(scores.size());
    result.cells.push_back(std::move(out));
  }
  return result;
}

HwStudyResult run_hw_study(const Preset& preset, const HwStudyOptions& options) {
  const EventGroup& group = preset.standard_group;
  HwStudyResult result;
  result.preset = preset.name;

  std::vector<std::uint64_t> golden_seeds(options.golden_seeds);
  for (std::size_t i = 0; i < golden_seeds.size(); ++i) {
    golden_seeds[i] = options.seed + kHwGoldenBase + i;
  }
  result.golden = build_hw_golden(preset.program, group, preset.marker,
                                  options.config, golden_seeds);

  for (double bandwidth : options.bandwidth_sweep) {
    HwConfig cfg = options.config;
    cfg.link_bandwidth = bandwidth;
    const std::uint64_t seed = options.seed + kHwSweepBase;
    HwRunResult on = run_hwsim(preset.program, group, preset.marker, cfg, seed,
                               &result.golden);
    HwRunResult off =
        run_hwsim(preset.program, group, preset.marker, cfg, seed, nullptr);
    HwSweepPoint point;
    point.bandwidth = bandwidth;
    point.cycles_on = on.cycles;
    point.cycles_off = off.cycles;
    point.overhead = off.cycles == 0
                         ? 0.0
                         : static_cast<double>(on.cycles) /
                                   static_cast<double>(off.cycles) -
                               1.0;
    point.flagged = on.flag.has_value();
    point.min_dtw = 1.0;
    for (const auto& score : on.per_kernel) {
      point.min_dtw = std::min(point.min_dtw, score.dtw);
    }
    result.sweep.push_back(point);
  }

  for (std::size_t t = 0; t < options.attack_trials; ++t) {
    const std::uint64_t seed = options.seed + kHwTrialBase + t;
    AttackSpec spec;
    spec.kind = AttackKind::buffer_overflow;
    spec.magnitude = options.attack_magnitude;
    spec.seed = seed;
    ProgramSpec tampered =
        inject_buffer_overflow(preset.program, group, spec, options.payload_fraction);

    HwAttackTrial trial;
    trial.seed = seed;
    HwRunResult on = run_hwsim(tampered, group, preset.marker, options.config, seed,
                               &result.golden);
    trial.cycles_on = on.cycles;
    trial.flagged = on.flag.has_value();
    if (on.flag) {
      trial.kernel = on.flag->kernel;
      trial.window = on.flag->window;
      trial.metric = on.flag->metric;
    }
    HwRunResult off =
        run_hwsim(tampered, group, preset.marker, options.config, seed, nullptr);
    trial.cycles_off = off.cycles;
    for (std::size_t k = 0; !trial.deviation_found && k < off.aggregates.size(); ++k) {
      const auto& reference = result.golden.windows[k];
      const auto& observed = off.aggregates[k];
      const std::size_t windows = std::min(observed.size(), reference.size());
      for (std::uint32_t w = 0; !trial.deviation_found && w < windows; ++w) {
        for (std::size_t m = 0; m < kHwMetricCount; ++m) {
          const double gap = std::abs(static_cast<double>(observed[w][m]) -
                                      static_cast<double>(reference[w][m]));
          if (gap > result.golden.tau[m]) {
            trial.deviation_found = true;
            trial.expected_kernel = k;
            trial.expected_window = w;
            break;
          }
        }
      }
    }
    trial.matches_expected = trial.flagged && trial.deviation_found &&
                             trial.kernel == trial.expected_kernel &&
                             trial.window == trial.expected_window;
    trial.min_dtw = 1.0;
    for (const auto& score :
         hw_dtw_scores(result.golden, off.aggregates, options.config.dtw_scale)) {
      trial.min_dtw = std::min(trial.min_dtw, score.dtw);
    }
    result.attacks.push_back(trial);
  }
  return result;
}

}  // namespace gpuval
