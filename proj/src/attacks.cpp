#include "attacks.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace gpuval {

namespace {

constexpr const char* kAttackNames[] = {"buffer-overflow", "kernel-skip", "rowhammer",
                                        "slowdown"};

// Duration-weighted mean body rate per event, taken over every kernel.
std::map<std::string, double> mean_body_rates(const ProgramSpec& program,
                                              const EventGroup& group) {
  std::map<std::string, double> sums;
  std::uint64_t windows = 0;
  for (const auto& kernel : program.kernels) {
    for (const auto& phase : kernel.profile.phases) {
      windows += phase.duration_windows;
      for (const auto& event : group.events()) {
        auto it = phase.rates.find(event.name);
        if (it != phase.rates.end()) {
          sums[event.name] += static_cast<double>(phase.duration_windows) * it->second;
        }
      }
    }
  }
  std::map<std::string, double> means;
  if (windows == 0) return means;
  for (const auto& [name, sum] : sums) means[name] = sum / static_cast<double>(windows);
  return means;
}

struct WindowLaw {
  std::map<std::string, double> rates;
  double dispersion = 0.0;
  std::size_t origin = 0;  // index of the source phase
  bool payload = false;
};

std::vector<WindowLaw> expand_body(const KernelProfile& profile) {
  std::vector<WindowLaw> laws;
  for (std::size_t p = 0; p < profile.phases.size(); ++p) {
    const auto& phase = profile.phases[p];
    for (std::uint64_t w = 0; w < phase.duration_windows; ++w) {
      laws.push_back({phase.rates, phase.dispersion, p, false});
    }
  }
  return laws;
}

std::vector<Phase> compress_body(const std::vector<WindowLaw>& laws) {
  std::vector<Phase> phases;
  for (std::size_t i = 0; i < laws.size(); ++i) {
    if (!phases.empty() && laws[i].origin == laws[i - 1].origin &&
        laws[i].payload == laws[i - 1].payload) {
      ++phases.back().duration_windows;
      continue;
    }
    phases.push_back({1, laws[i].rates, laws[i].dispersion});
  }
  return phases;
}

// Payload rate law: instruction-issue categories scale, and within each
// data-path category (global load/store, DRAM partitions, L2 read/write) the
// rate vector rotates toward its reversal, because the payload's access mix
// is the mirror of the host kernel's. Everything else is left alone so that
// magnitude 0 is exactly the identity.
void transform_rates(std::map<std::string, double>& rates, const EventGroup& group,
                     double magnitude) {
  const double scale = 1.0 + magnitude;
  const double w = std::min(1.0, magnitude);
  std::map<EventCategory, std::vector<const EventSpec*>> paths;
  for (const auto& event : group.events()) {
    if (event.category == EventCategory::sm) {
      auto it = rates.find(event.name);
      if (it != rates.end()) it->second *= scale;
    } else if (event.category == EventCategory::global_memory ||
               event.category == EventCategory::memory ||
               event.category == EventCategory::l2) {
      paths[event.category].push_back(&event);
    }
  }
  for (auto& [category, mem] : paths) {
    std::vector<double> original(mem.size());
    for (std::size_t i = 0; i < mem.size(); ++i) {
      auto it = rates.find(mem[i]->name);
      original[i] = it != rates.end() ? it->second : 0.0;
    }
    for (std::size_t i = 0; i < mem.size(); ++i) {
      const double blended = (1.0 - w) * original[i] + w * original[mem.size() - 1 - i];
      if (blended != 0.0 || rates.count(mem[i]->name) != 0) rates[mem[i]->name] = blended;
    }
  }
}

// On/off train of one-window bursts across the victim's span. Bank
// hammering and throttle contention both arrive as tight burst trains, not
// white noise; the period-two toggle also shares no shape with any preset's
// multi-window phases, so it cannot masquerade as one of them.
KernelProfile burst_train(const EventGroup& group,
                          const std::map<std::string, double>& means,
                          std::uint64_t span, double mem_level, double l2_level,
                          double dispersion, const char* name) {
  KernelProfile profile;
  profile.name = name;
  profile.occupancy = 1.0;
  for (std::uint64_t w = 0; w < span; ++w) {
    const double swing = (w % 2 == 0) ? 1.6 : 0.4;
    Phase phase;
    phase.duration_windows = 1;
    phase.dispersion = dispersion;
    for (const auto& event : group.events()) {
      auto it = means.find(event.name);
      const double mean = it != means.end() ? it->second : 0.0;
      if (event.category == EventCategory::memory) {
        phase.rates[event.name] = swing * mem_level * mean;
      } else if (event.category == EventCategory::l2) {
        phase.rates[event.name] = swing * l2_level * mean;
      }
    }
    profile.phases.push_back(std::move(phase));
  }
  return profile;
}

}  // namespace

const char* attack_kind_name(AttackKind kind) {
  return kAttackNames[static_cast<std::size_t>(kind)];
}

AttackKind attack_kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < 4; ++i) {
    if (name == kAttackNames[i]) return static_cast<AttackKind>(i);
  }
  raise(errc::invalid_argument, "unknown attack kind '" + std::string(name) + "'");
}

ProgramSpec inject_buffer_overflow(const ProgramSpec& program, const EventGroup& group,
                                   const AttackSpec& spec, double payload_fraction) {
  if (payload_fraction <= 0.0 || payload_fraction > 1.0) {
    raise(errc::invalid_argument, "payload fraction must lie in (0, 1]");
  }
  if (spec.magnitude < 0.0) raise(errc::invalid_argument, "magnitude must be >= 0");
  if (spec.target_kernel && *spec.target_kernel >= program.kernels.size()) {
    raise(errc::invalid_target, "target kernel out of range");
  }
  ProgramSpec out = program;
  for (std::size_t k = 0; k < out.kernels.size(); ++k) {
    if (spec.target_kernel && *spec.target_kernel != k) continue;
    auto& profile = out.kernels[k].profile;
    auto laws = expand_body(profile);
    if (laws.empty()) raise(errc::invalid_target, "target kernel has an empty body");
    const auto len = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(payload_fraction *
                                                 static_cast<double>(laws.size()))));
    const auto span = std::min(len, laws.size());
    auto rng = make_stream(spec.seed, "payload", static_cast<std::uint64_t>(k));
    // The payload interleaves with host work instead of running as one block.
    // A contiguous hit would leave a contiguous clean remainder that can
    // re-align with a shifted reference; scattered windows taint every
    // admissible alignment.
    std::vector<std::size_t> all(laws.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<std::size_t> hit;
    hit.reserve(span);
    std::sample(all.begin(), all.end(), std::back_inserter(hit), span, rng);
    for (const auto i : hit) {
      transform_rates(laws[i].rates, group, spec.magnitude);
      laws[i].payload = true;
    }
    profile.phases = compress_body(laws);
  }
  return out;
}

ProgramSpec inject_kernel_skip(const ProgramSpec& program, const AttackSpec& spec) {
  if (!spec.target_kernel) raise(errc::invalid_target, "kernel-skip needs a target kernel");
  if (*spec.target_kernel >= program.kernels.size()) {
    raise(errc::invalid_target, "target kernel out of range");
  }
  ProgramSpec out = program;
  out.kernels.erase(out.kernels.begin() +
                    static_cast<std::ptrdiff_t>(*spec.target_kernel));
  return out;
}

NoiseSource make_rowhammer_source(const ProgramSpec& program, const EventGroup& group,
                                  const AttackSpec& spec) {
  if (spec.magnitude < 0.0) raise(errc::invalid_argument, "magnitude must be >= 0");
  bool has_memory = false;
  for (const auto& event : group.events()) {
    if (event.category == EventCategory::memory || event.category == EventCategory::l2) {
      has_memory = true;
    }
  }
  if (!has_memory) {
    raise(errc::missing_memory_events,
          "rowhammer needs DRAM or L2 events in the counter group");
  }
  const auto means = mean_body_rates(program, group);
  NoiseSource source;
  source.profile = burst_train(group, means, program.total_windows(),
                               spec.magnitude, 0.5 * spec.magnitude, 0.02,
                               "rowhammer");
  source.start_window = 0;
  source.kind = NoiseKind::external_noise;
  return source;
}

SlowdownInjection inject_slowdown(const ProgramSpec& program, const EventGroup& group,
                                  const AttackSpec& spec) {
  if (spec.magnitude < 0.0) raise(errc::invalid_argument, "magnitude must be >= 0");
  SlowdownInjection out;
  out.program = program;
  const double stretch = 1.0 + spec.magnitude;
  for (auto& kernel : out.program.kernels) {
    for (auto& phase : kernel.profile.phases) {
      phase.duration_windows = std::max<std::uint64_t>(
          1, static_cast<std::uint64_t>(
                 std::llround(static_cast<double>(phase.duration_windows) * stretch)));
    }
  }
  const auto means = mean_body_rates(program, group);
  const double level = std::min(1.0, spec.magnitude);
  out.noise.profile = burst_train(group, means, out.program.total_windows(),
                                  1.2 * level, 0.6 * level, 0.05, "contention");
  out.noise.start_window = 0;
  out.noise.kind = NoiseKind::external_noise;
  return out;
}

}  // namespace gpuval
