#include "sim.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "rng.hpp"

namespace gpuval {

namespace {

struct WindowLaw {
  const std::map<std::string, double>* rates = nullptr;  // idle when null
  double dispersion = 0.0;
};

// Per-window law of a kernel body, phase boundaries flattened out. Attack
// injectors rewrite phases; everything downstream only sees this schedule.
std::vector<WindowLaw> body_schedule(const KernelProfile& profile) {
  std::vector<WindowLaw> schedule;
  for (const Phase& phase : profile.phases) {
    for (std::size_t w = 0; w < phase.duration_windows; ++w)
      schedule.push_back(WindowLaw{&phase.rates, phase.dispersion});
  }
  return schedule;
}

std::uint32_t active_instances(double occupancy, std::uint32_t instances) {
  auto active = static_cast<std::int64_t>(std::llround(occupancy * instances));
  return static_cast<std::uint32_t>(
      std::clamp<std::int64_t>(active, 1, static_cast<std::int64_t>(instances)));
}

double rate_of(const std::map<std::string, double>& rates, const std::string& event) {
  auto it = rates.find(event);
  return it == rates.end() ? 0.0 : it->second;
}

}  // namespace

std::size_t KernelProfile::body_windows() const {
  std::size_t total = 0;
  for (const Phase& phase : phases) total += phase.duration_windows;
  return total;
}

void KernelProfile::validate() const {
  if (phases.empty()) raise(errc::invalid_argument, "profile '" + name + "' has no phases");
  if (body_windows() == 0)
    raise(errc::invalid_argument, "profile '" + name + "' has zero duration");
  if (!(occupancy > 0.0 && occupancy <= 1.0))
    raise(errc::invalid_argument, "profile '" + name + "' needs occupancy in (0, 1]");
  for (const Phase& phase : phases) {
    if (!(phase.dispersion >= 0.0))
      raise(errc::invalid_argument, "profile '" + name + "' has a negative dispersion");
    for (const auto& [event, rate] : phase.rates) {
      if (!(rate >= 0.0))
        raise(errc::invalid_argument,
              "profile '" + name + "' has a negative rate for '" + event + "'");
    }
  }
}

std::size_t ProgramSpec::total_windows() const {
  std::size_t total = 0;
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    if (k > 0) total += inter_kernel_gap;
    total += kernels[k].profile.body_windows() + 2;
  }
  return total;
}

Trace simulate(const ProgramSpec& program, const EventGroup& group,
               const DeviceConfig& device, const MarkerSpec& marker,
               const NoiseSpec& noise, std::uint64_t seed) {
  device.validate();
  if (group.size() == 0) raise(errc::invalid_argument, "simulate needs a non-empty group");
  for (const ProgramKernel& kernel : program.kernels) kernel.profile.validate();
  for (const NoiseSource& source : noise.concurrent) source.profile.validate();

  std::size_t events = group.size();
  std::uint32_t instances = group.instances();
  auto marker_event = group.index_of(marker.marker_event);
  if (!marker_event)
    raise(errc::marker_event_absent,
          "group does not carry marker event '" + marker.marker_event + "'");

  Trace trace;
  trace.group = group;
  trace.device = device;
  std::size_t total = program.total_windows();
  trace.samples.resize(total);
  for (std::size_t w = 0; w < total; ++w) {
    trace.samples[w].window_index = w;
    trace.samples[w].values.assign(events, std::vector<std::uint64_t>(instances, 0));
  }

  std::size_t cursor = 0;
  for (std::size_t k = 0; k < program.kernels.size(); ++k) {
    const ProgramKernel& kernel = program.kernels[k];
    if (k > 0) cursor += program.inter_kernel_gap;

    auto amplitude_it = marker.expected_amplitude.find(kernel.meta.config_id);
    if (amplitude_it == marker.expected_amplitude.end())
      raise(errc::unknown_amplitude, "no amplitude registered for config " +
                                         std::to_string(kernel.meta.config_id));
    std::uint64_t amplitude = amplitude_it->second;
    std::uint64_t base = amplitude / instances;
    std::uint64_t remainder = amplitude % instances;
    auto emit_marker = [&](std::size_t w) {
      for (std::uint32_t i = 0; i < instances; ++i)
        trace.samples[w].values[*marker_event][i] = base + (i < remainder ? 1 : 0);
    };

    emit_marker(cursor);
    ++cursor;

    std::mt19937_64 rng = make_stream(seed, "kernel", k);
    std::uint32_t active = active_instances(kernel.profile.occupancy, instances);
    for (const WindowLaw& law : body_schedule(kernel.profile)) {
      Sample& sample = trace.samples[cursor];
      for (std::size_t e = 0; e < events; ++e) {
        if (e == *marker_event) continue;
        double rate = rate_of(*law.rates, group.events()[e].name);
        for (std::uint32_t i = 0; i < active; ++i)
          sample.values[e][i] = draw_count(rng, rate, law.dispersion);
      }
      ++cursor;
    }

    emit_marker(cursor);
    ++cursor;
  }

  for (std::size_t n = 0; n < noise.concurrent.size(); ++n) {
    const NoiseSource& source = noise.concurrent[n];
    std::mt19937_64 rng = make_stream(seed, "noise", n);
    std::uint32_t active = active_instances(source.profile.occupancy, instances);
    std::uint32_t first = instances - active;
    std::size_t w = source.start_window;
    for (const WindowLaw& law : body_schedule(source.profile)) {
      if (w >= total) break;
      Sample& sample = trace.samples[w];
      for (std::size_t e = 0; e < events; ++e) {
        if (e == *marker_event) continue;  // concurrent tenants carry no boundary stub
        double rate = rate_of(*law.rates, group.events()[e].name);
        for (std::uint32_t i = first; i < instances; ++i)
          sample.values[e][i] += draw_count(rng, rate, law.dispersion);
      }
      ++w;
    }
  }

  if (program.kernels.size() == 1) trace.meta = program.kernels.front().meta;
  return trace;
}

Trace sampling_decimate(const Trace& trace, std::size_t keep_every) {
  if (keep_every == 0) raise(errc::invalid_argument, "keep_every must be at least 1");
  trace.validate();
  Trace out;
  out.group = trace.group;
  out.device = trace.device;
  out.meta = trace.meta;
  std::size_t events = trace.group.size();
  std::uint32_t instances = trace.group.instances();
  for (std::size_t start = 0; start < trace.samples.size(); start += keep_every) {
    Sample merged;
    merged.window_index = out.samples.size();
    merged.values.assign(events, std::vector<std::uint64_t>(instances, 0));
    std::size_t stop = std::min(trace.samples.size(), start + keep_every);
    for (std::size_t w = start; w < stop; ++w) {
      for (std::size_t e = 0; e < events; ++e) {
        for (std::uint32_t i = 0; i < instances; ++i)
          merged.values[e][i] += trace.samples[w].values[e][i];
      }
    }
    out.samples.push_back(std::move(merged));
  }
  return out;
}

KernelProfile noise_profile_from_program(const ProgramSpec& program, double occupancy,
                                         const std::string& name) {
  KernelProfile profile;
  profile.name = name;
  profile.occupancy = occupancy;
  for (std::size_t k = 0; k < program.kernels.size(); ++k) {
    if (k > 0 && program.inter_kernel_gap > 0) {
      Phase gap;
      gap.duration_windows = program.inter_kernel_gap;
      profile.phases.push_back(gap);
    }
    for (const Phase& phase : program.kernels[k].profile.phases)
      profile.phases.push_back(phase);
  }
  return profile;
}

}  // namespace gpuval
