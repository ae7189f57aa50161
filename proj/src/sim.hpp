#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "model.hpp"
#include "segmentation.hpp"

namespace gpuval {

// One execution phase of a kernel: expected per-instance counts per window
// for each event it touches (absent events contribute zero) plus the
// over-dispersion of the count law within the phase.
struct Phase {
  std::size_t duration_windows = 1;
  std::map<std::string, double> rates;
  double dispersion = 0.0;
};

struct KernelProfile {
  std::string name;
  std::vector<Phase> phases;
  double occupancy = 1.0;  // fraction of instances the kernel keeps busy

  std::size_t body_windows() const;
  void validate() const;
};

struct ProgramKernel {
  KernelProfile profile;
  KernelMetadata meta;
};

struct ProgramSpec {
  std::vector<ProgramKernel> kernels;
  std::size_t inter_kernel_gap = 1;  // idle windows between launches

  // marker + body + marker per kernel, gaps between kernels.
  std::size_t total_windows() const;
};

enum class NoiseKind { self_noise, external_noise };

struct NoiseSource {
  KernelProfile profile;
  std::size_t start_window = 0;
  NoiseKind kind = NoiseKind::external_noise;
};

// Concurrent activity sharing the device with the program under test. Noise
// only ever adds counts, only on non-marker channels, and only on the
// instances its occupancy claims (filled from the top of the instance range,
// the victim fills from the bottom).
struct NoiseSpec {
  std::vector<NoiseSource> concurrent;
};

// Window-granular synthetic capture of `program` on `device`:
//   - each kernel emits one opening marker window, its body windows, one
//     closing marker window; launches are separated by idle gap windows;
//   - a marker window puts the kernel's registered amplitude on the marker
//     event, split evenly across instances (remainder to the low ids), and
//     nothing on other events;
//   - body counts are drawn per active instance from the phase's count law.
// The same seed reproduces the trace byte for byte, and the victim's draws do
// not depend on the noise spec.
Trace simulate(const ProgramSpec& program, const EventGroup& group,
               const DeviceConfig& device, const MarkerSpec& marker,
               const NoiseSpec& noise, std::uint64_t seed);

// Models a collection rate too low for the workload: every run of keep_every
// consecutive windows is merged by summation (markers included) and windows
// are reindexed densely. A trailing partial run merges too.
Trace sampling_decimate(const Trace& trace, std::size_t keep_every);

// Body rates of a whole program laid end to end (markers left out, gaps kept
// as idle phases): the shape another tenant of the device would add.
KernelProfile noise_profile_from_program(const ProgramSpec& program, double occupancy,
                                         const std::string& name);

}  // namespace gpuval
