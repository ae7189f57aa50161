#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "golden.hpp"
#include "model.hpp"
#include "segmentation.hpp"
#include "sim.hpp"

namespace gpuval {

// A ready-to-run workload: device, counter groups, launch sequence with rate
// tables, boundary-marker amplitudes and the default policy. The rate tables
// are synthetic, shaped after the workload family they are named for (sizes,
// phase mix, load/store balance), not measured on hardware.
struct Preset {
  std::string name;
  DeviceConfig device;
  EventGroup standard_group;  // per-SM counters
  EventGroup memory_group;    // per-SM-group DRAM/L2 counters
  ProgramSpec program;        // phases carry rates for both groups' events
  MarkerSpec marker;
  ConfigTable configs;
  ValidationPolicy policy;
};

// vecadd, matmul, histogram, bitonicsort, alexnet, cifarnet.
std::vector<std::string> preset_names();
Preset make_preset(std::string_view name);

const EventGroup& preset_group(const Preset& preset, std::string_view which);

// Streaming-copy style tenant: flat, bursty, high-rate memory traffic. Used
// as the unrelated-workload noise source.
KernelProfile external_noise_profile(double occupancy);

}  // namespace gpuval
