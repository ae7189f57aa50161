#include "presets.hpp"

#include <cmath>

#include "errors.hpp"

namespace gpuval {

namespace {

constexpr const char* ev_inst = "inst_executed";
constexpr const char* ev_load = "global_load";
constexpr const char* ev_store = "global_store";
constexpr const char* ev_cas = "global_atom_cas";
constexpr const char* ev_fb0 = "fb_subp0_read_sectors";
constexpr const char* ev_fb1 = "fb_subp1_read_sectors";
constexpr const char* ev_l2r = "l2_subp0_read_sector_queries";
constexpr const char* ev_l2w = "l2_subp0_write_sector_queries";

// One phase with the standard-group rates given directly and the DRAM/L2
// rates derived from the load/store mix.
Phase mk_phase(std::size_t windows, double inst, double load, double store,
               double dispersion) {
  Phase phase;
  phase.duration_windows = windows;
  phase.dispersion = dispersion;
  phase.rates[ev_inst] = inst;
  phase.rates[ev_load] = load;
  phase.rates[ev_store] = store;
  phase.rates[ev_fb0] = 1.55 * load + 0.10 * store;
  phase.rates[ev_fb1] = 1.45 * load + 0.25 * store;
  phase.rates[ev_l2r] = 1.90 * load + 0.15 * store;
  phase.rates[ev_l2w] = 0.30 * load + 3.20 * store;
  return phase;
}

struct LaunchSpec {
  KernelProfile profile;
  KernelMetadata meta;  // config_id filled while registering
};

DeviceConfig preset_device() {
  DeviceConfig device;
  device.num_sms = 80;
  device.sm_group_size = 5;
  device.window_cycles = 10000;
  device.clock_mhz = 1100.0;
  return device;
}

EventGroup standard_group(const DeviceConfig& device) {
  std::uint32_t n = device.per_sm_instances();
  return EventGroup({EventSpec{ev_inst, EventCategory::sm, n},
                     EventSpec{ev_load, EventCategory::global_memory, n},
                     EventSpec{ev_store, EventCategory::global_memory, n},
                     EventSpec{ev_cas, EventCategory::atomic, n}});
}

EventGroup memory_group(const DeviceConfig& device) {
  std::uint32_t n = device.per_group_instances();
  return EventGroup({EventSpec{ev_fb0, EventCategory::memory, n},
                     EventSpec{ev_fb1, EventCategory::memory, n},
                     EventSpec{ev_l2r, EventCategory::l2, n},
                     EventSpec{ev_l2w, EventCategory::l2, n},
                     EventSpec{ev_cas, EventCategory::atomic, n}});
}

// Boundary-word amplitudes spaced 25% apart so the 10% decode tolerance
// bands never touch. 160 is one stub launch: 40 blocks of 4 threads.
std::uint64_t amplitude_for(std::size_t config_index) {
  return static_cast<std::uint64_t>(std::llround(160.0 * std::pow(1.25, config_index)));
}

Preset assemble(std::string name, std::vector<LaunchSpec> launches,
                const std::vector<std::size_t>& order) {
  Preset preset;
  preset.name = std::move(name);
  preset.device = preset_device();
  preset.standard_group = standard_group(preset.device);
  preset.memory_group = memory_group(preset.device);

  for (std::size_t c = 0; c < launches.size(); ++c) {
    LaunchSpec& launch = launches[c];
    launch.meta.config_id = preset.configs.add(key_of(launch.meta));
    preset.marker.expected_amplitude[launch.meta.config_id] = amplitude_for(c);
  }
  preset.marker.marker_event = ev_cas;
  preset.marker.presence_threshold = 1;

  for (std::size_t index : order) {
    if (index >= launches.size()) raise(errc::invalid_argument, "bad launch order");
    preset.program.kernels.push_back(
        ProgramKernel{launches[index].profile, launches[index].meta});
  }
  preset.program.inter_kernel_gap = 1;
  return preset;
}

KernelProfile profile_of(std::string name, double occupancy, std::vector<Phase> phases) {
  KernelProfile profile;
  profile.name = std::move(name);
  profile.occupancy = occupancy;
  profile.phases = std::move(phases);
  return profile;
}

KernelMetadata meta_of(std::string kernel, Dim3 grid, Dim3 block, std::uint64_t input) {
  KernelMetadata meta;
  meta.kernel_name = std::move(kernel);
  meta.grid = grid;
  meta.block = block;
  meta.input_size = input;
  return meta;
}

// Rate tables alternate load-heavy and store-heavy phases. Stores move
// against loads on every transition, so no time slice of a trace collapses
// into the same monotone shape on all channels at once; the matcher keeps
// its contrast even at the shortest admissible overlap.
Preset make_vecadd() {
  // One streaming kernel launched eight times, ping-ponging between read
  // and write-back passes.
  LaunchSpec add;
  add.profile = profile_of("vecAdd", 1.0,
                           {mk_phase(2, 240, 230, 60, 0.003),
                            mk_phase(2, 185, 120, 150, 0.003),
                            mk_phase(2, 265, 250, 66, 0.003),
                            mk_phase(2, 150, 105, 135, 0.003)});
  add.meta = meta_of("vecAdd", Dim3{4096, 1, 1}, Dim3{256, 1, 1}, 1u << 20);
  return assemble("vecadd", {add}, {0, 0, 0, 0, 0, 0, 0, 0});
}

Preset make_matmul() {
  // Tiled multiply at two problem sizes, interleaved. Tile-load sweeps
  // alternate with accumulate/write-back stretches.
  LaunchSpec small;
  small.profile = profile_of("matMul512", 1.0,
                             {mk_phase(2, 520, 430, 120, 0.004),
                              mk_phase(3, 780, 640, 52, 0.004),
                              mk_phase(2, 430, 360, 150, 0.004),
                              mk_phase(3, 700, 580, 70, 0.004)});
  small.meta = meta_of("matMulTiled", Dim3{32, 32, 1}, Dim3{16, 16, 1}, 512);
  LaunchSpec large;
  large.profile = profile_of("matMul1024", 1.0,
                             {mk_phase(3, 560, 450, 130, 0.004),
                              mk_phase(4, 840, 660, 56, 0.004),
                              mk_phase(3, 470, 380, 165, 0.004),
                              mk_phase(4, 790, 610, 76, 0.004)});
  large.meta = meta_of("matMulTiled", Dim3{64, 64, 1}, Dim3{16, 16, 1}, 1024);
  return assemble("matmul", {small, large}, {0, 1, 0, 1, 0, 1});
}

Preset make_histogram() {
  LaunchSpec count;
  count.profile = profile_of("histogram256", 1.0,
                             {mk_phase(2, 340, 290, 60, 0.004),
                              mk_phase(2, 260, 185, 130, 0.004),
                              mk_phase(2, 420, 355, 45, 0.004),
                              mk_phase(1, 230, 160, 140, 0.004)});
  count.meta = meta_of("histogram256", Dim3{240, 1, 1}, Dim3{192, 1, 1}, 1u << 22);
  LaunchSpec merge;
  // Three distinct levels: a two-level body correlates perfectly with any
  // same-direction rescale of itself, which would blunt the matcher.
  merge.profile = profile_of("mergeBins", 0.6,
                             {mk_phase(2, 255, 210, 50, 0.003),
                              mk_phase(1, 155, 105, 130, 0.003),
                              mk_phase(1, 305, 250, 38, 0.003)});
  merge.meta = meta_of("mergeHistogram256", Dim3{64, 1, 1}, Dim3{256, 1, 1}, 1u << 22);
  return assemble("histogram", {count, merge}, {0, 1, 0, 1, 0, 1});
}

Preset make_bitonicsort() {
  // Short alternating sort stages: the low-sample workload. Five windows
  // of body per launch is deliberately close to the floor the matcher needs.
  LaunchSpec up;
  up.profile = profile_of("bitonicUp", 1.0,
                          {mk_phase(1, 230, 195, 70, 0.003),
                           mk_phase(2, 320, 270, 32, 0.003),
                           mk_phase(2, 190, 140, 110, 0.003)});
  up.meta = meta_of("bitonicStep", Dim3{256, 1, 1}, Dim3{512, 1, 1}, 1u << 18);
  LaunchSpec down;
  down.profile = profile_of("bitonicDown", 1.0,
                            {mk_phase(2, 300, 250, 40, 0.003),
                             mk_phase(2, 205, 150, 120, 0.003),
                             mk_phase(1, 350, 300, 26, 0.003)});
  down.meta = meta_of("bitonicStep", Dim3{512, 1, 1}, Dim3{512, 1, 1}, 1u << 18);
  return assemble("bitonicsort", {up, down}, {0, 1, 0, 1, 0, 1, 0, 1});
}

Preset make_alexnet() {
  // Eight-layer feature extractor: conv/pool stacks, then dense layers.
  std::vector<LaunchSpec> layers(8);
  layers[0].profile = profile_of("conv1", 1.0,
                                 {mk_phase(5, 520, 260, 150, 0.004),
                                  mk_phase(8, 820, 390, 60, 0.004),
                                  mk_phase(5, 430, 180, 185, 0.004),
                                  mk_phase(8, 700, 330, 85, 0.004)});
  layers[0].meta = meta_of("convForward", Dim3{96, 55, 1}, Dim3{32, 8, 1}, 154587);
  layers[1].profile = profile_of("pool1", 0.9,
                                 {mk_phase(3, 240, 190, 95, 0.004),
                                  mk_phase(4, 310, 245, 52, 0.004),
                                  mk_phase(3, 185, 130, 120, 0.004),
                                  mk_phase(3, 265, 215, 66, 0.004)});
  layers[1].meta = meta_of("maxPoolForward", Dim3{96, 27, 1}, Dim3{32, 8, 1}, 290400);
  layers[2].profile = profile_of("conv2", 1.0,
                                 {mk_phase(4, 600, 300, 170, 0.004),
                                  mk_phase(9, 900, 420, 66, 0.004),
                                  mk_phase(4, 470, 200, 205, 0.004),
                                  mk_phase(9, 780, 360, 95, 0.004)});
  layers[2].meta = meta_of("convForward", Dim3{256, 27, 1}, Dim3{32, 8, 1}, 69984);
  layers[3].profile = profile_of("pool2", 0.9,
                                 {mk_phase(3, 220, 175, 88, 0.004),
                                  mk_phase(3, 285, 225, 48, 0.004),
                                  mk_phase(2, 165, 110, 112, 0.004),
                                  mk_phase(3, 250, 195, 60, 0.004)});
  layers[3].meta = meta_of("maxPoolForward", Dim3{256, 13, 1}, Dim3{32, 8, 1}, 186624);
  layers[4].profile = profile_of("conv3", 1.0,
                                 {mk_phase(4, 640, 330, 185, 0.004),
                                  mk_phase(6, 980, 460, 76, 0.004),
                                  mk_phase(4, 510, 210, 225, 0.004),
                                  mk_phase(6, 840, 395, 105, 0.004)});
  layers[4].meta = meta_of("convForward", Dim3{384, 13, 1}, Dim3{32, 8, 1}, 43264);
  layers[5].profile = profile_of("fc1", 1.0,
                                 {mk_phase(3, 700, 520, 120, 0.004),
                                  mk_phase(5, 1050, 780, 44, 0.004),
                                  mk_phase(3, 560, 420, 150, 0.004),
                                  mk_phase(4, 900, 660, 70, 0.004)});
  layers[5].meta = meta_of("fcForward", Dim3{4096, 1, 1}, Dim3{128, 1, 1}, 9216);
  layers[6].profile = profile_of("fc2", 1.0,
                                 {mk_phase(2, 480, 360, 88, 0.004),
                                  mk_phase(4, 720, 540, 34, 0.004),
                                  mk_phase(2, 380, 290, 110, 0.004),
                                  mk_phase(2, 600, 460, 50, 0.004)});
  layers[6].meta = meta_of("fcForward", Dim3{4096, 1, 1}, Dim3{128, 1, 1}, 4096);
  layers[7].profile = profile_of("softmax", 0.5,
                                 {mk_phase(2, 145, 176, 124, 0.003),
                                  mk_phase(3, 215, 268, 68, 0.003),
                                  mk_phase(2, 110, 128, 160, 0.003),
                                  mk_phase(1, 190, 236, 84, 0.003)});
  layers[7].meta = meta_of("softmaxForward", Dim3{1000, 1, 1}, Dim3{256, 1, 1}, 4096);
  return assemble("alexnet", std::move(layers), {0, 1, 2, 3, 4, 5, 6, 7});
}

Preset make_cifarnet() {
  // Smaller eight-kernel net over 32x32 inputs.
  std::vector<LaunchSpec> layers(8);
  layers[0].profile = profile_of("conv1", 1.0,
                                 {mk_phase(4, 380, 200, 110, 0.004),
                                  mk_phase(6, 560, 295, 48, 0.004),
                                  mk_phase(4, 300, 130, 135, 0.004),
                                  mk_phase(4, 480, 250, 66, 0.004)});
  layers[0].meta = meta_of("convForward", Dim3{32, 32, 1}, Dim3{32, 4, 1}, 3072);
  layers[1].profile = profile_of("pool1", 0.8,
                                 {mk_phase(2, 175, 135, 70, 0.004),
                                  mk_phase(3, 225, 175, 40, 0.004),
                                  mk_phase(2, 130, 88, 88, 0.004),
                                  mk_phase(2, 200, 155, 50, 0.004)});
  layers[1].meta = meta_of("maxPoolForward", Dim3{32, 16, 1}, Dim3{32, 4, 1}, 32768);
  layers[2].profile = profile_of("conv2", 1.0,
                                 {mk_phase(3, 430, 225, 125, 0.004),
                                  mk_phase(6, 640, 330, 56, 0.004),
                                  mk_phase(3, 340, 145, 150, 0.004),
                                  mk_phase(4, 560, 285, 76, 0.004)});
  layers[2].meta = meta_of("convForward", Dim3{64, 16, 1}, Dim3{32, 4, 1}, 16384);
  layers[3].profile = profile_of("pool2", 0.8,
                                 {mk_phase(2, 160, 126, 64, 0.004),
                                  mk_phase(3, 205, 160, 38, 0.004),
                                  mk_phase(2, 120, 82, 80, 0.004),
                                  mk_phase(1, 185, 142, 46, 0.004)});
  layers[3].meta = meta_of("maxPoolForward", Dim3{64, 8, 1}, Dim3{32, 4, 1}, 16384);
  layers[4].profile = profile_of("conv3", 1.0,
                                 {mk_phase(3, 470, 245, 135, 0.004),
                                  mk_phase(4, 700, 360, 60, 0.004),
                                  mk_phase(2, 370, 160, 165, 0.004),
                                  mk_phase(3, 610, 310, 85, 0.004)});
  layers[4].meta = meta_of("convForward", Dim3{64, 8, 1}, Dim3{32, 4, 1}, 4096);
  layers[5].profile = profile_of("fc1", 1.0,
                                 {mk_phase(2, 520, 390, 92, 0.004),
                                  mk_phase(4, 780, 580, 34, 0.004),
                                  mk_phase(2, 420, 310, 115, 0.004),
                                  mk_phase(2, 660, 490, 52, 0.004)});
  layers[5].meta = meta_of("fcForward", Dim3{384, 1, 1}, Dim3{128, 1, 1}, 1024);
  layers[6].profile = profile_of("fc2", 1.0,
                                 {mk_phase(2, 360, 270, 66, 0.004),
                                  mk_phase(2, 540, 400, 26, 0.004),
                                  mk_phase(2, 290, 215, 82, 0.004),
                                  mk_phase(1, 480, 355, 36, 0.004)});
  layers[6].meta = meta_of("fcForward", Dim3{192, 1, 1}, Dim3{128, 1, 1}, 384);
  layers[7].profile = profile_of("softmax", 0.5,
                                 {mk_phase(2, 125, 152, 104, 0.003),
                                  mk_phase(2, 185, 230, 56, 0.003),
                                  mk_phase(1, 95, 110, 132, 0.003),
                                  mk_phase(1, 165, 200, 72, 0.003)});
  layers[7].meta = meta_of("softmaxForward", Dim3{10, 1, 1}, Dim3{32, 1, 1}, 192);
  return assemble("cifarnet", std::move(layers), {0, 1, 2, 3, 4, 5, 6, 7});
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"vecadd", "matmul", "histogram", "bitonicsort", "alexnet", "cifarnet"};
}

Preset make_preset(std::string_view name) {
  if (name == "vecadd") return make_vecadd();
  if (name == "matmul") return make_matmul();
  if (name == "histogram") return make_histogram();
  if (name == "bitonicsort") return make_bitonicsort();
  if (name == "alexnet") return make_alexnet();
  if (name == "cifarnet") return make_cifarnet();
  raise(errc::invalid_argument, "unknown preset '" + std::string(name) + "'");
}

const EventGroup& preset_group(const Preset& preset, std::string_view which) {
  if (which == "standard") return preset.standard_group;
  if (which == "memory") return preset.memory_group;
  raise(errc::invalid_argument, "unknown group '" + std::string(which) + "'");
}

KernelProfile external_noise_profile(double occupancy) {
  KernelProfile profile;
  profile.name = "streamCopy";
  profile.occupancy = occupancy;
  // Irregular burst train. Staggered copies of a short fixed period would sum
  // to a near-flat offset; uneven burst lengths keep stacked tenants bursty.
  const struct {
    int windows;
    double scale;
  } cycle[] = {{4, 1.0},  {2, 0.12}, {5, 1.0}, {3, 0.12}, {2, 1.0}, {6, 0.12},
               {3, 1.0},  {4, 0.12}, {2, 1.0}, {5, 0.12}, {3, 1.0}, {2, 0.12}};
  for (int rep = 0; rep < 5; ++rep) {
    for (const auto& burst : cycle) {
      profile.phases.push_back(mk_phase(burst.windows, 420 * burst.scale,
                                        640 * burst.scale, 610 * burst.scale, 0.25));
    }
  }
  return profile;
}

}  // namespace gpuval
