#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "model.hpp"
#include "sim.hpp"

namespace gpuval {

enum class AttackKind { buffer_overflow, kernel_skip, rowhammer, slowdown };

const char* attack_kind_name(AttackKind kind);
AttackKind attack_kind_from_name(std::string_view name);

struct AttackSpec {
  AttackKind kind = AttackKind::buffer_overflow;
  std::optional<std::size_t> target_kernel;  // all kernels where that makes sense
  double magnitude = 0.5;
  std::uint64_t seed = 0;  // randomized payload placement
};

// Control-flow hijack: a payload replaces part of the body. Covered windows
// keep their phase's timing but instruction-category rates scale by
// (1 + magnitude) and each data-path pair (load/store, DRAM partitions, L2
// read/write) rotates toward its swap by min(1, magnitude). Placement is
// drawn from spec.seed. magnitude 0 is the identity.
ProgramSpec inject_buffer_overflow(const ProgramSpec& program, const EventGroup& group,
                                   const AttackSpec& spec, double payload_fraction = 0.5);

// The hijacked launch never runs: kernel, body and both markers disappear.
// target_kernel is required and must exist.
ProgramSpec inject_kernel_skip(const ProgramSpec& program, const AttackSpec& spec);

// Concurrent hammering tenant: an alternating one-window burst train with
// DRAM read rates swinging around magnitude times the victim's mean, L2
// queries at half that, spanning the victim's whole execution. Touches no
// marker channel. Requires DRAM or L2 events in the group.
NoiseSource make_rowhammer_source(const ProgramSpec& program, const EventGroup& group,
                                  const AttackSpec& spec);

struct SlowdownInjection {
  ProgramSpec program;
  NoiseSource noise;
};

// Contention attack: victim phase durations stretch by (1 + magnitude) while
// a random-address tenant keeps the memory system busy. magnitude 0 leaves
// durations untouched.
SlowdownInjection inject_slowdown(const ProgramSpec& program, const EventGroup& group,
                                  const AttackSpec& spec);

}  // namespace gpuval
