#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gpuval {

enum class EventCategory { sm, memory, l2, global_memory, atomic, texture, pcie, misc };

const char* category_name(EventCategory category);
EventCategory category_from_name(std::string_view name);

// One hardware counter. `instances` is the number of readings it yields per
// sample window on the device it was declared for: counters private to an SM
// yield one per SM, shared partition counters one per SM group.
struct EventSpec {
  std::string name;
  EventCategory category = EventCategory::misc;
  std::uint32_t instances = 1;

  bool operator==(const EventSpec&) const = default;
};

inline constexpr std::size_t max_group_events = 8;

// Counters collected together in a single profiling pass. Capped at eight
// members with one shared instance count so every sample is rectangular.
class EventGroup {
 public:
  EventGroup() = default;
  explicit EventGroup(std::vector<EventSpec> events);

  const std::vector<EventSpec>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  std::uint32_t instances() const;
  std::optional<std::size_t> index_of(std::string_view name) const;

  bool operator==(const EventGroup&) const = default;

 private:
  std::vector<EventSpec> events_;
};

struct Dim3 {
  std::uint32_t x = 1, y = 1, z = 1;

  auto operator<=>(const Dim3&) const = default;
};

struct DeviceConfig {
  std::uint32_t num_sms = 80;
  std::uint32_t sm_group_size = 5;  // SMs feeding one shared counter instance
  std::uint32_t window_cycles = 10000;
  double clock_mhz = 1100.0;

  void validate() const;
  std::uint32_t per_sm_instances() const { return num_sms; }
  std::uint32_t per_group_instances() const { return num_sms / sm_group_size; }

  bool operator==(const DeviceConfig&) const = default;
};

// One sampling window. values[event][instance] holds the per-window delta of
// each counter instance; shape must match the owning trace's group.
struct Sample {
  std::uint64_t window_index = 0;
  std::vector<std::vector<std::uint64_t>> values;

  bool operator==(const Sample&) const = default;
};

struct KernelMetadata {
  std::string kernel_name;
  Dim3 grid;
  Dim3 block;
  std::uint64_t input_size = 0;
  std::uint32_t config_id = 0;

  bool operator==(const KernelMetadata&) const = default;
};

struct Trace {
  EventGroup group;
  DeviceConfig device;
  std::optional<KernelMetadata> meta;  // single-kernel captures only
  std::vector<Sample> samples;

  // Checks rectangular sample shapes and strictly increasing window indices.
  void validate() const;

  bool operator==(const Trace&) const = default;
};

// A kernel's windows cut out of a trace, marker windows excluded.
struct Segment {
  std::size_t kernel_ordinal = 0;
  std::vector<Sample> samples;
  KernelMetadata meta;

  bool operator==(const Segment&) const = default;
};

// Registry of known launch configurations. Ids are dense, assignment order is
// registration order, and the key -> id map is injective both ways.
class ConfigTable {
 public:
  struct Key {
    std::string kernel_name;
    Dim3 grid;
    Dim3 block;
    std::uint64_t input_size = 0;

    auto operator<=>(const Key&) const = default;
  };

  std::uint32_t add(const Key& key);
  void add_with_id(const Key& key, std::uint32_t id);
  std::uint32_t id_for(const Key& key) const;
  const Key& key_for(std::uint32_t id) const;
  bool contains(std::uint32_t id) const { return by_id_.contains(id); }
  std::size_t size() const { return by_id_.size(); }
  const std::map<std::uint32_t, Key>& entries() const { return by_id_; }

  bool operator==(const ConfigTable&) const = default;

 private:
  std::map<Key, std::uint32_t> by_key_;
  std::map<std::uint32_t, Key> by_id_;
};

ConfigTable::Key key_of(const KernelMetadata& meta);
std::uint32_t derive_config_id(const KernelMetadata& meta, const ConfigTable& table);
KernelMetadata metadata_for(std::uint32_t config_id, const ConfigTable& table);

enum class Decision { benign, compromised, incomplete };

const char* decision_name(Decision decision);

struct SegmentCheck {
  std::size_t kernel_ordinal = 0;
  std::uint32_t config_id = 0;
  double coefficient = -1.0;  // in [-1, 1]
  bool matched = false;
};

struct Verdict {
  Decision decision = Decision::incomplete;
  std::vector<SegmentCheck> per_segment;
  std::size_t max_consecutive_rejections = 0;
  // First kernel of the first rejection run that tripped the policy. Set iff
  // compromised.
  std::optional<std::size_t> flagged_kernel;
  // First ordinal where the observed kernel sequence left the expected one.
  // Set only for sequence breaks (which are reported as incomplete).
  std::optional<std::size_t> divergence_ordinal;
  std::string diagnostic;
};

}  // namespace gpuval
