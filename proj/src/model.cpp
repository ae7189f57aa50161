#include "model.hpp"

#include <array>

#include "errors.hpp"

namespace gpuval {

namespace {

constexpr std::array<const char*, 8> category_names = {
    "sm", "memory", "l2", "global_memory", "atomic", "texture", "pcie", "misc"};

}  // namespace

const char* category_name(EventCategory category) {
  return category_names[static_cast<std::size_t>(category)];
}

EventCategory category_from_name(std::string_view name) {
  for (std::size_t i = 0; i < category_names.size(); ++i) {
    if (name == category_names[i]) return static_cast<EventCategory>(i);
  }
  raise(errc::parse_error, "unknown event category '" + std::string(name) + "'");
}

EventGroup::EventGroup(std::vector<EventSpec> events) : events_(std::move(events)) {
  if (events_.empty()) raise(errc::invalid_argument, "event group must not be empty");
  if (events_.size() > max_group_events)
    raise(errc::invalid_argument, "event group holds at most " +
                                      std::to_string(max_group_events) + " events");
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (events_[i].instances == 0)
      raise(errc::invalid_argument, "event '" + events_[i].name + "' needs instances >= 1");
    if (events_[i].instances != events_[0].instances)
      raise(errc::invalid_argument,
            "group members must share one instance count: '" + events_[i].name + "'");
    for (std::size_t j = 0; j < i; ++j) {
      if (events_[j].name == events_[i].name)
        raise(errc::invalid_argument, "duplicate event '" + events_[i].name + "' in group");
    }
  }
}

std::uint32_t EventGroup::instances() const {
  return events_.empty() ? 0 : events_[0].instances;
}

std::optional<std::size_t> EventGroup::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (events_[i].name == name) return i;
  }
  return std::nullopt;
}

void DeviceConfig::validate() const {
  if (num_sms == 0) raise(errc::invalid_argument, "device needs num_sms >= 1");
  if (sm_group_size == 0 || num_sms % sm_group_size != 0)
    raise(errc::invalid_argument, "num_sms must be divisible by sm_group_size");
  if (window_cycles == 0) raise(errc::invalid_argument, "window_cycles must be positive");
  if (!(clock_mhz > 0.0)) raise(errc::invalid_argument, "clock_mhz must be positive");
}

void Trace::validate() const {
  device.validate();
  if (group.size() == 0) raise(errc::invalid_argument, "trace needs a non-empty group");
  const Sample* prev = nullptr;
  for (const Sample& sample : samples) {
    if (sample.values.size() != group.size())
      raise(errc::invalid_argument, "sample event rows do not match the group");
    for (const auto& row : sample.values) {
      if (row.size() != group.instances())
        raise(errc::invalid_argument, "sample instance columns do not match the group");
    }
    if (prev != nullptr && sample.window_index <= prev->window_index)
      raise(errc::invalid_argument, "window indices must be strictly increasing");
    prev = &sample;
  }
}

std::uint32_t ConfigTable::add(const Key& key) {
  if (by_key_.contains(key)) raise(errc::duplicate_configuration, "configuration already registered");
  std::uint32_t id = by_id_.empty() ? 0 : by_id_.rbegin()->first + 1;
  by_key_.emplace(key, id);
  by_id_.emplace(id, key);
  return id;
}

void ConfigTable::add_with_id(const Key& key, std::uint32_t id) {
  if (by_key_.contains(key) || by_id_.contains(id))
    raise(errc::duplicate_configuration,
          "configuration or id " + std::to_string(id) + " already registered");
  by_key_.emplace(key, id);
  by_id_.emplace(id, key);
}

std::uint32_t ConfigTable::id_for(const Key& key) const {
  auto it = by_key_.find(key);
  if (it == by_key_.end())
    raise(errc::unknown_configuration, "no id registered for kernel '" + key.kernel_name + "'");
  return it->second;
}

const ConfigTable::Key& ConfigTable::key_for(std::uint32_t id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end())
    raise(errc::unknown_configuration, "no configuration with id " + std::to_string(id));
  return it->second;
}

ConfigTable::Key key_of(const KernelMetadata& meta) {
  return ConfigTable::Key{meta.kernel_name, meta.grid, meta.block, meta.input_size};
}

std::uint32_t derive_config_id(const KernelMetadata& meta, const ConfigTable& table) {
  return table.id_for(key_of(meta));
}

KernelMetadata metadata_for(std::uint32_t config_id, const ConfigTable& table) {
  const ConfigTable::Key& key = table.key_for(config_id);
  return KernelMetadata{key.kernel_name, key.grid, key.block, key.input_size, config_id};
}

const char* decision_name(Decision decision) {
  switch (decision) {
    case Decision::benign: return "benign";
    case Decision::compromised: return "compromised";
    case Decision::incomplete: return "incomplete";
  }
  return "unknown";
}

}  // namespace gpuval
