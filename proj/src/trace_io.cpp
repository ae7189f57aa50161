#include "trace_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

#include "errors.hpp"

namespace gpuval {

namespace {

using nlohmann::json;

constexpr int trace_format_version = 1;
constexpr int golden_format_version = 1;

[[noreturn]] void parse_fail(std::size_t line, const std::string& why) {
  raise(errc::parse_error, "line " + std::to_string(line) + ": " + why);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::uint64_t parse_u64(const std::string& field, std::size_t line) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    parse_fail(line, "expected an unsigned integer, got '" + field + "'");
  return value;
}

std::uint32_t parse_u32(const std::string& field, std::size_t line) {
  std::uint64_t value = parse_u64(field, line);
  if (value > 0xffffffffull) parse_fail(line, "value '" + field + "' does not fit 32 bits");
  return static_cast<std::uint32_t>(value);
}

double parse_f64(const std::string& field, std::size_t line) {
  try {
    std::size_t used = 0;
    double value = std::stod(field, &used);
    if (used != field.size()) parse_fail(line, "trailing characters in number '" + field + "'");
    return value;
  } catch (const std::logic_error&) {
    parse_fail(line, "expected a number, got '" + field + "'");
  }
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io_failure, "cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::io_failure, "cannot open '" + path + "' for writing");
  return out;
}

void finish_write(std::ostream& out, const std::string& path) {
  out.flush();
  if (!out) raise(errc::io_failure, "write to '" + path + "' failed");
}

json series_to_json(const Series& series) {
  json out = json::array();
  for (const auto& channel : series) out.push_back(channel);
  return out;
}

Series series_from_json(const json& value) {
  Series out;
  for (const auto& channel : value) out.push_back(channel.get<std::vector<double>>());
  return out;
}

json dim_to_json(const Dim3& dim) { return json::array({dim.x, dim.y, dim.z}); }

Dim3 dim_from_json(const json& value) {
  return Dim3{value.at(0).get<std::uint32_t>(), value.at(1).get<std::uint32_t>(),
              value.at(2).get<std::uint32_t>()};
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) raise(errc::io_failure, "double formatting failed");
  return std::string(buffer, ptr);
}

void write_trace(const Trace& trace, std::ostream& out) {
  trace.validate();
  out << "gpuval-trace," << trace_format_version << "\n";
  out << "device," << trace.device.num_sms << ',' << trace.device.sm_group_size << ','
      << trace.device.window_cycles << ',' << format_double(trace.device.clock_mhz) << "\n";
  for (const EventSpec& event : trace.group.events()) {
    out << "event," << event.name << ',' << category_name(event.category) << ','
        << event.instances << "\n";
  }
  if (trace.meta) {
    const KernelMetadata& m = *trace.meta;
    out << "meta," << m.kernel_name << ',' << m.grid.x << ',' << m.grid.y << ',' << m.grid.z
        << ',' << m.block.x << ',' << m.block.y << ',' << m.block.z << ',' << m.input_size
        << ',' << m.config_id << "\n";
  }
  out << "samples," << trace.samples.size() << "\n";
  for (const Sample& sample : trace.samples) {
    for (std::size_t e = 0; e < trace.group.size(); ++e) {
      const std::string& name = trace.group.events()[e].name;
      for (std::size_t i = 0; i < sample.values[e].size(); ++i) {
        out << sample.window_index << ',' << name << ',' << i << ',' << sample.values[e][i]
            << "\n";
      }
    }
  }
}

void write_trace(const Trace& trace, const std::string& path) {
  std::ofstream out = open_out(path);
  write_trace(trace, out);
  finish_write(out, path);
}

Trace read_trace(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    return true;
  };

  if (!next_line()) raise(errc::parse_error, "empty trace file");
  std::vector<std::string> fields = split_fields(line);
  if (fields.size() != 2 || fields[0] != "gpuval-trace")
    parse_fail(line_no, "not a gpuval trace file");
  if (parse_u64(fields[1], line_no) != trace_format_version)
    raise(errc::version_mismatch, "unsupported trace format version " + fields[1]);

  if (!next_line()) parse_fail(line_no + 1, "missing device line");
  fields = split_fields(line);
  if (fields.size() != 5 || fields[0] != "device") parse_fail(line_no, "expected device line");
  Trace trace;
  trace.device.num_sms = parse_u32(fields[1], line_no);
  trace.device.sm_group_size = parse_u32(fields[2], line_no);
  trace.device.window_cycles = parse_u32(fields[3], line_no);
  trace.device.clock_mhz = parse_f64(fields[4], line_no);

  std::vector<EventSpec> events;
  bool saw_samples = false;
  std::size_t declared_samples = 0;
  while (next_line()) {
    fields = split_fields(line);
    if (fields.empty()) parse_fail(line_no, "blank line");
    if (fields[0] == "event") {
      if (fields.size() != 4) parse_fail(line_no, "event line needs 4 fields");
      events.push_back(EventSpec{fields[1], category_from_name(fields[2]),
                                 parse_u32(fields[3], line_no)});
      continue;
    }
    if (fields[0] == "meta") {
      if (fields.size() != 10) parse_fail(line_no, "meta line needs 10 fields");
      KernelMetadata meta;
      meta.kernel_name = fields[1];
      meta.grid = Dim3{parse_u32(fields[2], line_no), parse_u32(fields[3], line_no),
                       parse_u32(fields[4], line_no)};
      meta.block = Dim3{parse_u32(fields[5], line_no), parse_u32(fields[6], line_no),
                        parse_u32(fields[7], line_no)};
      meta.input_size = parse_u64(fields[8], line_no);
      meta.config_id = parse_u32(fields[9], line_no);
      trace.meta = meta;
      continue;
    }
    if (fields[0] == "samples") {
      if (fields.size() != 2) parse_fail(line_no, "samples line needs 2 fields");
      declared_samples = parse_u64(fields[1], line_no);
      saw_samples = true;
      break;
    }
    parse_fail(line_no, "unexpected record '" + fields[0] + "'");
  }
  if (!saw_samples) parse_fail(line_no, "missing samples line");
  if (events.empty()) parse_fail(line_no, "trace declares no events");
  trace.group = EventGroup(std::move(events));

  std::map<std::uint64_t, Sample> samples;
  std::map<std::uint64_t, std::vector<std::vector<bool>>> seen;
  while (next_line()) {
    fields = split_fields(line);
    if (fields.size() != 4) parse_fail(line_no, "sample row needs 4 fields");
    std::uint64_t window = parse_u64(fields[0], line_no);
    auto event = trace.group.index_of(fields[1]);
    if (!event)
      raise(errc::unknown_event,
            "line " + std::to_string(line_no) + ": event '" + fields[1] +
                "' is not in the trace group");
    std::uint64_t instance = parse_u64(fields[2], line_no);
    if (instance >= trace.group.instances())
      parse_fail(line_no, "instance " + fields[2] + " out of range");
    std::uint64_t count = parse_u64(fields[3], line_no);
    auto [it, inserted] = samples.try_emplace(window);
    if (inserted) {
      it->second.window_index = window;
      it->second.values.assign(trace.group.size(),
                               std::vector<std::uint64_t>(trace.group.instances(), 0));
      seen.emplace(window, std::vector<std::vector<bool>>(
                               trace.group.size(),
                               std::vector<bool>(trace.group.instances(), false)));
    }
    auto& seen_cells = seen.at(window);
    if (seen_cells[*event][instance])
      parse_fail(line_no, "duplicate reading for window " + fields[0] + ", event '" +
                              fields[1] + "', instance " + fields[2]);
    seen_cells[*event][instance] = true;
    it->second.values[*event][instance] = count;
  }
  for (const auto& [window, cells] : seen) {
    for (std::size_t e = 0; e < cells.size(); ++e) {
      for (std::size_t i = 0; i < cells[e].size(); ++i) {
        if (!cells[e][i])
          raise(errc::missing_instance,
                "window " + std::to_string(window) + " lacks event '" +
                    trace.group.events()[e].name + "' instance " + std::to_string(i));
      }
    }
  }
  if (samples.size() != declared_samples)
    raise(errc::parse_error, "trace declares " + std::to_string(declared_samples) +
                                 " samples but carries " + std::to_string(samples.size()));
  trace.samples.reserve(samples.size());
  for (auto& [window, sample] : samples) trace.samples.push_back(std::move(sample));
  trace.validate();
  return trace;
}

Trace read_trace(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_trace(in);
}

Trace ingest_profiler_csv(std::istream& in, const EventGroup& group,
                          const DeviceConfig& device) {
  std::string line;
  if (!std::getline(in, line)) raise(errc::parse_error, "empty profiler export");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_fields(line);
  std::ptrdiff_t col_ordinal = -1, col_event = -1, col_instance = -1, col_value = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "sample_ordinal") col_ordinal = static_cast<std::ptrdiff_t>(i);
    if (header[i] == "event_name") col_event = static_cast<std::ptrdiff_t>(i);
    if (header[i] == "instance_id") col_instance = static_cast<std::ptrdiff_t>(i);
    if (header[i] == "value") col_value = static_cast<std::ptrdiff_t>(i);
  }
  if (col_ordinal < 0 || col_event < 0 || col_instance < 0 || col_value < 0)
    raise(errc::parse_error,
          "header must name sample_ordinal, event_name, instance_id and value");

  Trace trace;
  trace.group = group;
  trace.device = device;
  std::map<std::uint64_t, Sample> samples;
  std::map<std::uint64_t, std::vector<std::vector<bool>>> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size())
      parse_fail(line_no, "row has " + std::to_string(fields.size()) + " fields, header has " +
                              std::to_string(header.size()));
    std::uint64_t ordinal = parse_u64(fields[static_cast<std::size_t>(col_ordinal)], line_no);
    const std::string& event_name = fields[static_cast<std::size_t>(col_event)];
    auto event = group.index_of(event_name);
    if (!event)
      raise(errc::unknown_event, "line " + std::to_string(line_no) + ": event '" + event_name +
                                     "' is not in the configured group");
    std::uint64_t instance = parse_u64(fields[static_cast<std::size_t>(col_instance)], line_no);
    if (instance >= group.instances())
      parse_fail(line_no, "instance " + std::to_string(instance) + " out of range");
    std::uint64_t value = parse_u64(fields[static_cast<std::size_t>(col_value)], line_no);
    auto [it, inserted] = samples.try_emplace(ordinal);
    if (inserted) {
      it->second.window_index = ordinal;
      it->second.values.assign(group.size(), std::vector<std::uint64_t>(group.instances(), 0));
      seen.emplace(ordinal,
                   std::vector<std::vector<bool>>(group.size(),
                                                  std::vector<bool>(group.instances(), false)));
    }
    auto& seen_cells = seen.at(ordinal);
    if (seen_cells[*event][instance])
      parse_fail(line_no, "duplicate reading for sample " + std::to_string(ordinal));
    seen_cells[*event][instance] = true;
    it->second.values[*event][instance] = value;
  }
  for (const auto& [ordinal, cells] : seen) {
    for (std::size_t e = 0; e < cells.size(); ++e) {
      for (std::size_t i = 0; i < cells[e].size(); ++i) {
        if (!cells[e][i])
          raise(errc::missing_instance,
                "sample " + std::to_string(ordinal) + " lacks event '" +
                    group.events()[e].name + "' instance " + std::to_string(i));
      }
    }
  }
  trace.samples.reserve(samples.size());
  for (auto& [ordinal, sample] : samples) trace.samples.push_back(std::move(sample));
  trace.validate();
  return trace;
}

Trace ingest_profiler_csv(const std::string& path, const EventGroup& group,
                          const DeviceConfig& device) {
  std::ifstream in = open_in(path);
  return ingest_profiler_csv(in, group, device);
}

void write_golden(const GoldenModel& model, std::ostream& out) {
  json doc;
  doc["format"] = "gpuval-golden";
  doc["version"] = golden_format_version;
  doc["device"] = {{"num_sms", model.device.num_sms},
                   {"sm_group_size", model.device.sm_group_size},
                   {"window_cycles", model.device.window_cycles},
                   {"clock_mhz", model.device.clock_mhz}};
  json group = json::array();
  for (const EventSpec& event : model.group.events()) {
    group.push_back({{"name", event.name},
                     {"category", category_name(event.category)},
                     {"instances", event.instances}});
  }
  doc["group"] = group;
  json amplitudes = json::object();
  for (const auto& [id, amplitude] : model.marker.expected_amplitude)
    amplitudes[std::to_string(id)] = amplitude;
  doc["marker"] = {{"event", model.marker.marker_event},
                   {"presence_threshold", model.marker.presence_threshold},
                   {"expected_amplitude", amplitudes}};
  doc["policy"] = {{"tau_corr", model.policy.tau_corr},
                   {"reject_run_len", model.policy.reject_run_len},
                   {"epsilon_amplitude", model.policy.epsilon_amplitude},
                   {"marker_threshold", model.policy.marker_threshold}};
  json configs = json::object();
  for (const auto& [id, key] : model.configs.entries()) {
    configs[std::to_string(id)] = {{"kernel_name", key.kernel_name},
                                   {"grid", dim_to_json(key.grid)},
                                   {"block", dim_to_json(key.block)},
                                   {"input_size", key.input_size}};
  }
  doc["configs"] = configs;
  doc["sequence"] = model.sequence;
  json references = json::object();
  for (const auto& [id, ref] : model.references) {
    references[std::to_string(id)] = {{"support", ref.support},
                                      {"series", series_to_json(ref.series)},
                                      {"per_window_spread", series_to_json(ref.per_window_spread)}};
  }
  doc["references"] = references;
  out << doc.dump(2) << "\n";
}

void write_golden(const GoldenModel& model, const std::string& path) {
  std::ofstream out = open_out(path);
  write_golden(model, out);
  finish_write(out, path);
}

GoldenModel read_golden(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    raise(errc::parse_error, std::string("golden document: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "gpuval-golden")
      raise(errc::parse_error, "not a gpuval golden document");
    if (doc.at("version").get<int>() != golden_format_version)
      raise(errc::version_mismatch,
            "unsupported golden format version " + doc.at("version").dump());
    GoldenModel model;
    const json& device = doc.at("device");
    model.device.num_sms = device.at("num_sms").get<std::uint32_t>();
    model.device.sm_group_size = device.at("sm_group_size").get<std::uint32_t>();
    model.device.window_cycles = device.at("window_cycles").get<std::uint32_t>();
    model.device.clock_mhz = device.at("clock_mhz").get<double>();
    std::vector<EventSpec> events;
    for (const json& event : doc.at("group")) {
      events.push_back(EventSpec{event.at("name").get<std::string>(),
                                 category_from_name(event.at("category").get<std::string>()),
                                 event.at("instances").get<std::uint32_t>()});
    }
    model.group = EventGroup(std::move(events));
    const json& marker = doc.at("marker");
    model.marker.marker_event = marker.at("event").get<std::string>();
    model.marker.presence_threshold = marker.at("presence_threshold").get<std::uint64_t>();
    for (const auto& [key, value] : marker.at("expected_amplitude").items())
      model.marker.expected_amplitude[parse_u32(key, 0)] = value.get<std::uint64_t>();
    const json& policy = doc.at("policy");
    model.policy.tau_corr = policy.at("tau_corr").get<double>();
    model.policy.reject_run_len = policy.at("reject_run_len").get<std::size_t>();
    model.policy.epsilon_amplitude = policy.at("epsilon_amplitude").get<double>();
    model.policy.marker_threshold = policy.at("marker_threshold").get<std::uint64_t>();
    for (const auto& [key, value] : doc.at("configs").items()) {
      ConfigTable::Key entry{value.at("kernel_name").get<std::string>(),
                             dim_from_json(value.at("grid")), dim_from_json(value.at("block")),
                             value.at("input_size").get<std::uint64_t>()};
      model.configs.add_with_id(entry, parse_u32(key, 0));
    }
    model.sequence = doc.at("sequence").get<std::vector<std::uint32_t>>();
    for (const auto& [key, value] : doc.at("references").items()) {
      ReferenceSegment ref;
      ref.config_id = parse_u32(key, 0);
      ref.support = value.at("support").get<std::size_t>();
      ref.series = series_from_json(value.at("series"));
      ref.per_window_spread = series_from_json(value.at("per_window_spread"));
      model.references.emplace(ref.config_id, std::move(ref));
    }
    return model;
  } catch (const json::exception& e) {
    raise(errc::parse_error, std::string("golden document: ") + e.what());
  }
}

GoldenModel read_golden(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_golden(in);
}

}  // namespace gpuval
