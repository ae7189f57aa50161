#pragma once

#include <iosfwd>
#include <string>

#include "golden.hpp"
#include "model.hpp"

namespace gpuval {

// Shortest representation that parses back to the same double.
std::string format_double(double value);

// Trace files are line-oriented CSV, UTF-8 with LF endings:
//   gpuval-trace,1
//   device,<num_sms>,<sm_group_size>,<window_cycles>,<clock_mhz>
//   event,<name>,<category>,<instances>        (one per group member)
//   meta,<kernel>,<gx>,<gy>,<gz>,<bx>,<by>,<bz>,<input_size>,<config_id>
//   samples,<count>
//   <window_index>,<event_name>,<instance_id>,<count>
// Rows are sorted by window, then group order, then instance, which makes the
// writer byte-deterministic. read(write(t)) == t.
void write_trace(const Trace& trace, std::ostream& out);
void write_trace(const Trace& trace, const std::string& path);
Trace read_trace(std::istream& in);
Trace read_trace(const std::string& path);

// Raw profiler export: a header row naming sample_ordinal, event_name,
// instance_id and value (any column order), then one row per reading.
// Ordinals become window indices. A reading for an event outside the group
// raises unknown_event; a window that lacks any (event, instance) cell raises
// missing_instance.
Trace ingest_profiler_csv(std::istream& in, const EventGroup& group,
                          const DeviceConfig& device);
Trace ingest_profiler_csv(const std::string& path, const EventGroup& group,
                          const DeviceConfig& device);

// Golden models travel as one self-describing JSON document: group, device,
// marker amplitudes, policy, config registry, kernel sequence and references,
// so validation needs no side channel. read(write(m)) is lossless.
void write_golden(const GoldenModel& model, std::ostream& out);
void write_golden(const GoldenModel& model, const std::string& path);
GoldenModel read_golden(std::istream& in);
GoldenModel read_golden(const std::string& path);

}  // namespace gpuval
