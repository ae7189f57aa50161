#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "errors.hpp"
#include "golden.hpp"
#include "model.hpp"
#include "presets.hpp"
#include "sim.hpp"
#include "trace_io.hpp"

using namespace gpuval;

namespace {

Trace random_trace(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Trace t;
  t.group = EventGroup{{
      {"inst", EventCategory::sm, 3},
      {"ld", EventCategory::memory, 3},
      {"marker", EventCategory::atomic, 3},
  }};
  t.device.num_sms = 6;
  t.device.sm_group_size = 2;
  std::uniform_int_distribution<std::uint64_t> count(0, 50'000);
  std::uint64_t w = 0;
  for (int i = 0; i < 40; ++i) {
    Sample s;
    w += 1 + (rng() % 3);
    s.window_index = w;
    s.values.assign(3, std::vector<std::uint64_t>(3));
    for (auto& per_event : s.values)
      for (auto& v : per_event) v = count(rng);
    t.samples.push_back(s);
  }
  KernelMetadata meta;
  meta.kernel_name = "probe";
  meta.grid = {12, 1, 1};
  meta.block = {128, 1, 1};
  meta.input_size = 65536;
  meta.config_id = 3;
  t.meta = meta;
  return t;
}

}  // namespace

TEST_CASE("format_double is shortest round-trip") {
  for (double v : {0.0, 1.0, 0.5, 0.8, 1.0 / 3.0, 1e-9, 12345.678901, -2.25}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("trace files survive a write/read round trip byte-identically") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const Trace t = random_trace(seed);
    std::ostringstream first;
    write_trace(t, first);
    std::istringstream in(first.str());
    Trace back = read_trace(in);
    CHECK(back == t);
    std::ostringstream second;
    write_trace(back, second);
    CHECK(second.str() == first.str());
  }
}

TEST_CASE("trace reader rejects malformed headers") {
  std::istringstream bad_magic("nope,1\n");
  CHECK_THROWS_AS(read_trace(bad_magic), Error);
  std::istringstream bad_version("gpuval-trace,99\n");
  try {
    read_trace(bad_version);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::version_mismatch);
  }
}

TEST_CASE("profiler csv ingestion reconstructs the trace") {
  const Trace t = random_trace(7);
  // Rebuild the profiler's export by hand, column order shuffled.
  std::ostringstream csv;
  csv << "value,instance_id,sample_ordinal,event_name\n";
  for (const Sample& s : t.samples) {
    for (std::size_t e = 0; e < t.group.size(); ++e) {
      for (std::size_t i = 0; i < t.group.instances(); ++i) {
        csv << s.values[e][i] << ',' << i << ',' << s.window_index << ','
            << t.group.events()[e].name << '\n';
      }
    }
  }
  std::istringstream in(csv.str());
  const Trace got = ingest_profiler_csv(in, t.group, t.device);
  CHECK(got.samples.size() == t.samples.size());
  for (std::size_t i = 0; i < got.samples.size(); ++i) {
    CHECK(got.samples[i].window_index == t.samples[i].window_index);
    CHECK(got.samples[i].values == t.samples[i].values);
  }
}

TEST_CASE("profiler csv ingestion flags unknown events and holes") {
  const EventGroup group{{{"inst", EventCategory::sm, 2}}};
  DeviceConfig dev;
  dev.num_sms = 2;
  dev.sm_group_size = 1;

  std::istringstream unknown(
      "sample_ordinal,event_name,instance_id,value\n0,mystery,0,5\n");
  try {
    ingest_profiler_csv(unknown, group, dev);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::unknown_event);
  }

  std::istringstream hole("sample_ordinal,event_name,instance_id,value\n0,inst,0,5\n");
  try {
    ingest_profiler_csv(hole, group, dev);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::missing_instance);
  }
}

TEST_CASE("golden models survive a write/read round trip") {
  const Preset preset = make_preset("vecadd");
  std::vector<Trace> traces;
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    traces.push_back(simulate(preset.program, preset.standard_group, preset.device,
                              preset.marker, NoiseSpec{}, seed));
  const GoldenModel model =
      build_golden(traces, preset.marker, preset.policy, preset.configs);

  std::ostringstream first;
  write_golden(model, first);
  std::istringstream in(first.str());
  const GoldenModel back = read_golden(in);

  CHECK(back.group == model.group);
  CHECK(back.device == model.device);
  CHECK(back.sequence == model.sequence);
  CHECK(back.configs == model.configs);
  CHECK(back.marker.expected_amplitude == model.marker.expected_amplitude);
  CHECK(back.policy.tau_corr == model.policy.tau_corr);
  CHECK(back.policy.reject_run_len == model.policy.reject_run_len);
  REQUIRE(back.references.size() == model.references.size());
  for (const auto& [id, ref] : model.references) {
    const ReferenceSegment& other = back.references.at(id);
    CHECK(other.series == ref.series);
    CHECK(other.per_window_spread == ref.per_window_spread);
    CHECK(other.support == ref.support);
  }

  std::ostringstream second;
  write_golden(back, second);
  CHECK(second.str() == first.str());
}
