#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "gpuval.h"

// Fixture files are produced through the C++ core directly.
#include "golden.hpp"
#include "presets.hpp"
#include "sim.hpp"
#include "trace_io.hpp"

namespace fs = std::filesystem;
using namespace gpuval;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::mt19937_64 rng(std::random_device{}());
    path = fs::temp_directory_path() /
           ("gpuval-capi-" + std::to_string(rng() % 1000000000));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

struct Fixture {
  TempDir dir;
  Preset preset = make_preset("vecadd");
  std::string golden_path;
  std::string trace_path;

  Fixture() {
    std::vector<Trace> traces;
    for (std::uint64_t seed = 1; seed <= 6; ++seed)
      traces.push_back(simulate(preset.program, preset.standard_group, preset.device,
                                preset.marker, NoiseSpec{}, seed));
    const GoldenModel model =
        build_golden(traces, preset.marker, preset.policy, preset.configs);
    golden_path = dir.file("golden.json");
    write_golden(model, golden_path);
    trace_path = dir.file("probe.trace");
    write_trace(simulate(preset.program, preset.standard_group, preset.device,
                         preset.marker, NoiseSpec{}, 77),
                trace_path);
  }
};

}  // namespace

TEST_CASE("version and error strings are always present") {
  CHECK(gv_version() != nullptr);
  CHECK(std::strlen(gv_version()) > 0);
  CHECK(gv_last_error() != nullptr);
  gv_string_free(nullptr);  // must be a no-op
}

TEST_CASE("config lifecycle: create, set, dump") {
  gv_config* config = nullptr;
  REQUIRE(gv_config_create(&config) == GV_OK);
  REQUIRE(config != nullptr);

  CHECK(gv_config_set(config, "preset=histogram") == GV_OK);
  CHECK(gv_config_set(config, "campaign.normal_traces=7") == GV_OK);
  CHECK(gv_config_set(config, "hw.link_bandwidth=0.5") == GV_OK);

  char* dumped = nullptr;
  REQUIRE(gv_config_dump(config, &dumped) == GV_OK);
  const std::string text(dumped);
  gv_string_free(dumped);
  CHECK(text.find("\"preset\": \"histogram\"") != std::string::npos);
  CHECK(text.find("\"normal_traces\": 7") != std::string::npos);
  CHECK(text.find("\"link_bandwidth\": 0.5") != std::string::npos);

  CHECK(gv_config_set(config, "no-equals-sign") == GV_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(gv_last_error()) > 0);
  CHECK(gv_config_set(nullptr, "a=1") == GV_ERR_INVALID_ARGUMENT);

  gv_config_free(config);
}

TEST_CASE("config load merges a user file over the defaults") {
  TempDir dir;
  const std::string path = dir.file("run.json");
  {
    std::ofstream out(path);
    out << "{\"preset\": \"matmul\", \"campaign\": {\"attack\": \"rowhammer\"}}\n";
  }
  gv_config* config = nullptr;
  REQUIRE(gv_config_load(path.c_str(), &config) == GV_OK);
  char* dumped = nullptr;
  REQUIRE(gv_config_dump(config, &dumped) == GV_OK);
  const std::string text(dumped);
  gv_string_free(dumped);
  gv_config_free(config);
  CHECK(text.find("\"preset\": \"matmul\"") != std::string::npos);
  CHECK(text.find("\"attack\": \"rowhammer\"") != std::string::npos);
  // Defaults survive underneath the merge.
  CHECK(text.find("\"golden_traces\"") != std::string::npos);

  gv_config* missing = nullptr;
  CHECK(gv_config_load(dir.file("absent.json").c_str(), &missing) == GV_ERR_IO);
  CHECK(missing == nullptr);
}

TEST_CASE("traces round-trip through the handle API") {
  Fixture fx;
  gv_trace* trace = nullptr;
  REQUIRE(gv_trace_read(fx.trace_path.c_str(), &trace) == GV_OK);
  const std::string copy = fx.dir.file("copy.trace");
  REQUIRE(gv_trace_write(trace, copy.c_str()) == GV_OK);
  gv_trace_free(trace);

  std::ifstream a(fx.trace_path, std::ios::binary), b(copy, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)),
                       std::istreambuf_iterator<char>());
  const std::string sb((std::istreambuf_iterator<char>(b)),
                       std::istreambuf_iterator<char>());
  CHECK(sa == sb);

  gv_trace* nope = nullptr;
  CHECK(gv_trace_read(fx.dir.file("absent.trace").c_str(), &nope) == GV_ERR_IO);
}

TEST_CASE("validate through handles returns a verdict document") {
  Fixture fx;
  gv_golden* model = nullptr;
  REQUIRE(gv_golden_read(fx.golden_path.c_str(), &model) == GV_OK);
  gv_trace* trace = nullptr;
  REQUIRE(gv_trace_read(fx.trace_path.c_str(), &trace) == GV_OK);

  char* verdict = nullptr;
  REQUIRE(gv_validate(model, trace, &verdict) == GV_OK);
  const std::string text(verdict);
  gv_string_free(verdict);
  CHECK(text.find("\"decision\": \"benign\"") != std::string::npos);
  CHECK(text.find("\"segments\"") != std::string::npos);

  gv_trace_free(trace);
  gv_golden_free(model);
}

TEST_CASE("validate_files is the one-shot equivalent") {
  Fixture fx;
  char* verdict = nullptr;
  REQUIRE(gv_validate_files(fx.golden_path.c_str(), fx.trace_path.c_str(), &verdict) ==
          GV_OK);
  const std::string text(verdict);
  gv_string_free(verdict);
  CHECK(text.find("\"decision\": \"benign\"") != std::string::npos);

  char* nothing = nullptr;
  CHECK(gv_validate_files(fx.golden_path.c_str(), "/no/such/file", &nothing) ==
        GV_ERR_IO);
}

TEST_CASE("build-golden driver writes the model where asked") {
  TempDir dir;
  gv_config* config = nullptr;
  REQUIRE(gv_config_create(&config) == GV_OK);
  REQUIRE(gv_config_set(config, "golden.traces=4") == GV_OK);
  char* paths = nullptr;
  REQUIRE(gv_run_build_golden(config, dir.path.string().c_str(), &paths) == GV_OK);
  const std::string out(paths);
  gv_string_free(paths);
  gv_config_free(config);
  CHECK(out.find("golden.json") != std::string::npos);
  CHECK(fs::exists(dir.path / "golden.json"));

  // The written model is immediately consumable.
  gv_golden* model = nullptr;
  CHECK(gv_golden_read((dir.path / "golden.json").string().c_str(), &model) == GV_OK);
  gv_golden_free(model);
}

TEST_CASE("ingest converts a profiler export") {
  Fixture fx;
  // Build the CSV from the trace the fixture wrote.
  Trace t = read_trace(fx.trace_path);
  const std::string csv_path = fx.dir.file("export.csv");
  {
    std::ofstream csv(csv_path);
    csv << "sample_ordinal,event_name,instance_id,value\n";
    for (const Sample& s : t.samples)
      for (std::size_t e = 0; e < t.group.size(); ++e)
        for (std::size_t i = 0; i < t.group.instances(); ++i)
          csv << s.window_index << ',' << t.group.events()[e].name << ',' << i << ','
              << s.values[e][i] << '\n';
  }
  gv_config* config = nullptr;
  REQUIRE(gv_config_create(&config) == GV_OK);
  const std::string out_path = fx.dir.file("ingested.trace");
  REQUIRE(gv_ingest_csv(config, csv_path.c_str(), out_path.c_str()) == GV_OK);
  gv_config_free(config);

  const Trace back = read_trace(out_path);
  REQUIRE(back.samples.size() == t.samples.size());
  for (std::size_t i = 0; i < back.samples.size(); ++i)
    CHECK(back.samples[i].values == t.samples[i].values);
}

TEST_CASE("null arguments come back as invalid, not crashes") {
  CHECK(gv_config_create(nullptr) == GV_ERR_INVALID_ARGUMENT);
  CHECK(gv_config_dump(nullptr, nullptr) == GV_ERR_INVALID_ARGUMENT);
  CHECK(gv_trace_read(nullptr, nullptr) == GV_ERR_INVALID_ARGUMENT);
  CHECK(gv_validate(nullptr, nullptr, nullptr) == GV_ERR_INVALID_ARGUMENT);
  CHECK(gv_run_campaign(nullptr, nullptr, nullptr) == GV_ERR_INVALID_ARGUMENT);
  gv_config_free(nullptr);
  gv_trace_free(nullptr);
  gv_golden_free(nullptr);
}
