#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "errors.hpp"
#include "golden.hpp"
#include "model.hpp"
#include "presets.hpp"
#include "sim.hpp"
#include "trace_io.hpp"

using namespace gpuval;

namespace {

std::vector<Trace> clean_traces(const Preset& preset, std::size_t count,
                                std::uint64_t seed0) {
  std::vector<Trace> traces;
  for (std::size_t i = 0; i < count; ++i)
    traces.push_back(simulate(preset.program, preset.standard_group, preset.device,
                              preset.marker, NoiseSpec{}, seed0 + i));
  return traces;
}

}  // namespace

TEST_CASE("resample_series interpolates linearly") {
  const Series s{{0.0, 10.0}};
  const Series up = resample_series(s, 5);
  REQUIRE(up.size() == 1);
  REQUIRE(up[0].size() == 5);
  CHECK(up[0][0] == doctest::Approx(0.0));
  CHECK(up[0][2] == doctest::Approx(5.0));
  CHECK(up[0][4] == doctest::Approx(10.0));

  const Series down = resample_series(Series{{0, 2, 4, 6, 8, 10}}, 3);
  CHECK(down[0].front() == doctest::Approx(0.0));
  CHECK(down[0].back() == doctest::Approx(10.0));
  CHECK(down[0][1] == doctest::Approx(5.0));

  const Series mid = resample_series(Series{{2, 4}}, 1);
  CHECK(mid[0][0] == doctest::Approx(3.0));
}

TEST_CASE("build_golden produces one reference per configuration") {
  const Preset preset = make_preset("vecadd");
  const GoldenModel model = build_golden(clean_traces(preset, 8, 100), preset.marker,
                                         preset.policy, preset.configs);
  CHECK(model.sequence.size() == preset.program.kernels.size());
  // vecadd re-launches one configuration; exactly one reference exists.
  CHECK(model.references.size() == 1);
  const ReferenceSegment& ref = select_reference(model, model.sequence.front());
  CHECK(ref.support == 8 * preset.program.kernels.size());
  CHECK(ref.series.size() == preset.standard_group.size());
  CHECK_FALSE(ref.series.front().empty());
  CHECK(ref.per_window_spread.size() == ref.series.size());
  CHECK_THROWS_AS(select_reference(model, 777), Error);
}

TEST_CASE("build_golden is invariant to trace order") {
  const Preset preset = make_preset("histogram");
  std::vector<Trace> traces = clean_traces(preset, 6, 50);
  const GoldenModel a =
      build_golden(traces, preset.marker, preset.policy, preset.configs);
  std::mt19937_64 rng(9);
  std::shuffle(traces.begin(), traces.end(), rng);
  const GoldenModel b =
      build_golden(traces, preset.marker, preset.policy, preset.configs);
  REQUIRE(a.references.size() == b.references.size());
  for (const auto& [id, ref] : a.references) {
    const ReferenceSegment& other = b.references.at(id);
    CHECK(other.series == ref.series);
    CHECK(other.per_window_spread == ref.per_window_spread);
  }
  CHECK(a.sequence == b.sequence);
}

TEST_CASE("zero-dispersion traces give exact references with zero spread") {
  // A preset-shaped rig with dispersion forced to zero: the median must equal
  // the common value and the spread must vanish.
  Preset preset = make_preset("vecadd");
  for (auto& kernel : preset.program.kernels)
    for (auto& phase : kernel.profile.phases) phase.dispersion = 0.0;
  const GoldenModel model = build_golden(clean_traces(preset, 3, 7), preset.marker,
                                         preset.policy, preset.configs);
  for (const auto& [id, ref] : model.references) {
    for (const auto& channel : ref.per_window_spread)
      for (double v : channel) CHECK(v == 0.0);
  }
}

TEST_CASE("build_golden rejects inconsistent sequences and empty pools") {
  const Preset preset = make_preset("vecadd");
  CHECK_THROWS_AS(
      build_golden({}, preset.marker, preset.policy, preset.configs), Error);

  std::vector<Trace> traces = clean_traces(preset, 2, 5);
  ProgramSpec shorter = preset.program;
  shorter.kernels.pop_back();
  traces.push_back(simulate(shorter, preset.standard_group, preset.device,
                            preset.marker, NoiseSpec{}, 77));
  try {
    build_golden(traces, preset.marker, preset.policy, preset.configs);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::inconsistent_kernel_sequence);
  }
}

TEST_CASE("policy validation bounds the knobs") {
  ValidationPolicy p;
  CHECK_NOTHROW(p.validate());
  ValidationPolicy bad_tau = p;
  bad_tau.tau_corr = 1.5;
  CHECK_THROWS_AS(bad_tau.validate(), Error);
  ValidationPolicy bad_run = p;
  bad_run.reject_run_len = 0;
  CHECK_THROWS_AS(bad_run.validate(), Error);
  ValidationPolicy bad_eps = p;
  bad_eps.epsilon_amplitude = -0.2;
  CHECK_THROWS_AS(bad_eps.validate(), Error);
}
