#pragma once

// Brute-force reference evaluators for the similarity layer. Deliberately
// naive: every admissible lag is scored directly, every warping path is
// enumerated. The test suites compare the library against these.

#include <cstddef>
#include <optional>
#include <vector>

#include "similarity.hpp"

namespace oracle {

// Two-pass Pearson over equal-length vectors. nullopt when either side has
// zero variance.
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);

struct XcorrExpectation {
  bool degenerate = false;  // the library raises degenerate_input
  double coefficient = 0.0;
  std::ptrdiff_t best_lag = 0;
  std::size_t overlap_len = 0;
};

// Scores every integer lag whose overlap is admissible; ties keep the
// smallest lag.
XcorrExpectation xcorr(const gpuval::Series& a, const gpuval::Series& b,
                       double min_overlap_frac);

struct DtwExpectation {
  double distance = 0.0;
  std::size_t path_len = 1;
  double similarity = 1.0;
};

// Exhaustive enumeration of monotone warping paths. Only sane for series of
// length <= 8 or so; asserts on longer input.
DtwExpectation dtw(const gpuval::Series& a, const gpuval::Series& b, bool znormalize);

}  // namespace oracle
