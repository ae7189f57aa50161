#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "model.hpp"

namespace gpuval {

// Channel-major multichannel series: series[channel][window]. All channels of
// one series share a length.
using Series = std::vector<std::vector<double>>;

enum class Reduction { sum_instances, per_instance };

// Turns windows of counter samples into an analysis series. sum_instances
// yields one channel per event (instances summed); per_instance yields
// event-major channels, one per (event, instance).
Series flatten(const std::vector<Sample>& samples, const EventGroup& group,
               Reduction reduction);
Series flatten(const Segment& segment, const EventGroup& group, Reduction reduction);

std::size_t series_length(const Series& series);

struct XcorrOptions {
  double min_overlap_frac = 0.5;  // of min(|a|, |b|)
};

struct XcorrResult {
  double coefficient = 0.0;
  std::ptrdiff_t best_lag = 0;
  std::size_t overlap_len = 0;
};

// Lag-searching correlation. Lag k aligns a[i] with b[i + k]; every integer
// lag whose overlap has at least max(2, min_overlap_frac * min(|a|, |b|))
// windows is scored as the mean over channels of the Pearson coefficient on
// the overlap. Channels that are constant over a whole series carry zero
// weight; channels constant on one lag's overlap are skipped for that lag
// only. The best lag wins by strictly greater coefficient, so ties keep the
// smallest lag scanned (scan order is ascending). Raises degenerate_input
// when no channel or no lag can be scored.
XcorrResult xcorr(const Series& a, const Series& b, XcorrOptions options = {});

struct DtwOptions {
  // z-normalize each channel of each series before matching; channels that
  // are constant in either series are dropped. Disable to compare absolute
  // levels, e.g. counter aggregates against a stored reference.
  bool znormalize = true;
};

struct DtwResult {
  double distance = 0.0;
  std::size_t path_len = 1;  // cells on the optimal path
  double similarity = 1.0;   // 1 / (1 + distance / path_len)
};

// Dynamic time warping over {(1,0), (0,1), (1,1)} steps with Euclidean local
// cost between channel vectors. distance is the minimal path cost; among
// equal-cost paths the shortest one defines path_len. With znormalize, if
// every channel is dropped as constant the series carry no shape: equal
// lengths score similarity 1, otherwise the length gap is scored as distance
// |len a - len b| over a path of max(len a, len b) cells.
DtwResult dtw_similarity(const Series& a, const Series& b, DtwOptions options = {});

struct MatchResult {
  bool matched = false;
  double coefficient = -1.0;
  std::ptrdiff_t best_lag = 0;
  std::string diagnostic;
};

// Threshold check used per segment: matched iff the xcorr coefficient is
// strictly greater than tau. Degenerate inputs come back as a non-match with
// a diagnostic instead of an error.
MatchResult match_series(const Series& observed, const Series& reference, double tau,
                         XcorrOptions options = {});

}  // namespace gpuval
