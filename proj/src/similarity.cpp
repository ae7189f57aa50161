#include "similarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"

namespace gpuval {

namespace {

bool is_constant(const std::vector<double>& channel) {
  for (double v : channel) {
    if (v != channel.front()) return false;
  }
  return true;
}

void check_series(const Series& series, const char* label) {
  if (series.empty()) raise(errc::invalid_argument, std::string(label) + " has no channels");
  for (const auto& channel : series) {
    if (channel.empty()) raise(errc::invalid_argument, std::string(label) + " has an empty channel");
    if (channel.size() != series.front().size())
      raise(errc::invalid_argument, std::string(label) + " channels differ in length");
  }
}

// Pearson coefficient of a[i0..i0+n) against b[j0..j0+n); NaN when either
// side has zero variance on the window.
double pearson(const std::vector<double>& a, std::size_t i0, const std::vector<double>& b,
               std::size_t j0, std::size_t n) {
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_a += a[i0 + i];
    mean_b += b[j0 + i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double cross = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double da = a[i0 + i] - mean_a;
    double db = b[j0 + i] - mean_b;
    cross += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return cross / std::sqrt(var_a * var_b);
}

std::vector<double> zscore(const std::vector<double>& channel) {
  double mean = 0.0;
  for (double v : channel) mean += v;
  mean /= static_cast<double>(channel.size());
  double var = 0.0;
  for (double v : channel) {
    double d = v - mean;
    var += d * d;
  }
  var /= static_cast<double>(channel.size());
  double sd = std::sqrt(var);
  std::vector<double> out(channel.size());
  for (std::size_t i = 0; i < channel.size(); ++i) out[i] = (channel[i] - mean) / sd;
  return out;
}

double local_cost(const Series& a, const Series& b, std::size_t i, std::size_t j) {
  double sum = 0.0;
  for (std::size_t ch = 0; ch < a.size(); ++ch) {
    double d = a[ch][i] - b[ch][j];
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace

Series flatten(const std::vector<Sample>& samples, const EventGroup& group,
               Reduction reduction) {
  std::size_t events = group.size();
  std::size_t instances = group.instances();
  std::size_t channels = reduction == Reduction::sum_instances ? events : events * instances;
  Series out(channels, std::vector<double>(samples.size(), 0.0));
  for (std::size_t w = 0; w < samples.size(); ++w) {
    const Sample& sample = samples[w];
    if (sample.values.size() != events)
      raise(errc::invalid_argument, "sample shape does not match the group");
    for (std::size_t e = 0; e < events; ++e) {
      if (sample.values[e].size() != instances)
        raise(errc::invalid_argument, "sample shape does not match the group");
      if (reduction == Reduction::sum_instances) {
        double total = 0.0;
        for (std::uint64_t v : sample.values[e]) total += static_cast<double>(v);
        out[e][w] = total;
      } else {
        for (std::size_t i = 0; i < instances; ++i)
          out[e * instances + i][w] = static_cast<double>(sample.values[e][i]);
      }
    }
  }
  return out;
}

Series flatten(const Segment& segment, const EventGroup& group, Reduction reduction) {
  return flatten(segment.samples, group, reduction);
}

std::size_t series_length(const Series& series) {
  return series.empty() ? 0 : series.front().size();
}

XcorrResult xcorr(const Series& a, const Series& b, XcorrOptions options) {
  check_series(a, "series a");
  check_series(b, "series b");
  if (a.size() != b.size())
    raise(errc::invalid_argument, "xcorr inputs need the same channel count");

  std::vector<std::size_t> usable;
  for (std::size_t ch = 0; ch < a.size(); ++ch) {
    if (!is_constant(a[ch]) && !is_constant(b[ch])) usable.push_back(ch);
  }
  if (usable.empty()) raise(errc::degenerate_input, "every channel is constant");

  auto la = static_cast<std::ptrdiff_t>(series_length(a));
  auto lb = static_cast<std::ptrdiff_t>(series_length(b));
  double min_len = static_cast<double>(std::min(la, lb));

  bool found = false;
  XcorrResult best;
  best.coefficient = -std::numeric_limits<double>::infinity();
  for (std::ptrdiff_t lag = -(la - 1); lag <= lb - 1; ++lag) {
    std::ptrdiff_t i0 = std::max<std::ptrdiff_t>(0, -lag);
    std::ptrdiff_t i1 = std::min(la, lb - lag);
    std::ptrdiff_t overlap = i1 - i0;
    if (overlap < 2 || static_cast<double>(overlap) < options.min_overlap_frac * min_len)
      continue;
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t ch : usable) {
      double r = pearson(a[ch], static_cast<std::size_t>(i0), b[ch],
                         static_cast<std::size_t>(i0 + lag), static_cast<std::size_t>(overlap));
      if (std::isnan(r)) continue;
      sum += r;
      ++counted;
    }
    if (counted == 0) continue;
    double coeff = sum / static_cast<double>(counted);
    if (!found || coeff > best.coefficient) {
      found = true;
      best.coefficient = coeff;
      best.best_lag = lag;
      best.overlap_len = static_cast<std::size_t>(overlap);
    }
  }
  if (!found) raise(errc::degenerate_input, "no lag offers a usable overlap");
  return best;
}

DtwResult dtw_similarity(const Series& a, const Series& b, DtwOptions options) {
  check_series(a, "series a");
  check_series(b, "series b");
  if (a.size() != b.size())
    raise(errc::invalid_argument, "dtw inputs need the same channel count");

  std::size_t la = series_length(a);
  std::size_t lb = series_length(b);

  Series na, nb;
  if (options.znormalize) {
    for (std::size_t ch = 0; ch < a.size(); ++ch) {
      if (is_constant(a[ch]) || is_constant(b[ch])) continue;
      na.push_back(zscore(a[ch]));
      nb.push_back(zscore(b[ch]));
    }
    if (na.empty()) {
      // No channel carries shape; only the lengths can disagree.
      DtwResult out;
      if (la == lb) return out;
      out.distance = static_cast<double>(la > lb ? la - lb : lb - la);
      out.path_len = std::max(la, lb);
      out.similarity = 1.0 / (1.0 + out.distance / static_cast<double>(out.path_len));
      return out;
    }
  } else {
    na = a;
    nb = b;
  }

  // DP over (cost, cells), lexicographic: minimal cost first, then fewest
  // cells so path_len is well defined when costs tie.
  struct Cell {
    double cost;
    std::size_t cells;
  };
  std::vector<Cell> prev(lb), curr(lb);
  for (std::size_t i = 0; i < la; ++i) {
    for (std::size_t j = 0; j < lb; ++j) {
      double c = local_cost(na, nb, i, j);
      if (i == 0 && j == 0) {
        curr[j] = {c, 1};
        continue;
      }
      Cell pick{std::numeric_limits<double>::infinity(), 0};
      auto consider = [&](const Cell& from) {
        if (from.cost < pick.cost || (from.cost == pick.cost && from.cells < pick.cells))
          pick = from;
      };
      if (i > 0 && j > 0) consider(prev[j - 1]);
      if (i > 0) consider(prev[j]);
      if (j > 0) consider(curr[j - 1]);
      curr[j] = {pick.cost + c, pick.cells + 1};
    }
    std::swap(prev, curr);
  }
  const Cell& end = prev[lb - 1];
  DtwResult out;
  out.distance = end.cost;
  out.path_len = end.cells;
  out.similarity = 1.0 / (1.0 + out.distance / static_cast<double>(out.path_len));
  return out;
}

MatchResult match_series(const Series& observed, const Series& reference, double tau,
                         XcorrOptions options) {
  MatchResult out;
  try {
    XcorrResult r = xcorr(observed, reference, options);
    out.coefficient = r.coefficient;
    out.best_lag = r.best_lag;
    out.matched = r.coefficient > tau;
  } catch (const Error& e) {
    if (e.code() != errc::degenerate_input) throw;
    out.matched = false;
    out.coefficient = -1.0;
    out.diagnostic = e.what();
  }
  return out;
}

}  // namespace gpuval
