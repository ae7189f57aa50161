#include "rng.hpp"

#include <cmath>

#include "errors.hpp"

namespace gpuval {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + salt + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
  return std::mt19937_64(mix_seed(mix_seed(seed, hash_tag(tag)), index));
}

std::uint64_t draw_count(std::mt19937_64& rng, double mean, double dispersion) {
  if (!(mean >= 0.0) || !(dispersion >= 0.0))
    raise(errc::invalid_argument, "count law needs mean >= 0 and dispersion >= 0");
  if (mean == 0.0) return 0;
  if (dispersion == 0.0) return static_cast<std::uint64_t>(std::llround(mean));
  std::gamma_distribution<double> gamma(1.0 / dispersion, dispersion * mean);
  double lambda = gamma(rng);
  if (!(lambda > 0.0)) return 0;
  std::poisson_distribution<std::uint64_t> poisson(lambda);
  return poisson(rng);
}

}  // namespace gpuval
