#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gpuval {

// splitmix64 step; derives independent substream seeds from one root seed so
// adding a noise source never perturbs the victim's draws.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// FNV-1a, for turning stream labels into salts.
std::uint64_t hash_tag(std::string_view tag);

std::mt19937_64 make_stream(std::uint64_t seed, std::string_view tag, std::uint64_t index);

// Over-dispersed count law: mean `mean`, variance mean + dispersion * mean^2
// (gamma-mixed Poisson). dispersion 0 is degenerate: exactly round(mean).
std::uint64_t draw_count(std::mt19937_64& rng, double mean, double dispersion);

}  // namespace gpuval
