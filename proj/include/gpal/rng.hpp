#pragma once

#include <cstdint>
#include <random>
#include <vector>

// Seeded randomness helpers. std::mt19937_64 output is standardized, but the
// standard distributions and std::shuffle are implementation-defined, so all
// draws below are hand-rolled to keep seeded runs reproducible across
// standard libraries.
namespace gpal::rng {

using Engine = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Unbiased uniform integer in [0, n). Rejection sampling on the top range.
std::uint64_t uniform_below(Engine& engine, std::uint64_t n);

// Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& values, Engine& engine) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(engine, i));
    std::swap(values[i - 1], values[j]);
  }
}

// `count` distinct indices drawn uniformly from {0, ..., population-1},
// in draw order.
std::vector<long> sample_without_replacement(long population, long count, Engine& engine);

// Stream-splitting helper: a deterministic child seed for (seed, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace gpal::rng
