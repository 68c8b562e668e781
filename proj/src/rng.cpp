#include "gpal/rng.hpp"

#include <stdexcept>

namespace gpal::rng {

std::uint64_t uniform_below(Engine& engine, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t draw = engine();
  while (draw >= limit) draw = engine();
  return draw % n;
}

std::vector<long> sample_without_replacement(long population, long count, Engine& engine) {
  if (population < 0 || count < 0 || count > population) {
    throw std::invalid_argument("sample_without_replacement: need 0 <= count <= population");
  }
  std::vector<long> pool(static_cast<std::size_t>(population));
  for (long i = 0; i < population; ++i) pool[static_cast<std::size_t>(i)] = i;
  std::vector<long> picked(static_cast<std::size_t>(count));
  // Partial Fisher-Yates: position i receives a uniform pick from [i, population).
  for (long i = 0; i < count; ++i) {
    const long j = i + static_cast<long>(uniform_below(engine, static_cast<std::uint64_t>(population - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    picked[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(i)];
  }
  return picked;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // SplitMix64 over the combined word; decorrelates per-stream engines.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace gpal::rng
