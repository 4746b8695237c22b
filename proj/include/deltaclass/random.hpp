#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace deltaclass {

// Uniform integer in [0, bound) from a 64-bit engine by rejection. Unlike
// std::uniform_int_distribution the result is the same on every standard
// library, which keeps seeded artifacts bit-reproducible.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % bound);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

// Fisher-Yates with `bounded`.
template <class T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace deltaclass
