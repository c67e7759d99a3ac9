#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace uavsched {

/// Seedable 64-bit generator used for every random draw in the project.
///
/// The engine is MT19937-64 (std::mt19937_64, whose output sequence is fixed
/// by the C++ standard). Derived draws avoid the implementation-defined
/// std distributions so that streams are reproducible anywhere:
///   uniform()       = (next() >> 11) * 2^-53          in [0, 1)
///   uniform_int(n)  = rejection sampling of next() % n in [0, n)
///   shuffle         = Fisher-Yates from the back using uniform_int
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = next();
    while (r >= limit) r = next();
    return r % n;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Child stream for a sub-task; keeps sibling streams decorrelated.
  Rng split() { return Rng(next() ^ 0x9E3779B97F4A7C15ULL); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace uavsched
