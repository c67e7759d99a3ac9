#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "uavsched/rng.hpp"

namespace uavsched {

enum class DecodeKind { Greedy, Sample };

/// "greedy" or "sample:K" (K rollouts, best kept by the caller).
struct DecodeMode {
  DecodeKind kind = DecodeKind::Greedy;
  int samples = 1;
  std::uint64_t seed = 0;

  static DecodeMode greedy() { return {}; }
  static DecodeMode sample(int k, std::uint64_t seed) { return {DecodeKind::Sample, k, seed}; }
  static DecodeMode parse(std::string_view text, std::uint64_t seed = 0);  // ArgumentError
  std::string to_string() const;
};

// Index of the largest probability, lowest index on ties.
int argmax(std::span<const double> probs);
// Inverse-CDF draw; entries with probability 0 are never returned.
int sample_index(std::span<const double> probs, Rng& rng);

inline int choose(std::span<const double> probs, DecodeKind kind, Rng* rng) {
  return kind == DecodeKind::Greedy ? argmax(probs) : sample_index(probs, *rng);
}

}  // namespace uavsched
