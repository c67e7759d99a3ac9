#include "uavsched/decoding.hpp"

#include <charconv>

#include "uavsched/error.hpp"

namespace uavsched {

DecodeMode DecodeMode::parse(std::string_view text, std::uint64_t seed) {
  if (text == "greedy") return greedy();
  constexpr std::string_view prefix = "sample:";
  if (text.substr(0, prefix.size()) == prefix) {
    const auto digits = text.substr(prefix.size());
    int k = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && k >= 1) {
      return sample(k, seed);
    }
  }
  throw ArgumentError("decode mode must be 'greedy' or 'sample:K' with K >= 1, got '" +
                      std::string(text) + "'");
}

std::string DecodeMode::to_string() const {
  return kind == DecodeKind::Greedy ? "greedy" : "sample:" + std::to_string(samples);
}

int argmax(std::span<const double> probs) {
  if (probs.empty()) throw ArgumentError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return static_cast<int>(best);
}

int sample_index(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cum += probs[i];
    last = static_cast<int>(i);
    if (u < cum) return last;
  }
  if (last < 0) throw ArgumentError("cannot sample from an all-zero distribution");
  return last;  // rounding left cum slightly below 1
}

}  // namespace uavsched
