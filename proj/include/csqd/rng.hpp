#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "csqd/errors.hpp"

namespace csqd {

// splitmix64 finalizer; used to derive independent substream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t v : path) h = mix64(h ^ mix64(v));
  return h;
}

/// Deterministic random stream. All distributions are implemented here so
/// results do not depend on the standard library's distribution internals.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  static RngStream derived(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return RngStream(derive_seed(seed, path));
  }

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t uniform_below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % bound;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Index drawn with probability weights[i] / sum(weights); all weights >= 0.
  std::size_t weighted_index(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw NumericError("weighted draw over all-zero weights");
    double u = uniform() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.size() - 1;
  }

  /// k draws without replacement, sequential with renormalization.
  /// Zero-weight items are never drawn while positive weight remains;
  /// if all remaining weights are zero, falls back to uniform over the rest.
  std::vector<std::size_t> weighted_sample_without_replacement(std::vector<double> weights,
                                                               std::size_t k) {
    std::vector<std::size_t> picked;
    picked.reserve(k);
    std::vector<char> taken(weights.size(), 0);
    for (std::size_t draw = 0; draw < k && draw < weights.size(); ++draw) {
      double total = 0.0;
      for (std::size_t i = 0; i < weights.size(); ++i)
        if (!taken[i]) total += weights[i];
      std::size_t choice = weights.size();
      if (total > 0.0) {
        double u = uniform() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
          if (taken[i]) continue;
          u -= weights[i];
          if (u < 0.0) {
            choice = i;
            break;
          }
        }
        if (choice == weights.size()) {  // rounding spill: take last untaken positive
          for (std::size_t i = weights.size(); i-- > 0;)
            if (!taken[i] && weights[i] > 0.0) {
              choice = i;
              break;
            }
        }
      }
      if (choice == weights.size()) {  // uniform fallback over untaken items
        std::uint64_t remaining = 0;
        for (std::size_t i = 0; i < weights.size(); ++i)
          if (!taken[i]) ++remaining;
        std::uint64_t idx = uniform_below(remaining);
        for (std::size_t i = 0; i < weights.size(); ++i) {
          if (taken[i]) continue;
          if (idx == 0) {
            choice = i;
            break;
          }
          --idx;
        }
      }
      taken[choice] = 1;
      picked.push_back(choice);
    }
    return picked;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace csqd
