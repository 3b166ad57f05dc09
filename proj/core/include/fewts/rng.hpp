#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fewts {

// Deterministic random source. The standard distributions are
// implementation-defined, so every draw here is spelled out explicitly;
// two builds with the same seed produce the same stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform integer in [0, n) via rejection sampling. n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double real01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * real01(); }

  /// Standard normal via Box-Muller. Two draws per call, no cached spare.
  double normal();

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 eng_;
};

/// Mixes a tag into a base seed so sub-streams (init, episodes, dropout,
/// per-task support draws) are independent and reproducible.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

/// FNV-1a over arbitrary bytes; used for config hashes and file checksums.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(std::string_view s);

}  // namespace fewts
