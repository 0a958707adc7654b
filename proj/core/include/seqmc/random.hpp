#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace seqmc {

/// SplitMix64 finalizer; also the counter-based generator behind tabular tables.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream seed for chain `stream` under `master_seed`.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream) noexcept;

/// Private random stream of one chain. Draws are built from raw mt19937_64
/// output so results do not depend on the standard library's distributions.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  /// Uniform integer in [0, n); n must be positive.
  std::size_t uniform_index(std::size_t n) noexcept;
  /// Inverse-CDF draw from non-negative weights summing to one.
  std::size_t categorical(std::span<const double> probs) noexcept;

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

  friend bool operator==(const RandomStream&, const RandomStream&) = default;

 private:
  std::mt19937_64 engine_;
};

}  // namespace seqmc
