#pragma once

// Deterministic RNG used everywhere randomness is needed. A single root seed
// fans out into named substreams so results are reproducible bit-for-bit
// across platforms (std::normal_distribution is implementation-defined, so
// draws go through our own inverse-CDF path instead).

#include <cstdint>
#include <string_view>

#include "mixedfpca/normal.hpp"

namespace mfpca {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// xoshiro256++ (Blackman & Vigna, public domain reference implementation).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = detail::splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1), safe for quantile transforms.
  double uniform_open() {
    const double u = uniform();
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return std_normal_quantile(uniform_open()); }

  // Fisher-Yates shuffle of indices 0..n-1.
  template <typename T>
  void shuffle(T* data, std::size_t n) {
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_u64() % i);
      std::swap(data[i - 1], data[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

// Derives the seed of a named substream, e.g. substream_seed(root, "sim", rep).
inline std::uint64_t substream_seed(std::uint64_t root, std::string_view name,
                                    std::uint64_t index = 0) {
  std::uint64_t st = root ^ (0x6a09e667f3bcc909ULL + detail::fnv1a(name));
  detail::splitmix64(st);
  st ^= 0x3c6ef372fe94f82bULL * (index + 1);
  std::uint64_t st2 = st;
  return detail::splitmix64(st2);
}

inline Rng substream(std::uint64_t root, std::string_view name,
                     std::uint64_t index = 0) {
  return Rng(substream_seed(root, name, index));
}

}  // namespace mfpca
