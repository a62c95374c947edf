#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace delegrid {

/// Seeded random stream. All randomness in the library flows through this
/// class so that runs are reproducible from a single 64-bit seed and
/// independent streams can be derived per task (see derive_seed).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform double in the open interval (0, 1). Never returns an endpoint,
  /// so ln((1-x)/x) is always finite.
  double open01() {
    double u = uniform01();
    while (u == 0.0) u = uniform01();
    return u;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Unbiased index in [0, n). Lemire's multiply-shift with rejection.
  std::size_t uniform_index(std::size_t n) {
    const auto bound = static_cast<std::uint64_t>(n);
    std::uint64_t x = engine_();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = engine_();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  /// Fisher-Yates shuffle driven by this stream (pinned algorithm, unlike
  /// std::shuffle whose draw sequence is implementation defined).
  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

inline std::uint64_t mix(std::uint64_t h, std::string_view s) {
  // FNV-1a over the bytes, then fold into the running hash.
  std::uint64_t f = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    f ^= c;
    f *= 0x100000001b3ULL;
  }
  return mix(h, f);
}

inline std::uint64_t mix(std::uint64_t h, const char* s) { return mix(h, std::string_view(s)); }

inline std::uint64_t mix(std::uint64_t h, int v) { return mix(h, static_cast<std::uint64_t>(v)); }

}  // namespace detail

/// Stable 64-bit hash of (master seed, labels...) used to give every
/// (grid, level, scenario, condition, replication) cell its own stream.
template <class... Parts>
std::uint64_t derive_seed(std::uint64_t master, const Parts&... parts) {
  std::uint64_t h = detail::splitmix64(master);
  ((h = detail::mix(h, parts)), ...);
  return h;
}

}  // namespace delegrid
