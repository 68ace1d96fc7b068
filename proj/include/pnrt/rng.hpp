#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace pnrt {

// Splittable substreams: every replicate derives its own generator from the
// master seed and its index, so draws are identical no matter how work is
// scheduled across threads.
//
// Derivation is a splitmix64-style finalizer folded over the index path.
// Streams themselves are mt19937_64 (fully specified by the standard), and
// all variate transforms below are hand-written so a given seed produces the
// same bytes on every platform.

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_key(std::uint64_t master) { return mix64(master); }

template <class... Idx>
std::uint64_t derive_key(std::uint64_t master, std::uint64_t head, Idx... tail) {
  return derive_key(mix64(master ^ (head + 0x9e3779b97f4a7c15ULL + (master << 6) + (master >> 2))), tail...);
}

class Rng {
 public:
  explicit Rng(std::uint64_t key) : gen_(key) {}

  template <class... Idx>
  static Rng stream(std::uint64_t master, Idx... path) {
    return Rng(derive_key(master, static_cast<std::uint64_t>(path)...));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log() argument.
  double u01_open() { return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53; }

  bool bernoulli(double p) { return u01() < p; }

  // Unbiased integer in [0, n) by rejection (Lemire's multiply-shift).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    while (true) {
      std::uint64_t x = gen_();
      __uint128_t m = static_cast<__uint128_t>(x) * n;
      auto lo = static_cast<std::uint64_t>(m);
      if (lo >= n) return static_cast<std::uint64_t>(m >> 64);
      std::uint64_t threshold = (0 - n) % n;
      if (lo >= threshold) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  double normal() {
    double u1 = u01_open();
    double u2 = u01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Marsaglia-Tsang for shape >= 1, boosted by U^(1/shape) below 1.
  double gamma(double shape, double scale) {
    if (shape < 1.0) {
      double u = u01_open();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = u01_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return scale * d * v;
    }
  }

  // m distinct indices from [0, n), in sampling order (partial Fisher-Yates).
  std::vector<std::size_t> choose(std::size_t n, std::size_t m) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::size_t> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m && i < n; ++i) {
      std::size_t j = i + static_cast<std::size_t>(below(n - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

 private:
  std::mt19937_64 gen_;
};

// Salts separating the independent substream families hanging off one master
// seed. Values are arbitrary but frozen: changing them changes every draw.
namespace salt {
inline constexpr std::uint64_t replicate = 0x01;
inline constexpr std::uint64_t tiebreak = 0x02;
inline constexpr std::uint64_t sequential_step = 0x03;
inline constexpr std::uint64_t pretest_second_stage = 0x04;
inline constexpr std::uint64_t sim_cell = 0x05;
inline constexpr std::uint64_t network = 0x06;
inline constexpr std::uint64_t schedule = 0x07;
inline constexpr std::uint64_t pool = 0x08;
inline constexpr std::uint64_t observed = 0x09;
inline constexpr std::uint64_t propensity = 0x0a;
inline constexpr std::uint64_t instance = 0x0b;
}  // namespace salt

}  // namespace pnrt
