#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sclb/tensor.hpp"

namespace sclb {

/// Deterministic random engine. Wraps std::mt19937_64 (whose output sequence
/// is fixed by the standard) and maps raw words to reals itself, because the
/// standard distributions are implementation-defined and would break
/// bit-reproducibility across toolchains.
class RandomEngine {
 public:
  explicit RandomEngine(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Uniform integer in [0, n). Modulo mapping; bias is irrelevant here and
  /// the result is fully deterministic.
  std::uint64_t uniform_index(std::uint64_t n) { return engine_() % n; }

  bool bernoulli(double p) { return next_unit() < p; }

  /// Box-Muller standard normal.
  double normal() {
    double u1 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  template <typename Int>
  void shuffle(std::vector<Int>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::string save_state() const {
    std::ostringstream ss;
    ss << engine_;
    return ss.str();
  }

  void load_state(const std::string& s) {
    std::istringstream ss(s);
    ss >> engine_;
    if (!ss) throw FormatError("rng: malformed engine state");
  }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Fills a parameter tensor uniformly in [-a, a] with a = sqrt(6 / fan_in),
/// where fan_in is the number of inputs feeding one output unit.
template <typename T>
void init_uniform_fanin(Tensor<T>& t, std::size_t fan_in, RandomEngine& rng) {
  if (fan_in == 0) throw ConfigError("init: fan_in must be positive");
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<T>(rng.uniform(-a, a));
}

inline std::vector<std::uint32_t> random_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::uint32_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<std::uint32_t>(i);
  RandomEngine rng(mix_seed(seed, 0x70657264ULL));
  rng.shuffle(p);
  return p;
}

inline std::vector<std::uint32_t> identity_permutation(std::size_t n) {
  std::vector<std::uint32_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<std::uint32_t>(i);
  return p;
}

inline std::vector<std::uint32_t> invert_permutation(const std::vector<std::uint32_t>& p) {
  std::vector<std::uint32_t> inv(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) inv[p[i]] = static_cast<std::uint32_t>(i);
  return inv;
}

}  // namespace sclb
