#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace moodbench {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child-seed scheme: every stochastic stage draws its seed from the master
/// seed and a fixed per-stage stream id, so partial reruns and concurrent
/// schedules reproduce bit-identically.
inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 1));
}

/// Explicit seeded stream. Normal deviates come from Box-Muller on the raw
/// mt19937_64 output rather than std::normal_distribution, whose sequence is
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal(double mean = 0.0, double sd = 1.0) {
    // Box-Muller, single branch; u1 in (0, 1].
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double z = std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    return mean + sd * z;
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates with explicit draws; std::shuffle's sequence is
    // implementation-defined.
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

/// Fold id per row for seeded k-fold CV; fold sizes are near-equal with the
/// first n % k folds one larger.
inline std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<int> fold(n, 0);
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    std::size_t size = n / k + (static_cast<std::size_t>(f) < n % k ? 1 : 0);
    for (std::size_t j = 0; j < size; ++j) fold[order[pos + j]] = f;
    pos += size;
  }
  return fold;
}

}  // namespace moodbench
