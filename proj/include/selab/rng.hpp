#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace selab {

// Minimal deterministic PRNG used everywhere seeds appear. The standard
// library engines are portable but the distributions are not, so all
// variate generation is done by hand on top of splitmix64. Identical
// (seed, call sequence) pairs produce bit-identical streams on any
// platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::uint64_t state_;
};

// Documented seed-splitting rule: workers and pipeline stages never share a
// stream; stream k of base seed s is derive_seed(s, k).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  SplitMix64 g(base ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
  return g.next();
}

// Inverse standard normal CDF, Wichura's AS241 (PPND16), |error| ~ 1e-16.
double inverse_normal_cdf(double p);

// Inverse standard logistic CDF.
inline double inverse_logistic_cdf(double p) {
  if (p <= 0.0 || p >= 1.0) throw std::domain_error("inverse_logistic_cdf: p outside (0,1)");
  return std::log(p / (1.0 - p));
}

inline double sample_standard_normal(SplitMix64& rng) {
  double u;
  do { u = rng.uniform01(); } while (u <= 0.0);
  return inverse_normal_cdf(u);
}

inline double sample_standard_logistic(SplitMix64& rng) {
  double u;
  do { u = rng.uniform01(); } while (u <= 0.0);
  return inverse_logistic_cdf(u);
}

}  // namespace selab
