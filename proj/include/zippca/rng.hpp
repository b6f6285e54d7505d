#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace zippca {

/// Seeded random source with platform-independent samplers.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The std:: distributions are implementation-defined, so every
/// sampler here is written out explicitly to keep draws reproducible across
/// toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0,1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal (Marsaglia polar method; pairs are cached).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  // Gamma(shape, 1) via Marsaglia-Tsang.
  double gamma(double shape);
  double beta(double a, double b);
  bool bernoulli(double p) { return uniform() < p; }
  // Multinomial(trials, probs) by inverse-CDF categorical draws.
  Eigen::VectorXd multinomial(long trials, const Eigen::VectorXd& probs);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace zippca
