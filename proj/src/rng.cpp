#include "zippca/rng.hpp"

#include <algorithm>
#include <cmath>

#include "zippca/errors.hpp"

namespace zippca {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * scale;
  has_spare_ = true;
  return u * scale;
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw ValidationError("gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost to shape + 1 and rescale by U^(1/shape).
    const double g = gamma(shape + 1.0);
    double u;
    do u = uniform(); while (u == 0.0);
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

Eigen::VectorXd Rng::multinomial(long trials, const Eigen::VectorXd& probs) {
  const Eigen::Index p = probs.size();
  std::vector<double> cdf(static_cast<size_t>(p));
  double acc = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (probs(j) < 0.0) throw ValidationError("multinomial: negative probability");
    acc += probs(j);
    cdf[static_cast<size_t>(j)] = acc;
  }
  if (!(acc > 0.0)) throw ValidationError("multinomial: probabilities sum to zero");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p);
  for (long t = 0; t < trials; ++t) {
    const double u = uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto j = static_cast<Eigen::Index>(it - cdf.begin());
    if (j >= p) j = p - 1;
    // Never land on a zero-probability cell.
    while (probs(j) == 0.0) j = j > 0 ? j - 1 : j + 1;
    out(j) += 1.0;
  }
  return out;
}

}  // namespace zippca
