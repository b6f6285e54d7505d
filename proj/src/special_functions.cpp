#include "zippca/special_functions.hpp"

#include <cmath>

#include "zippca/errors.hpp"

namespace zippca {

namespace {

constexpr double kShift = 10.0;

}  // namespace

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("digamma: argument must be positive and finite");
  double acc = 0.0;
  while (x < kShift) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  // Asymptotic series in 1/x^2 with Bernoulli-number coefficients.
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                      inv2 * (1.0 / 252 -
                              inv2 * (1.0 / 240 -
                                      inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12.0))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("trigamma: argument must be positive and finite");
  double acc = 0.0;
  while (x < kShift) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv * (1.0 + inv * (0.5 +
                          inv * (1.0 / 6 -
                                 inv2 * (1.0 / 30 -
                                         inv2 * (1.0 / 42 -
                                                 inv2 * (1.0 / 30 -
                                                         inv2 * (5.0 / 66 - inv2 * (691.0 / 2730 - inv2 * 7.0 / 6))))))));
  return acc + series;
}

double log_beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("log_beta: arguments must be positive");
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double log_factorial(double n) {
  if (n < 0.0) throw DomainError("log_factorial: negative argument");
  return std::lgamma(n + 1.0);
}

}  // namespace zippca
