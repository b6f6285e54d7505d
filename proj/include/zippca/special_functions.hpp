#pragma once

namespace zippca {

// psi(x) = d/dx log Gamma(x), x > 0.
double digamma(double x);
// psi_1(x) = d^2/dx^2 log Gamma(x), x > 0.
double trigamma(double x);
// log B(a, b) for a, b > 0.
double log_beta(double a, double b);
// log(n!) via log-gamma.
double log_factorial(double n);

}  // namespace zippca
