#pragma once

#include <functional>
#include <optional>

#include <Eigen/Dense>

namespace zippca {

/// A maximization subproblem over one block of variables.
struct BlockProblem {
  Eigen::Index dim = 0;
  std::function<double(const Eigen::VectorXd&)> objective;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::optional<Eigen::VectorXd> lower;
  std::optional<Eigen::VectorXd> upper;
  // Optional fused evaluation: returns the objective and writes the gradient.
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> value_and_gradient;

  bool bounded() const { return lower.has_value() || upper.has_value(); }
  // Clamp onto the box (identity for unbounded problems).
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;
  bool feasible(const Eigen::VectorXd& x) const;
  bool strictly_feasible(const Eigen::VectorXd& x) const;
};

struct OptimizerReport {
  Eigen::VectorXd solution;
  double objective_value = 0.0;
  int iterations = 0;
  bool converged = false;
  double final_grad_norm = 0.0;  // projected, infinity norm
};

struct LineSearchSettings {
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_halvings = 40;
};

/// Maximize problem.objective starting at x0.
///
/// Unbounded problems run BFGS with a dense inverse-Hessian estimate.
/// Bounded problems run a limited-memory projected quasi-Newton method:
/// variables held at a bound by the gradient are fixed, the quasi-Newton
/// step is taken in the subspace of free variables, and the step is
/// projected back onto the box. Both use Armijo backtracking, so accepted
/// steps never lower the objective. The line search gives up once the
/// predicted change is below the rounding level of the objective; the
/// report then has converged = false. Throws ValidationError if the objective
/// or gradient is non-finite at x0.
OptimizerReport bounded_quasi_newton(const BlockProblem& problem, const Eigen::VectorXd& x0,
                                     double tol = 1e-6, int max_iter = 200,
                                     const LineSearchSettings& ls = {});

/// Largest per-coordinate discrepancy between the analytic gradient and a
/// central difference, relative to max(1, |analytic|).
double grad_check(const BlockProblem& problem, const Eigen::VectorXd& point, double step = 1e-5);

}  // namespace zippca
