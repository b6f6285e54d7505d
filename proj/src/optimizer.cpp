#include "zippca/optimizer.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "zippca/errors.hpp"

namespace zippca {

using Eigen::Index;
using Eigen::VectorXd;

VectorXd BlockProblem::project(const VectorXd& x) const {
  VectorXd out = x;
  if (lower) out = out.cwiseMax(*lower);
  if (upper) out = out.cwiseMin(*upper);
  return out;
}

bool BlockProblem::feasible(const VectorXd& x) const {
  if (x.size() != dim) return false;
  if (lower && (x.array() < lower->array()).any()) return false;
  if (upper && (x.array() > upper->array()).any()) return false;
  return true;
}

bool BlockProblem::strictly_feasible(const VectorXd& x) const {
  if (x.size() != dim) return false;
  if (lower && (x.array() <= lower->array()).any()) return false;
  if (upper && (x.array() >= upper->array()).any()) return false;
  return true;
}

namespace {

// Everything below works on the minimization form f = -objective.
struct Negated {
  const BlockProblem& problem;
  double both(const VectorXd& x, VectorXd& g) const {
    double f = 0.0;
    if (problem.value_and_gradient) {
      f = -problem.value_and_gradient(x, g);
      g = -g;
    } else {
      f = -problem.objective(x);
      g = -problem.gradient(x);
    }
    return f;
  }
};

double projected_grad_norm(const BlockProblem& problem, const VectorXd& x, const VectorXd& g) {
  if (g.size() == 0) return 0.0;
  return (problem.project(x - g) - x).lpNorm<Eigen::Infinity>();
}

struct LineSearchResult {
  bool accepted = false;
  VectorXd x;
  double f = 0.0;
  VectorXd g;
};

// Backtracking along the projected path P(x + t d).
LineSearchResult projected_armijo(const BlockProblem& problem, const Negated& fn, const VectorXd& x,
                                  double fx, const VectorXd& g, const VectorXd& d, double t0,
                                  const LineSearchSettings& ls) {
  const double noise = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(fx));
  double t = t0;
  LineSearchResult res;
  for (int h = 0; h <= ls.max_halvings; ++h, t *= ls.shrink) {
    VectorXd trial = problem.project(x + t * d);
    const VectorXd step = trial - x;
    const double decrease = g.dot(step);
    if (!(decrease < 0.0)) continue;
    if (-decrease < noise) break;
    const double ft = fn.both(trial, res.g);
    if (std::isfinite(ft) && ft <= fx + ls.armijo * decrease && res.g.allFinite()) {
      res.accepted = true;
      res.x = std::move(trial);
      res.f = ft;
      return res;
    }
  }
  res.accepted = false;
  return res;
}

OptimizerReport finish(const BlockProblem& problem, const VectorXd& x, double fx, const VectorXd& g,
                       int iter, double tol) {
  OptimizerReport rep;
  rep.solution = x;
  rep.objective_value = -fx;
  rep.iterations = iter;
  rep.final_grad_norm = projected_grad_norm(problem, x, g);
  rep.converged = rep.final_grad_norm < tol;
  return rep;
}

OptimizerReport run_bfgs(const BlockProblem& problem, VectorXd x, double tol, int max_iter,
                         const LineSearchSettings& ls) {
  const Negated fn{problem};
  const Index n = problem.dim;
  VectorXd g;
  double fx = fn.both(x, g);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < tol) break;
    VectorXd d = -H * g;
    if (!(g.dot(d) < 0.0)) {
      H.setIdentity();
      scaled = false;
      d = -g;
    }
    const double t0 = scaled ? 1.0 : std::min(1.0, 1.0 / d.lpNorm<Eigen::Infinity>());
    auto res = projected_armijo(problem, fn, x, fx, g, d, t0, ls);
    if (!res.accepted) break;
    const VectorXd s = res.x - x;
    VectorXd g_new = std::move(res.g);
    const VectorXd y = g_new - g;
    x = std::move(res.x);
    fx = res.f;
    g = std::move(g_new);
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        H *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
  }
  return finish(problem, x, fx, g, iter, tol);
}

OptimizerReport run_projected_lbfgs(const BlockProblem& problem, VectorXd x, double tol, int max_iter,
                                    const LineSearchSettings& ls) {
  constexpr size_t kMemory = 10;
  const Negated fn{problem};
  const Index n = problem.dim;
  const VectorXd lo = problem.lower.value_or(VectorXd::Constant(n, -std::numeric_limits<double>::infinity()));
  const VectorXd hi = problem.upper.value_or(VectorXd::Constant(n, std::numeric_limits<double>::infinity()));
  std::deque<std::pair<VectorXd, VectorXd>> memory;
  VectorXd g;
  double fx = fn.both(x, g);
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    const double pg = projected_grad_norm(problem, x, g);
    if (pg < tol) break;

    // Variables within eps of a bound whose gradient pushes outward stay fixed.
    const double eps = std::min(1e-3, pg);
    std::vector<bool> free(static_cast<size_t>(n), true);
    for (Index a = 0; a < n; ++a) {
      const bool at_lo = x(a) - lo(a) <= eps && g(a) > 0.0;
      const bool at_hi = hi(a) - x(a) <= eps && g(a) < 0.0;
      free[static_cast<size_t>(a)] = !(at_lo || at_hi);
    }
    auto mask = [&](const VectorXd& v) {
      VectorXd out = v;
      for (Index a = 0; a < n; ++a)
        if (!free[static_cast<size_t>(a)]) out(a) = 0.0;
      return out;
    };

    // Two-loop recursion on the free subspace.
    VectorXd q = mask(g);
    std::vector<double> alpha(memory.size());
    for (size_t h = memory.size(); h-- > 0;) {
      const VectorXd s = mask(memory[h].first);
      const VectorXd y = mask(memory[h].second);
      const double sy = s.dot(y);
      alpha[h] = sy > 0.0 ? s.dot(q) / sy : 0.0;
      q -= alpha[h] * y;
    }
    double gamma = 1.0;
    if (!memory.empty()) {
      const VectorXd s = mask(memory.back().first);
      const VectorXd y = mask(memory.back().second);
      if (s.dot(y) > 0.0) gamma = s.dot(y) / y.squaredNorm();
    }
    q *= gamma;
    for (size_t h = 0; h < memory.size(); ++h) {
      const VectorXd s = mask(memory[h].first);
      const VectorXd y = mask(memory[h].second);
      const double sy = s.dot(y);
      if (sy <= 0.0) continue;
      const double beta = y.dot(q) / sy;
      q += (alpha[h] - beta) * s;
    }
    VectorXd d = -mask(q);
    // Fixed variables move along the scaled gradient; projection keeps them in the box.
    for (Index a = 0; a < n; ++a)
      if (!free[static_cast<size_t>(a)]) d(a) = -gamma * g(a);

    double t0 = 1.0;
    if (!(g.dot(d) < 0.0)) {
      memory.clear();
      d = -g;
      gamma = 1.0;
    }
    if (memory.empty()) t0 = std::min(1.0, 1.0 / d.lpNorm<Eigen::Infinity>());

    auto res = projected_armijo(problem, fn, x, fx, g, d, t0, ls);
    if (!res.accepted && !memory.empty()) {
      memory.clear();
      d = -g;
      res = projected_armijo(problem, fn, x, fx, g, d, std::min(1.0, 1.0 / d.lpNorm<Eigen::Infinity>()), ls);
    }
    if (!res.accepted) break;
    VectorXd g_new = std::move(res.g);
    VectorXd s = res.x - x;
    VectorXd y = g_new - g;
    x = std::move(res.x);
    fx = res.f;
    g = std::move(g_new);
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      memory.emplace_back(std::move(s), std::move(y));
      if (memory.size() > kMemory) memory.pop_front();
    }
  }
  return finish(problem, x, fx, g, iter, tol);
}

}  // namespace

OptimizerReport bounded_quasi_newton(const BlockProblem& problem, const VectorXd& x0, double tol,
                                     int max_iter, const LineSearchSettings& ls) {
  if (x0.size() != problem.dim) throw ValidationError("bounded_quasi_newton: x0 has the wrong length");
  if (!problem.objective || !problem.gradient) throw ValidationError("bounded_quasi_newton: incomplete problem");
  if (!problem.feasible(x0)) throw ValidationError("bounded_quasi_newton: x0 violates the bounds");
  const double f0 = problem.objective(x0);
  const VectorXd g0 = problem.gradient(x0);
  if (!std::isfinite(f0) || !g0.allFinite())
    throw ValidationError("bounded_quasi_newton: objective or gradient is not finite at x0");
  if (problem.bounded()) return run_projected_lbfgs(problem, x0, tol, max_iter, ls);
  return run_bfgs(problem, x0, tol, max_iter, ls);
}

double grad_check(const BlockProblem& problem, const VectorXd& point, double step) {
  if (!(step >= 1e-7 && step <= 1e-3)) throw ValidationError("grad_check: step must lie in [1e-7, 1e-3]");
  if (!problem.strictly_feasible(point)) throw ValidationError("grad_check: point is not strictly feasible");
  const VectorXd analytic = problem.gradient(point);
  double worst = 0.0;
  for (Index a = 0; a < problem.dim; ++a) {
    // Shrink the step near a bound so both probes stay inside the box.
    double h = step;
    if (problem.lower) h = std::min(h, 0.5 * (point(a) - (*problem.lower)(a)));
    if (problem.upper) h = std::min(h, 0.5 * ((*problem.upper)(a) - point(a)));
    VectorXd up = point, down = point;
    up(a) += h;
    down(a) -= h;
    const double numeric = (problem.objective(up) - problem.objective(down)) / (2.0 * h);
    const double err = std::abs(numeric - analytic(a)) / std::max(1.0, std::abs(analytic(a)));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace zippca
