#include "zippca/blocks.hpp"

#include "block_problems.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "zippca/rng.hpp"
#include "zippca/special_functions.hpp"

namespace zippca {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

void check_index(Index idx, Index size, const char* what) {
  if (idx < 0 || idx >= size) {
    std::ostringstream os;
    os << what << " index " << idx << " out of range [0," << size << ")";
    throw ValidationError(os.str());
  }
}

void check_inputs(const CountMatrix& counts, const VariationalParams& delta, const Hyperparams& hyper) {
  delta.validate(counts);
  if (hyper.sigma_beta.size() != delta.rank()) throw ValidationError("sigma_beta must have length k");
}

// Per-coordinate pieces of the log-MGF term L and its partial derivatives.
struct MgfCoord {
  double value;   // contribution to L
  double d_r;     // dL/dr
  double d_m;     // dL/dm
  double d_a;     // dL/dlambda2
  double d_s;     // dL/dsigma2
};

double mgf_value(double m, double s, double r, double a) {
  const double sa = s * a;
  if (!(sa < 1.0)) throw SingularityError("sigma2 * lambda2 >= 1");
  const double d = 1.0 - sa;
  return -0.5 * std::log(d) + (s * r * r + a * m * m + 2.0 * m * r) / (2.0 * d);
}

MgfCoord mgf_coord(double m, double s, double r, double a) {
  const double sa = s * a;
  if (!(sa < 1.0)) throw SingularityError("sigma2 * lambda2 >= 1");
  const double d = 1.0 - sa;
  const double num = s * r * r + a * m * m + 2.0 * m * r;
  MgfCoord c;
  c.value = -0.5 * std::log(d) + num / (2.0 * d);
  c.d_r = (s * r + m) / d;
  c.d_m = (a * m + r) / d;
  c.d_a = 0.5 * (s / d + m * m / (d * d) + s * (2.0 * m * r + s * r * r) / (d * d));
  c.d_s = 0.5 * (a / d + (r * r + a * a * m * m + 2.0 * a * m * r) / (d * d));
  return c;
}

// Snapshot for a column block: everything about taxon j's normalizer share
// except the variables being optimized.
struct ColumnSnapshot {
  Index j = 0;
  VectorXd x;         // column j of the counts
  VectorXd depth;     // M_i
  VectorXd log_keep;  // log(1 - pi_ij)
  VectorXd log_rest;  // log sum over the other taxa
  MatrixXd m;
  MatrixXd sigma2;
  double beta0 = 0.0;
  VectorXd prior_var;
};

ColumnSnapshot column_snapshot(Index j, const CountMatrix& counts, const VariationalParams& delta,
                               const VectorXd& beta0, const Hyperparams& hyper, VectorXd log_rest) {
  const Index n = counts.samples();
  if (beta0.size() != counts.taxa()) throw ValidationError("beta0 must have length p");
  if (log_rest.size() != n) throw ValidationError("log_rest must have length n");
  ColumnSnapshot snap;
  snap.j = j;
  snap.x = counts.counts().col(j);
  snap.depth = counts.depths();
  snap.m = delta.m;
  snap.sigma2 = delta.sigma2;
  snap.beta0 = beta0(j);
  snap.prior_var = hyper.sigma_beta;
  snap.log_keep.resize(n);
  snap.log_rest = std::move(log_rest);
  for (Index i = 0; i < n; ++i) {
    snap.log_keep(i) = safe_log(1.0 - delta.pi(i, j));
    if (snap.depth(i) > 0.0 && snap.log_rest(i) == kNegInf && snap.log_keep(i) == kNegInf) {
      std::ostringstream os;
      os << "sample " << i << " has no active taxon";
      throw DegenerateSupportError(os.str());
    }
  }
  return snap;
}

// -sum_i M_i log S_i as a function of (r_j, lambda2_j), with gradients.
struct ColumnNormalizer {
  double value = 0.0;
  VectorXd grad_r;
  VectorXd grad_a;
};

ColumnNormalizer column_normalizer(const ColumnSnapshot& snap, const VectorXd& r, const VectorXd& a,
                                   bool want_grad) {
  const Index n = snap.x.size();
  const Index k = r.size();
  ColumnNormalizer out;
  if (want_grad) {
    out.grad_r = VectorXd::Zero(k);
    out.grad_a = VectorXd::Zero(k);
  }
  std::vector<MgfCoord> coords(static_cast<size_t>(k));
  for (Index i = 0; i < n; ++i) {
    const double depth = snap.depth(i);
    if (!(depth > 0.0)) continue;
    double Lij = 0.0;
    for (Index l = 0; l < k; ++l) {
      if (want_grad) {
        coords[static_cast<size_t>(l)] = mgf_coord(snap.m(i, l), snap.sigma2(i, l), r(l), a(l));
        Lij += coords[static_cast<size_t>(l)].value;
      } else {
        Lij += mgf_value(snap.m(i, l), snap.sigma2(i, l), r(l), a(l));
      }
    }
    const double own = snap.log_keep(i) + snap.beta0 + Lij;
    const double logS = log_add_exp(snap.log_rest(i), own);
    out.value -= depth * logS;
    if (!want_grad || snap.log_keep(i) == kNegInf) continue;
    const double w = std::exp(own - logS);
    for (Index l = 0; l < k; ++l) {
      out.grad_r(l) -= depth * w * coords[static_cast<size_t>(l)].d_r;
      out.grad_a(l) -= depth * w * coords[static_cast<size_t>(l)].d_a;
    }
  }
  return out;
}

// Snapshot for a row block over sample i.
struct RowSnapshot {
  VectorXd x;
  double depth = 0.0;
  VectorXd log_keep;
  MatrixXd r;
  MatrixXd lambda2;
  VectorXd beta0;
};

RowSnapshot row_snapshot(Index i, const CountMatrix& counts, const VariationalParams& delta,
                         const VectorXd& beta0) {
  const Index p = counts.taxa();
  if (beta0.size() != p) throw ValidationError("beta0 must have length p");
  RowSnapshot snap;
  snap.x = counts.counts().row(i).transpose();
  snap.depth = counts.depths()(i);
  snap.r = delta.r;
  snap.lambda2 = delta.lambda2;
  snap.beta0 = beta0;
  snap.log_keep.resize(p);
  bool any = false;
  for (Index j = 0; j < p; ++j) {
    snap.log_keep(j) = safe_log(1.0 - delta.pi(i, j));
    any = any || snap.log_keep(j) != kNegInf;
  }
  if (snap.depth > 0.0 && !any) {
    std::ostringstream os;
    os << "sample " << i << " has no active taxon";
    throw DegenerateSupportError(os.str());
  }
  return snap;
}

struct RowNormalizer {
  double value = 0.0;
  VectorXd grad_m;
  VectorXd grad_s;
};

RowNormalizer row_normalizer(const RowSnapshot& snap, const VectorXd& m, const VectorXd& s, bool want_grad) {
  const Index p = snap.x.size();
  const Index k = m.size();
  RowNormalizer out;
  if (want_grad) {
    out.grad_m = VectorXd::Zero(k);
    out.grad_s = VectorXd::Zero(k);
  }
  if (!(snap.depth > 0.0)) return out;
  VectorXd logits = VectorXd::Constant(p, kNegInf);
  MatrixXd dm(p, k), ds(p, k);
  double mx = kNegInf;
  for (Index j = 0; j < p; ++j) {
    if (snap.log_keep(j) == kNegInf) continue;
    double Lij = 0.0;
    for (Index l = 0; l < k; ++l) {
      if (!want_grad) {
        Lij += mgf_value(m(l), s(l), snap.r(j, l), snap.lambda2(j, l));
        continue;
      }
      const MgfCoord c = mgf_coord(m(l), s(l), snap.r(j, l), snap.lambda2(j, l));
      Lij += c.value;
      dm(j, l) = c.d_m;
      ds(j, l) = c.d_s;
    }
    logits(j) = snap.log_keep(j) + snap.beta0(j) + Lij;
    mx = std::max(mx, logits(j));
  }
  double acc = 0.0;
  for (Index j = 0; j < p; ++j)
    if (logits(j) != kNegInf) acc += std::exp(logits(j) - mx);
  const double logS = mx + std::log(acc);
  out.value = -snap.depth * logS;
  if (!want_grad) return out;
  for (Index j = 0; j < p; ++j) {
    if (logits(j) == kNegInf) continue;
    const double w = std::exp(logits(j) - logS);
    for (Index l = 0; l < k; ++l) {
      out.grad_m(l) -= snap.depth * w * dm(j, l);
      out.grad_s(l) -= snap.depth * w * ds(j, l);
    }
  }
  return out;
}

// Zero-inflation weights summed down column j.
struct GammaSnapshot {
  double pi_sum = 0.0;    // sum_i pi_ij
  double keep_sum = 0.0;  // sum_i (1 - pi_ij)
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double partner = 1.0;   // the gamma held fixed
};

GammaSnapshot gamma_snapshot(Index j, const VariationalParams& delta, const Hyperparams& hyper,
                             double partner) {
  GammaSnapshot g;
  for (Index i = 0; i < delta.pi.rows(); ++i) {
    g.pi_sum += delta.pi(i, j);
    g.keep_sum += 1.0 - delta.pi(i, j);
  }
  g.alpha1 = hyper.alpha1;
  g.alpha2 = hyper.alpha2;
  g.partner = partner;
  return g;
}

VectorXd lower_vec(Index k, double v) { return VectorXd::Constant(k, v); }

}  // namespace

namespace detail {

VectorXd column_log_rest(Index j, const VariationalParams& delta, const VectorXd& beta0, const MatrixXd& L) {
  const Index n = L.rows();
  const Index p = L.cols();
  if (L.rows() != delta.samples() || L.cols() != delta.taxa()) throw ValidationError("log-MGF grid must be n x p");
  VectorXd out(n);
  for (Index i = 0; i < n; ++i) {
    double mx = kNegInf;
    for (Index t = 0; t < p; ++t)
      if (t != j && delta.pi(i, t) < 1.0) mx = std::max(mx, beta0(t) + L(i, t));
    double acc = 0.0;
    if (mx != kNegInf)
      for (Index t = 0; t < p; ++t)
        if (t != j && delta.pi(i, t) < 1.0) acc += (1.0 - delta.pi(i, t)) * std::exp(beta0(t) + L(i, t) - mx);
    out(i) = mx == kNegInf ? kNegInf : mx + std::log(acc);
  }
  return out;
}

BlockProblem gamma1_problem(Index j, const VariationalParams& delta, const Hyperparams& hyper) {
  const GammaSnapshot g = gamma_snapshot(j, delta, hyper, delta.gamma2(j));
  BlockProblem prob;
  prob.dim = 1;
  prob.lower = lower_vec(1, kGammaLower);
  prob.objective = [g](const VectorXd& v) {
    const double g1 = v(0), g2 = g.partner;
    const double d1 = digamma(g1), d12 = digamma(g1 + g2);
    return g.pi_sum * (d1 - d12) - g.keep_sum * d12 + (g.alpha1 - g1) * (d1 - d12) -
           (g.alpha2 - g2) * d12 + log_beta(g1, g2);
  };
  prob.gradient = [g](const VectorXd& v) {
    const double g1 = v(0), g2 = g.partner;
    const double t1 = trigamma(g1), t12 = trigamma(g1 + g2);
    VectorXd out(1);
    out(0) = g.pi_sum * (t1 - t12) - g.keep_sum * t12 + (g.alpha1 - g1) * (t1 - t12) -
             (g.alpha2 - g2) * t12;
    return out;
  };
  return prob;
}

BlockProblem gamma2_problem(Index j, const VariationalParams& delta, const Hyperparams& hyper) {
  const GammaSnapshot g = gamma_snapshot(j, delta, hyper, delta.gamma1(j));
  BlockProblem prob;
  prob.dim = 1;
  prob.lower = lower_vec(1, kGammaLower);
  prob.objective = [g](const VectorXd& v) {
    const double g1 = g.partner, g2 = v(0);
    const double d2 = digamma(g2), d12 = digamma(g1 + g2);
    return -g.pi_sum * d12 + g.keep_sum * (d2 - d12) + (g.alpha2 - g2) * (d2 - d12) -
           (g.alpha1 - g1) * d12 + log_beta(g1, g2);
  };
  prob.gradient = [g](const VectorXd& v) {
    const double g1 = g.partner, g2 = v(0);
    const double t2 = trigamma(g2), t12 = trigamma(g1 + g2);
    VectorXd out(1);
    out(0) = -g.pi_sum * t12 + g.keep_sum * (t2 - t12) + (g.alpha2 - g2) * (t2 - t12) -
             (g.alpha1 - g1) * t12;
    return out;
  };
  return prob;
}

BlockProblem r_problem(Index j, const CountMatrix& counts, const VariationalParams& delta,
                       const VectorXd& beta0, const Hyperparams& hyper, VectorXd log_rest) {
  const Index k = delta.rank();
  const ColumnSnapshot snap = column_snapshot(j, counts, delta, beta0, hyper, std::move(log_rest));
  const VectorXd a = delta.lambda2.row(j).transpose();
  const VectorXd data_term = snap.m.transpose() * snap.x;  // sum_i x_ij m_i
  double a_part = 0.0;
  for (Index l = 0; l < k; ++l) a_part += -0.5 * (a(l) / snap.prior_var(l) - std::log(a(l)));
  BlockProblem prob;
  prob.dim = k;
  prob.objective = [snap, a, data_term, a_part](const VectorXd& r) {
    const double prior = -0.5 * (r.array().square() / snap.prior_var.array()).sum() + a_part;
    return prior + data_term.dot(r) + column_normalizer(snap, r, a, false).value;
  };
  prob.value_and_gradient = [snap, a, data_term, a_part](const VectorXd& r, VectorXd& g) {
    const ColumnNormalizer nz = column_normalizer(snap, r, a, true);
    g = -(r.array() / snap.prior_var.array()).matrix() + data_term + nz.grad_r;
    return -0.5 * (r.array().square() / snap.prior_var.array()).sum() + a_part + data_term.dot(r) + nz.value;
  };
  prob.gradient = [f = prob.value_and_gradient](const VectorXd& r) {
    VectorXd g;
    f(r, g);
    return g;
  };
  return prob;
}

BlockProblem lambda2_problem(Index j, const CountMatrix& counts, const VariationalParams& delta,
                             const VectorXd& beta0, const Hyperparams& hyper, VectorXd log_rest) {
  const Index k = delta.rank();
  const ColumnSnapshot snap = column_snapshot(j, counts, delta, beta0, hyper, std::move(log_rest));
  const VectorXd r = delta.r.row(j).transpose();
  const double r_part = -0.5 * (r.array().square() / snap.prior_var.array()).sum() +
                        r.dot(snap.m.transpose() * snap.x);
  BlockProblem prob;
  prob.dim = k;
  prob.lower = lower_vec(k, kVarianceLower);
  prob.upper = lower_vec(k, kVarianceUpper);
  prob.objective = [snap, r, r_part](const VectorXd& a) {
    const double prior = -0.5 * (a.array() / snap.prior_var.array() - a.array().log()).sum();
    return prior + r_part + column_normalizer(snap, r, a, false).value;
  };
  prob.value_and_gradient = [snap, r, r_part](const VectorXd& a, VectorXd& g) {
    const ColumnNormalizer nz = column_normalizer(snap, r, a, true);
    g = (-0.5 * (snap.prior_var.array().inverse() - a.array().inverse())).matrix() + nz.grad_a;
    return -0.5 * (a.array() / snap.prior_var.array() - a.array().log()).sum() + r_part + nz.value;
  };
  prob.gradient = [f = prob.value_and_gradient](const VectorXd& a) {
    VectorXd g;
    f(a, g);
    return g;
  };
  return prob;
}

BlockProblem m_problem(Index i, const CountMatrix& counts, const VariationalParams& delta,
                       const VectorXd& beta0) {
  const Index k = delta.rank();
  const RowSnapshot snap = row_snapshot(i, counts, delta, beta0);
  const VectorXd s = delta.sigma2.row(i).transpose();
  const VectorXd data_term = snap.r.transpose() * snap.x;  // sum_j x_ij r_j
  const double s_part = -0.5 * (s.array() - s.array().log()).sum();
  BlockProblem prob;
  prob.dim = k;
  prob.objective = [snap, s, data_term, s_part](const VectorXd& m) {
    return -0.5 * m.squaredNorm() + s_part + data_term.dot(m) + row_normalizer(snap, m, s, false).value;
  };
  prob.value_and_gradient = [snap, s, data_term, s_part](const VectorXd& m, VectorXd& g) {
    const RowNormalizer nz = row_normalizer(snap, m, s, true);
    g = -m + data_term + nz.grad_m;
    return -0.5 * m.squaredNorm() + s_part + data_term.dot(m) + nz.value;
  };
  prob.gradient = [f = prob.value_and_gradient](const VectorXd& m) {
    VectorXd g;
    f(m, g);
    return g;
  };
  return prob;
}

BlockProblem sigma2_problem(Index i, const CountMatrix& counts, const VariationalParams& delta,
                             const VectorXd& beta0) {
  const Index k = delta.rank();
  const RowSnapshot snap = row_snapshot(i, counts, delta, beta0);
  const VectorXd m = delta.m.row(i).transpose();
  const double m_part = -0.5 * m.squaredNorm() + m.dot(snap.r.transpose() * snap.x);
  BlockProblem prob;
  prob.dim = k;
  prob.lower = lower_vec(k, kVarianceLower);
  prob.upper = lower_vec(k, kVarianceUpper);
  prob.objective = [snap, m, m_part](const VectorXd& s) {
    return -0.5 * (s.array() - s.array().log()).sum() + m_part + row_normalizer(snap, m, s, false).value;
  };
  prob.value_and_gradient = [snap, m, m_part](const VectorXd& s, VectorXd& g) {
    const RowNormalizer nz = row_normalizer(snap, m, s, true);
    g = (-0.5 * (1.0 - s.array().inverse())).matrix() + nz.grad_s;
    return -0.5 * (s.array() - s.array().log()).sum() + m_part + nz.value;
  };
  prob.gradient = [f = prob.value_and_gradient](const VectorXd& s) {
    VectorXd g;
    f(s, g);
    return g;
  };
  return prob;
}

BlockProblem beta0_problem(const CountMatrix& counts, const VariationalParams& delta, const MatrixXd& L) {
  const Index n = counts.samples();
  const Index p = counts.taxa();
  if (L.rows() != n || L.cols() != p) throw ValidationError("log-MGF grid must be n x p");
  // Offsets log(1 - pi) + L; inactive cells are -inf.
  MatrixXd offset(n, p);
  for (Index i = 0; i < n; ++i) {
    bool any = false;
    for (Index j = 0; j < p; ++j) {
      offset(i, j) = delta.pi(i, j) < 1.0 ? std::log(1.0 - delta.pi(i, j)) + L(i, j) : kNegInf;
      any = any || offset(i, j) != kNegInf;
    }
    if (counts.depths()(i) > 0.0 && !any) {
      std::ostringstream os;
      os << "sample " << i << " has no active taxon";
      throw DegenerateSupportError(os.str());
    }
  }
  const VectorXd totals = counts.counts().colwise().sum().transpose();
  const VectorXd depth = counts.depths();
  // Returns -sum_i M_i log S_i and fills the softmax-weighted depth per taxon.
  auto normalizer = [offset, depth](const VectorXd& b, VectorXd* expected) {
    const Index rows = offset.rows();
    const Index cols = offset.cols();
    double value = 0.0;
    if (expected) expected->setZero(cols);
    VectorXd row(cols);
    for (Index i = 0; i < rows; ++i) {
      if (!(depth(i) > 0.0)) continue;
      double mx = kNegInf;
      for (Index j = 0; j < cols; ++j) {
        row(j) = offset(i, j) + b(j);
        mx = std::max(mx, row(j));
      }
      double acc = 0.0;
      for (Index j = 0; j < cols; ++j)
        if (row(j) != kNegInf) acc += std::exp(row(j) - mx);
      const double logS = mx + std::log(acc);
      value -= depth(i) * logS;
      if (expected)
        for (Index j = 0; j < cols; ++j)
          if (row(j) != kNegInf) (*expected)(j) += depth(i) * std::exp(row(j) - logS);
    }
    return value;
  };
  BlockProblem prob;
  prob.dim = p;
  prob.objective = [totals, normalizer](const VectorXd& b) { return totals.dot(b) + normalizer(b, nullptr); };
  prob.value_and_gradient = [totals, normalizer](const VectorXd& b, VectorXd& g) {
    VectorXd expected;
    const double value = totals.dot(b) + normalizer(b, &expected);
    g = totals - expected;
    return value;
  };
  prob.gradient = [f = prob.value_and_gradient](const VectorXd& b) {
    VectorXd g;
    f(b, g);
    return g;
  };
  return prob;
}

}  // namespace detail

BlockProblem gamma1_block(Index j, const CountMatrix& counts, const VariationalParams& delta,
                          const Hyperparams& hyper) {
  check_inputs(counts, delta, hyper);
  check_index(j, counts.taxa(), "taxon");
  return detail::gamma1_problem(j, delta, hyper);
}

BlockProblem gamma2_block(Index j, const CountMatrix& counts, const VariationalParams& delta,
                          const Hyperparams& hyper) {
  check_inputs(counts, delta, hyper);
  check_index(j, counts.taxa(), "taxon");
  return detail::gamma2_problem(j, delta, hyper);
}

BlockProblem r_block(Index j, const CountMatrix& counts, const VariationalParams& delta,
                     const VectorXd& beta0, const Hyperparams& hyper) {
  check_inputs(counts, delta, hyper);
  return r_block(j, counts, delta, beta0, hyper, log_mgf_matrix(delta));
}

BlockProblem r_block(Index j, const CountMatrix& counts, const VariationalParams& delta,
                     const VectorXd& beta0, const Hyperparams& hyper, const MatrixXd& L) {
  check_index(j, counts.taxa(), "taxon");
  if (beta0.size() != counts.taxa()) throw ValidationError("beta0 must have length p");
  return detail::r_problem(j, counts, delta, beta0, hyper, detail::column_log_rest(j, delta, beta0, L));
}

BlockProblem lambda2_block(Index j, const CountMatrix& counts, const VariationalParams& delta,
                           const VectorXd& beta0, const Hyperparams& hyper) {
  check_inputs(counts, delta, hyper);
  return lambda2_block(j, counts, delta, beta0, hyper, log_mgf_matrix(delta));
}

BlockProblem lambda2_block(Index j, const CountMatrix& counts, const VariationalParams& delta,
                           const VectorXd& beta0, const Hyperparams& hyper, const MatrixXd& L) {
  check_index(j, counts.taxa(), "taxon");
  if (beta0.size() != counts.taxa()) throw ValidationError("beta0 must have length p");
  return detail::lambda2_problem(j, counts, delta, beta0, hyper, detail::column_log_rest(j, delta, beta0, L));
}

BlockProblem m_block(Index i, const CountMatrix& counts, const VariationalParams& delta,
                     const VectorXd& beta0, const Hyperparams& hyper) {
  check_inputs(counts, delta, hyper);
  check_index(i, counts.samples(), "sample");
  return detail::m_problem(i, counts, delta, beta0);
}

BlockProblem sigma2_block(Index i, const CountMatrix& counts, const VariationalParams& delta,
                          const VectorXd& beta0, const Hyperparams& hyper) {
  check_inputs(counts, delta, hyper);
  check_index(i, counts.samples(), "sample");
  return detail::sigma2_problem(i, counts, delta, beta0);
}

BlockProblem beta0_block(const CountMatrix& counts, const VariationalParams& delta) {
  delta.validate(counts);
  return detail::beta0_problem(counts, delta, log_mgf_matrix(delta));
}

BlockProblem beta0_block(const CountMatrix& counts, const VariationalParams& delta, const MatrixXd& L) {
  return detail::beta0_problem(counts, delta, L);
}

std::string_view block_name(BlockKind kind) {
  switch (kind) {
    case BlockKind::Gamma1: return "gamma1";
    case BlockKind::Gamma2: return "gamma2";
    case BlockKind::R: return "r";
    case BlockKind::Lambda2: return "lambda2";
    case BlockKind::M: return "m";
    case BlockKind::Sigma2: return "sigma2";
    case BlockKind::Beta0: return "beta0";
  }
  return "unknown";
}

BlockKind parse_block_kind(std::string_view name) {
  for (BlockKind kind : kAllBlocks)
    if (block_name(kind) == name) return kind;
  throw ValidationError("unknown block name: " + std::string(name));
}

bool is_column_block(BlockKind kind) {
  return kind == BlockKind::Gamma1 || kind == BlockKind::Gamma2 || kind == BlockKind::R ||
         kind == BlockKind::Lambda2;
}

BlockProblem make_block(BlockKind kind, Index index, const CountMatrix& counts,
                        const VariationalParams& delta, const VectorXd& beta0, const Hyperparams& hyper) {
  switch (kind) {
    case BlockKind::Gamma1: return gamma1_block(index, counts, delta, hyper);
    case BlockKind::Gamma2: return gamma2_block(index, counts, delta, hyper);
    case BlockKind::R: return r_block(index, counts, delta, beta0, hyper);
    case BlockKind::Lambda2: return lambda2_block(index, counts, delta, beta0, hyper);
    case BlockKind::M: return m_block(index, counts, delta, beta0, hyper);
    case BlockKind::Sigma2: return sigma2_block(index, counts, delta, beta0, hyper);
    case BlockKind::Beta0: return beta0_block(counts, delta);
  }
  throw ValidationError("unknown block kind");
}

VectorXd block_values(BlockKind kind, Index index, const VariationalParams& delta, const VectorXd& beta0) {
  switch (kind) {
    case BlockKind::Gamma1: return VectorXd::Constant(1, delta.gamma1(index));
    case BlockKind::Gamma2: return VectorXd::Constant(1, delta.gamma2(index));
    case BlockKind::R: return delta.r.row(index).transpose();
    case BlockKind::Lambda2: return delta.lambda2.row(index).transpose();
    case BlockKind::M: return delta.m.row(index).transpose();
    case BlockKind::Sigma2: return delta.sigma2.row(index).transpose();
    case BlockKind::Beta0: return beta0;
  }
  throw ValidationError("unknown block kind");
}

void set_block_values(BlockKind kind, Index index, const VectorXd& values, VariationalParams& delta,
                      VectorXd& beta0) {
  switch (kind) {
    case BlockKind::Gamma1: delta.gamma1(index) = values(0); return;
    case BlockKind::Gamma2: delta.gamma2(index) = values(0); return;
    case BlockKind::R: delta.r.row(index) = values.transpose(); return;
    case BlockKind::Lambda2: delta.lambda2.row(index) = values.transpose(); return;
    case BlockKind::M: delta.m.row(index) = values.transpose(); return;
    case BlockKind::Sigma2: delta.sigma2.row(index) = values.transpose(); return;
    case BlockKind::Beta0: beta0 = values; return;
  }
}

RandomState random_feasible_state(Index n, Index p, int k, std::uint64_t seed) {
  if (n < 1 || p < 2 || k < 1 || k >= p) throw ValidationError("random_feasible_state: bad dimensions");
  Rng rng(seed);
  RandomState st;
  st.hyper = Hyperparams::with_rank(k);
  for (Index l = 0; l < k; ++l) st.hyper.sigma_beta(l) = rng.uniform(0.5, 2.0);
  st.hyper.alpha1 = rng.uniform(0.5, 3.0);
  st.hyper.alpha2 = rng.uniform(0.5, 3.0);

  MatrixXd x = MatrixXd::Zero(n, p);
  for (Index i = 0; i < n; ++i) {
    VectorXd probs(p);
    for (Index j = 0; j < p; ++j) probs(j) = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.1, 1.0);
    if (probs.sum() <= 0.0) probs(static_cast<Index>(rng.uniform() * static_cast<double>(p)) % p) = 1.0;
    probs /= probs.sum();
    const long depth = 20 + static_cast<long>(rng.uniform() * 80.0);
    x.row(i) = rng.multinomial(depth, probs).transpose();
  }
  st.counts = CountMatrix(x);

  VariationalParams& d = st.delta;
  d.pi = MatrixXd::Zero(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j)
      if (x(i, j) == 0.0) d.pi(i, j) = rng.uniform(0.05, 0.95);
  d.r.resize(p, k);
  d.lambda2.resize(p, k);
  d.m.resize(n, k);
  d.sigma2.resize(n, k);
  for (Index a = 0; a < d.r.size(); ++a) d.r.data()[a] = 0.5 * rng.normal();
  for (Index a = 0; a < d.lambda2.size(); ++a) d.lambda2.data()[a] = rng.uniform(0.05, 0.95);
  for (Index a = 0; a < d.m.size(); ++a) d.m.data()[a] = 0.5 * rng.normal();
  for (Index a = 0; a < d.sigma2.size(); ++a) d.sigma2.data()[a] = rng.uniform(0.05, 0.95);
  d.gamma1.resize(p);
  d.gamma2.resize(p);
  for (Index j = 0; j < p; ++j) {
    d.gamma1(j) = rng.uniform(0.5, 5.0);
    d.gamma2(j) = rng.uniform(0.5, 5.0);
  }
  st.beta0.resize(p);
  for (Index j = 0; j < p; ++j) st.beta0(j) = rng.normal();
  return st;
}

}  // namespace zippca
