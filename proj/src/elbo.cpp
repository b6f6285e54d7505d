#include "zippca/elbo.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "zippca/special_functions.hpp"

namespace zippca {

namespace {

constexpr double kExpClamp = 700.0;

double xlogx(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

bool in_open_unit(double v) { return v > 0.0 && v < 1.0; }

}  // namespace

void VariationalParams::validate(const CountMatrix& counts) const {
  const Index n = counts.samples();
  const Index p = counts.taxa();
  const Index k = rank();
  if (pi.rows() != n || pi.cols() != p) throw ValidationError("pi must be n x p");
  if (r.rows() != p || lambda2.rows() != p || lambda2.cols() != k)
    throw ValidationError("r and lambda2 must be p x k");
  if (m.rows() != n || m.cols() != k || sigma2.rows() != n || sigma2.cols() != k)
    throw ValidationError("m and sigma2 must be n x k");
  if (gamma1.size() != p || gamma2.size() != p) throw ValidationError("gamma1 and gamma2 must have length p");
  if (!r.allFinite() || !m.allFinite()) throw ValidationError("non-finite variational means");
  for (Index a = 0; a < lambda2.size(); ++a)
    if (!in_open_unit(lambda2.data()[a])) throw ValidationError("lambda2 entries must lie in (0,1)");
  for (Index a = 0; a < sigma2.size(); ++a)
    if (!in_open_unit(sigma2.data()[a])) throw ValidationError("sigma2 entries must lie in (0,1)");
  if (!(gamma1.array() > 0.0).all() || !(gamma2.array() > 0.0).all() || !gamma1.allFinite() ||
      !gamma2.allFinite())
    throw ValidationError("gamma parameters must be positive");
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) {
      const double v = pi(i, j);
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("pi entries must lie in [0,1]");
      if (counts(i, j) > 0.0 && v != 0.0) {
        std::ostringstream os;
        os << "pi(" << i << "," << j << ") must be 0 for a positive count";
        throw ValidationError(os.str());
      }
    }
  }
}

double log_mgf_term(const VectorXd& m, const VectorXd& sigma2, const VectorXd& r,
                    const VectorXd& lambda2) {
  const Index k = m.size();
  if (sigma2.size() != k || r.size() != k || lambda2.size() != k)
    throw ValidationError("log_mgf_term: length mismatch");
  double total = 0.0;
  for (Index l = 0; l < k; ++l) {
    const double sa = sigma2(l) * lambda2(l);
    if (!(sa < 1.0)) throw SingularityError("log_mgf_term: sigma2 * lambda2 >= 1");
    const double d = 1.0 - sa;
    total += -0.5 * std::log(d) +
             (sigma2(l) * r(l) * r(l) + lambda2(l) * m(l) * m(l) + 2.0 * m(l) * r(l)) / (2.0 * d);
  }
  return total;
}

double log_mgf_entry(const VariationalParams& delta, Index i, Index j) {
  double total = 0.0;
  for (Index l = 0; l < delta.rank(); ++l) {
    const double s = delta.sigma2(i, l), a = delta.lambda2(j, l);
    const double m = delta.m(i, l), r = delta.r(j, l);
    const double sa = s * a;
    if (!(sa < 1.0)) throw SingularityError("log_mgf_term: sigma2 * lambda2 >= 1");
    const double d = 1.0 - sa;
    total += -0.5 * std::log(d) + (s * r * r + a * m * m + 2.0 * m * r) / (2.0 * d);
  }
  return total;
}

MatrixXd log_mgf_matrix(const VariationalParams& delta) {
  const Index n = delta.samples();
  const Index p = delta.taxa();
  MatrixXd L(n, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i) L(i, j) = log_mgf_entry(delta, i, j);
  return L;
}

VectorXd log_normalizers(const VariationalParams& delta, const VectorXd& beta0,
                         const MatrixXd& L) {
  const Index n = L.rows();
  const Index p = L.cols();
  VectorXd out(n);
  for (Index i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < p; ++j)
      if (delta.pi(i, j) < 1.0) mx = std::max(mx, beta0(j) + L(i, j));
    if (!std::isfinite(mx)) {
      std::ostringstream os;
      os << "sample " << i << " has no active taxon";
      throw DegenerateSupportError(os.str());
    }
    double acc = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double keep = 1.0 - delta.pi(i, j);
      if (keep > 0.0) acc += keep * std::exp(beta0(j) + L(i, j) - mx);
    }
    out(i) = mx + std::log(acc);
  }
  return out;
}

namespace {

// Terms shared verbatim by both lower bounds.
struct SharedTerms {
  double loading_prior = 0.0;
  double factor_prior = 0.0;
  double bernoulli = 0.0;
  double beta_cross = 0.0;
  double beta_functions = 0.0;
};

SharedTerms shared_terms(const VariationalParams& delta, const Hyperparams& hyper) {
  const Index n = delta.samples();
  const Index p = delta.taxa();
  const Index k = delta.rank();
  SharedTerms t;
  for (Index j = 0; j < p; ++j) {
    double tr = 0.0, logdet = 0.0;
    for (Index l = 0; l < k; ++l) {
      tr += (delta.r(j, l) * delta.r(j, l) + delta.lambda2(j, l)) / hyper.sigma_beta(l);
      logdet += std::log(delta.lambda2(j, l));
    }
    t.loading_prior += -0.5 * (tr - logdet);
  }
  for (Index i = 0; i < n; ++i) {
    double tr = 0.0, logdet = 0.0;
    for (Index l = 0; l < k; ++l) {
      tr += delta.m(i, l) * delta.m(i, l) + delta.sigma2(i, l);
      logdet += std::log(delta.sigma2(i, l));
    }
    t.factor_prior += -0.5 * (tr - logdet);
  }
  const double lb_prior = log_beta(hyper.alpha1, hyper.alpha2);
  for (Index j = 0; j < p; ++j) {
    const double g1 = delta.gamma1(j), g2 = delta.gamma2(j);
    const double dsum = digamma(g1 + g2);
    const double e_log_eta = digamma(g1) - dsum;
    const double e_log_1m_eta = digamma(g2) - dsum;
    for (Index i = 0; i < n; ++i) {
      const double pij = delta.pi(i, j);
      t.bernoulli += pij * e_log_eta - xlogx(pij) + (1.0 - pij) * e_log_1m_eta - xlogx(1.0 - pij);
    }
    t.beta_cross += (hyper.alpha1 - g1) * e_log_eta + (hyper.alpha2 - g2) * e_log_1m_eta;
    t.beta_functions += log_beta(g1, g2) - lb_prior;
  }
  return t;
}

void check_shapes(const CountMatrix& counts, const VariationalParams& delta, const VectorXd& beta0,
                  const Hyperparams& hyper) {
  delta.validate(counts);
  if (beta0.size() != counts.taxa()) throw ValidationError("beta0 must have length p");
  if (hyper.sigma_beta.size() != delta.rank()) throw ValidationError("sigma_beta must have length k");
}

}  // namespace

ElboBreakdown elbo_lpnm(const CountMatrix& counts, const VariationalParams& delta,
                        const VectorXd& beta0, const Hyperparams& hyper) {
  check_shapes(counts, delta, beta0, hyper);
  const Index n = counts.samples();
  const Index p = counts.taxa();
  const MatrixXd L = log_mgf_matrix(delta);
  const VectorXd logS = log_normalizers(delta, beta0, L);
  const MatrixXd mr = delta.m * delta.r.transpose();

  ElboBreakdown out;
  const SharedTerms t = shared_terms(delta, hyper);
  out.loading_prior = t.loading_prior;
  out.factor_prior = t.factor_prior;
  out.bernoulli = t.bernoulli;
  out.beta_cross = t.beta_cross;
  out.beta_functions = t.beta_functions;
  for (Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Index j = 0; j < p; ++j)
      if (counts(i, j) > 0.0) acc += counts(i, j) * (beta0(j) + mr(i, j));
    if (counts.depths()(i) > 0.0) acc -= counts.depths()(i) * logS(i);
    out.multinomial += acc;
  }
  out.total = out.loading_prior + out.factor_prior + out.beta_functions + out.multinomial +
              out.bernoulli + out.beta_cross;
  return out;
}

double elbo_dropped_constant(const CountMatrix& counts, const Hyperparams& hyper, Index p) {
  const Index n = counts.samples();
  const double k = static_cast<double>(hyper.k);
  double c = 0.0;
  for (Index i = 0; i < n; ++i) {
    c += log_factorial(counts.depths()(i));
    for (Index j = 0; j < counts.taxa(); ++j) c -= log_factorial(counts(i, j));
  }
  double log_det_prior = 0.0;
  for (Index l = 0; l < hyper.sigma_beta.size(); ++l) log_det_prior += std::log(hyper.sigma_beta(l));
  c += static_cast<double>(p) * (0.5 * k - 0.5 * log_det_prior);
  c += static_cast<double>(n) * 0.5 * k;
  return c;
}

double alpha0_hat(const CountMatrix& counts, const VariationalParams& delta,
                  const VectorXd& beta0, Index i) {
  if (i < 0 || i >= counts.samples()) throw ValidationError("alpha0_hat: sample index out of range");
  const Index p = counts.taxa();
  VectorXd Lrow(p);
  for (Index j = 0; j < p; ++j) Lrow(j) = log_mgf_entry(delta, i, j);
  double mx = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < p; ++j)
    if (delta.pi(i, j) < 1.0) mx = std::max(mx, beta0(j) + Lrow(j));
  if (!std::isfinite(mx)) throw DegenerateSupportError("alpha0_hat: no active taxon");
  double acc = 0.0;
  for (Index j = 0; j < p; ++j) {
    const double keep = 1.0 - delta.pi(i, j);
    if (keep > 0.0) acc += keep * std::exp(beta0(j) + Lrow(j) - mx);
  }
  const double depth = counts.depths()(i);
  if (!(depth > 0.0)) throw DegenerateSupportError("alpha0_hat: sample has zero depth");
  return std::log(depth) - mx - std::log(acc);
}

VectorXd alpha0_hat_all(const CountMatrix& counts, const VariationalParams& delta,
                        const VectorXd& beta0) {
  const MatrixXd L = log_mgf_matrix(delta);
  const VectorXd logS = log_normalizers(delta, beta0, L);
  VectorXd out(counts.samples());
  for (Index i = 0; i < counts.samples(); ++i) {
    const double depth = counts.depths()(i);
    if (!(depth > 0.0)) throw DegenerateSupportError("alpha0_hat: sample has zero depth");
    out(i) = std::log(depth) - logS(i);
  }
  return out;
}

double pi_hat_cell(double gamma1, double gamma2, double exponent) {
  const double rate = std::exp(std::min(exponent, kExpClamp));
  // exp(psi1) / (exp(psi1) + exp(psi2) exp(-rate)) as a logistic.
  const double logit = digamma(gamma1) - digamma(gamma2) + rate;
  if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

MatrixXd pi_hat(const CountMatrix& counts, const VariationalParams& delta,
                const VectorXd& beta0) {
  delta.validate(counts);
  const Index n = counts.samples();
  const Index p = counts.taxa();
  const MatrixXd L = log_mgf_matrix(delta);
  const VectorXd logS = log_normalizers(delta, beta0, L);
  MatrixXd out = MatrixXd::Zero(n, p);
  for (Index i = 0; i < n; ++i) {
    const double a0 = std::log(counts.depths()(i)) - logS(i);
    for (Index j = 0; j < p; ++j) {
      if (counts(i, j) > 0.0) continue;
      out(i, j) = pi_hat_cell(delta.gamma1(j), delta.gamma2(j), a0 + beta0(j) + L(i, j));
    }
  }
  return out;
}

double elbo_poisson(const CountMatrix& counts, const VariationalParams& delta,
                    const VectorXd& beta0, const VectorXd& alpha0, const Hyperparams& hyper) {
  check_shapes(counts, delta, beta0, hyper);
  if (alpha0.size() != counts.samples()) throw ValidationError("alpha0 must have length n");
  const Index n = counts.samples();
  const Index p = counts.taxa();
  const MatrixXd L = log_mgf_matrix(delta);
  const MatrixXd mr = delta.m * delta.r.transpose();
  const SharedTerms t = shared_terms(delta, hyper);
  double lik = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) {
      const double keep = 1.0 - delta.pi(i, j);
      if (keep <= 0.0) continue;
      const double x = counts(i, j);
      lik += keep * (x * (alpha0(i) + beta0(j) + mr(i, j)) -
                     std::exp(alpha0(i) + beta0(j) + L(i, j)) - log_factorial(x));
    }
  }
  return t.loading_prior + t.factor_prior + t.beta_functions + t.bernoulli + t.beta_cross + lik;
}

}  // namespace zippca
