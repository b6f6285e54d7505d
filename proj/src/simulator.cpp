#include "zippca/simulator.hpp"

#include <cctype>
#include <cmath>

#include "zippca/rng.hpp"

namespace zippca {

std::string_view scenario_name(Scenario s) { return s == Scenario::S1 ? "S1" : "S2"; }

Scenario parse_scenario(std::string_view name) {
  std::string up(name);
  for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "S1") return Scenario::S1;
  if (up == "S2") return Scenario::S2;
  throw ValidationError("unknown scenario '" + std::string(name) + "' (expected S1 or S2)");
}

void ScenarioConfig::validate() const {
  if (n < 1) throw ValidationError("n must be positive");
  if (p < 2) throw ValidationError("p must be at least 2");
  if (k < 1) throw ValidationError("k must be positive");
  if (k >= p) throw ValidationError("k must be smaller than p");
}

SimulatedDataset generate(const ScenarioConfig& config) {
  config.validate();
  const Index n = config.n;
  const Index p = config.p;
  const Index k = config.k;
  Rng rng(config.seed);

  ModelParams theta;
  theta.beta0 = VectorXd::Constant(p, 2.0);
  theta.eta.resize(p);
  for (Index j = 0; j < p; ++j) theta.eta(j) = config.scenario == Scenario::S1 ? 0.25 : rng.beta(2.0, 3.0);
  theta.B.resize(p, k);
  const double sd = std::sqrt(0.1);
  for (Index j = 0; j < p; ++j)
    for (Index l = 0; l < k; ++l)
      theta.B(j, l) = config.scenario == Scenario::S1 ? rng.uniform(-1.0, 1.0) : rng.normal(0.0, sd);

  LatentState latent;
  latent.F.resize(n, k);
  latent.Z.resize(n, p);
  MatrixXd x(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index l = 0; l < k; ++l) latent.F(i, l) = rng.normal();
    Eigen::VectorXi z(p);
    do {
      for (Index j = 0; j < p; ++j) z(j) = rng.bernoulli(theta.eta(j)) ? 1 : 0;
    } while (z.sum() == p);
    latent.Z.row(i) = z.transpose();
    const long depth = std::lround(rng.uniform(800.0, 1000.0));
    const VectorXd rho = zero_inflated_compositions(z, theta.beta0, theta.B, latent.F.row(i).transpose());
    x.row(i) = rng.multinomial(depth, rho).transpose();
  }
  return {CountMatrix(std::move(x)), std::move(theta), std::move(latent)};
}

SimulatedDataset without_empty_taxa(const SimulatedDataset& data, std::vector<Index>* kept) {
  std::vector<Index> keep;
  for (Index j = 0; j < data.counts.taxa(); ++j)
    if (data.counts.counts().col(j).sum() > 0.0) keep.push_back(j);
  const auto q = static_cast<Index>(keep.size());
  SimulatedDataset out;
  MatrixXd x(data.counts.samples(), q);
  out.truth_theta.beta0.resize(q);
  out.truth_theta.eta.resize(q);
  out.truth_theta.B.resize(q, data.truth_theta.B.cols());
  out.truth_latent.F = data.truth_latent.F;
  out.truth_latent.Z.resize(data.truth_latent.Z.rows(), q);
  for (Index c = 0; c < q; ++c) {
    const Index j = keep[static_cast<std::size_t>(c)];
    x.col(c) = data.counts.counts().col(j);
    out.truth_theta.beta0(c) = data.truth_theta.beta0(j);
    out.truth_theta.eta(c) = data.truth_theta.eta(j);
    out.truth_theta.B.row(c) = data.truth_theta.B.row(j);
    out.truth_latent.Z.col(c) = data.truth_latent.Z.col(j);
  }
  out.counts = CountMatrix(std::move(x));
  if (kept) *kept = std::move(keep);
  return out;
}

}  // namespace zippca
