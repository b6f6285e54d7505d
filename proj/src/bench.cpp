#include "zippca/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "zippca/parallel.hpp"

namespace zippca {

double rmse(const MatrixXd& truth, const MatrixXd& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    throw ValidationError("rmse: shape mismatch");
  if (truth.size() == 0) throw ValidationError("rmse: empty input");
  return std::sqrt((estimate - truth).squaredNorm() / static_cast<double>(truth.size()));
}

void BenchConfig::validate() const {
  if (replications < 1) throw ValidationError("replications must be at least 1");
  if (scenarios.empty() || ks.empty() || sizes.empty()) throw ValidationError("benchmark grid is empty");
  for (const auto& [n, p] : sizes)
    for (int k : ks) ScenarioConfig{Scenario::S2, n, p, k, 0}.validate();
  fit.validate();
  if (!(alpha1 > 0.0 && alpha2 > 0.0)) throw ValidationError("alpha1 and alpha2 must be positive");
  if (!(pi0 > 0.0 && pi0 <= 1.0)) throw ValidationError("pi0 must lie in (0,1]");
}

namespace {

// Orthogonal R minimizing |estimate R - truth|.
MatrixXd procrustes_rotation(const MatrixXd& estimate, const MatrixXd& truth) {
  Eigen::JacobiSVD<MatrixXd> svd(estimate.transpose() * truth, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace

ReplicationScore score_replication(const ScenarioConfig& scenario, const BenchConfig& config) {
  // Taxa never observed are removed before fitting, as for real data.
  const SimulatedDataset full = generate(scenario);
  const SimulatedDataset data = without_empty_taxa(full);
  if (data.counts.taxa() <= scenario.k)
    throw ValidationError("too few observed taxa left for rank " + std::to_string(scenario.k));
  Hyperparams hyper = Hyperparams::with_rank(scenario.k);
  hyper.alpha1 = config.alpha1;
  hyper.alpha2 = config.alpha2;
  hyper.pi0 = config.pi0;
  FitOptions opts = config.fit;
  opts.seed = scenario.seed;
  const FitResult res = fit(data.counts, hyper, opts);

  MatrixXd F_hat = res.F_hat;
  MatrixXd B_hat = res.theta_hat.B;
  if (config.procrustes) {
    const MatrixXd R = procrustes_rotation(F_hat, data.truth_latent.F);
    F_hat = F_hat * R;
    B_hat = B_hat * R;
  }
  ReplicationScore s;
  s.seed = scenario.seed;
  s.dropped_taxa = static_cast<int>(full.counts.taxa() - data.counts.taxa());
  s.rmse_beta0 = rmse(data.truth_theta.beta0, res.theta_hat.beta0);
  s.rmse_eta = rmse(data.truth_theta.eta, res.theta_hat.eta);
  s.rmse_B = rmse(data.truth_theta.B, B_hat);
  s.rmse_F = rmse(data.truth_latent.F, F_hat);
  s.converged = res.converged;
  s.outer_iterations = res.outer_iterations;
  return s;
}

RmseReport run_benchmark(const BenchConfig& config) {
  config.validate();
  RmseReport report;
  for (Scenario sc : config.scenarios) {
    for (const auto& [n, p] : config.sizes) {
      for (int k : config.ks) {
        const auto t0 = std::chrono::steady_clock::now();
        RmseRecord rec;
        rec.scenario = sc;
        rec.n = n;
        rec.p = p;
        rec.k = k;
        rec.replications = config.replications;
        rec.per_replication.resize(static_cast<size_t>(config.replications));
        parallel_for(rec.per_replication.size(), config.threads, [&](size_t r) {
          const ScenarioConfig cell{sc, n, p, k, config.base_seed + r};
          rec.per_replication[r] = score_replication(cell, config);
        });
        auto aggregate = [&](double ReplicationScore::*field) {
          double acc = 0.0;
          for (const auto& s : rec.per_replication) {
            const double v = s.*field;
            acc += config.pooled ? v * v : v;
          }
          acc /= static_cast<double>(rec.per_replication.size());
          return config.pooled ? std::sqrt(acc) : acc;
        };
        rec.rmse_beta0 = aggregate(&ReplicationScore::rmse_beta0);
        rec.rmse_eta = aggregate(&ReplicationScore::rmse_eta);
        rec.rmse_B = aggregate(&ReplicationScore::rmse_B);
        rec.rmse_F = aggregate(&ReplicationScore::rmse_F);
        for (const auto& s : rec.per_replication) rec.n_converged += s.converged ? 1 : 0;
        rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.cells.push_back(std::move(rec));
      }
    }
  }
  return report;
}

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

std::string report_csv(const RmseReport& report) {
  std::ostringstream os;
  os << "scenario,n,p,k,replications,n_converged,rmse_beta0,rmse_eta,rmse_B,rmse_F\n";
  for (const auto& c : report.cells) {
    os << scenario_name(c.scenario) << ',' << c.n << ',' << c.p << ',' << c.k << ',' << c.replications << ','
       << c.n_converged << ',' << fmt("%.10g", c.rmse_beta0) << ',' << fmt("%.10g", c.rmse_eta) << ','
       << fmt("%.10g", c.rmse_B) << ',' << fmt("%.10g", c.rmse_F) << '\n';
  }
  return os.str();
}

std::string report_table(const RmseReport& report) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %5s %5s %3s %6s %9s %10s %10s %10s %10s\n", "scenario", "n", "p", "k",
                "reps", "converged", "beta0", "eta", "B", "F");
  os << line;
  for (const auto& c : report.cells) {
    std::snprintf(line, sizeof line, "%-8s %5ld %5ld %3d %6d %9d %10.4f %10.4f %10.4f %10.4f\n",
                  std::string(scenario_name(c.scenario)).c_str(), static_cast<long>(c.n), static_cast<long>(c.p),
                  c.k, c.replications, c.n_converged, c.rmse_beta0, c.rmse_eta, c.rmse_B, c.rmse_F);
    os << line;
  }
  return os.str();
}

}  // namespace zippca
