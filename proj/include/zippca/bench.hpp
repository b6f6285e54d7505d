#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "zippca/fit.hpp"
#include "zippca/simulator.hpp"

namespace zippca {

// sqrt(mean((estimate - truth)^2)) over every entry. Throws on shape mismatch.
double rmse(const MatrixXd& truth, const MatrixXd& estimate);

struct BenchConfig {
  std::vector<Scenario> scenarios = {Scenario::S2};
  std::vector<int> ks = {2, 5};
  std::vector<std::pair<Index, Index>> sizes = {{50, 100}};  // (n, p)
  int replications = 100;
  std::uint64_t base_seed = 1;
  FitOptions fit;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double pi0 = 0.5;
  unsigned threads = 0;      // replication workers; 0 means all cores
  bool pooled = false;       // RMSE of pooled errors instead of mean of RMSEs
  bool procrustes = false;   // rotate F_hat (and B_hat) onto the truth before scoring

  void validate() const;
};

struct ReplicationScore {
  std::uint64_t seed = 0;
  double rmse_beta0 = 0.0;
  double rmse_eta = 0.0;
  double rmse_B = 0.0;
  double rmse_F = 0.0;
  bool converged = false;
  int outer_iterations = 0;
  int dropped_taxa = 0;  // taxa with zero total count, excluded from fit and scores
};

struct RmseRecord {
  Scenario scenario = Scenario::S2;
  Index n = 0;
  Index p = 0;
  int k = 0;
  double rmse_beta0 = 0.0;
  double rmse_eta = 0.0;
  double rmse_B = 0.0;
  double rmse_F = 0.0;
  int replications = 0;
  int n_converged = 0;
  double wall_time = 0.0;  // seconds; reported on screen only
  std::vector<ReplicationScore> per_replication;
};

struct RmseReport {
  std::vector<RmseRecord> cells;
};

// Fit one simulated dataset and score it against the truth. Taxa with a zero
// total count are dropped first; beta0, eta and B are scored on the rest.
ReplicationScore score_replication(const ScenarioConfig& scenario, const BenchConfig& config);

/// For every (scenario, (n,p), k) cell, replication r uses seed base_seed + r
/// for both the simulator and the fit. Replications run on a worker pool and
/// are reduced in index order, so the report does not depend on scheduling.
RmseReport run_benchmark(const BenchConfig& config);

// Column order: scenario,n,p,k,replications,n_converged,rmse_beta0,rmse_eta,rmse_B,rmse_F
std::string report_csv(const RmseReport& report);
// Aligned plain-text table in the same column order.
std::string report_table(const RmseReport& report);

}  // namespace zippca
