#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "zippca/core_model.hpp"

namespace zippca {

enum class Scenario { S1, S2 };

std::string_view scenario_name(Scenario s);
// Accepts "S1"/"S2" in either case; throws ValidationError otherwise.
Scenario parse_scenario(std::string_view name);

/// Generative settings. Both scenarios use intercepts of 2, standard normal
/// factors and depths drawn from U(800, 1000).
///   S1: loadings U(-1, 1), eta = 0.25
///   S2: loadings N(0, 0.1), eta ~ Beta(2, 3)
struct ScenarioConfig {
  Scenario scenario = Scenario::S2;
  Index n = 50;
  Index p = 100;
  int k = 2;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SimulatedDataset {
  CountMatrix counts;
  ModelParams truth_theta;
  LatentState truth_latent;
};

/// Draw order: eta (j = 0..p-1), B (row by row), then for each sample the
/// factor f_i, the indicators z_i (redrawn while every taxon is suppressed),
/// the depth M_i and the counts x_i.
SimulatedDataset generate(const ScenarioConfig& config);

/// The dataset restricted to taxa with a nonzero total count, so it can be
/// fitted. Truth parameters and indicators are subset to match; `kept`
/// receives the original indices of the retained taxa.
SimulatedDataset without_empty_taxa(const SimulatedDataset& data, std::vector<Index>* kept = nullptr);

}  // namespace zippca
