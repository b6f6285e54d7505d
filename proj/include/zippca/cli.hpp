#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zippca/bench.hpp"

namespace zippca {

enum class Command { Fit, Simulate, Bench, Gradcheck };

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

/// Everything a command needs, after merging the JSON config file (if any)
/// with explicit command-line flags. Flags win over the file.
struct RunConfig {
  Command command = Command::Fit;
  std::string input;
  std::string output_dir = ".";
  char delimiter = 0;  // 0 = detect

  int k = 2;
  std::optional<std::vector<double>> sigma_beta;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double pi0 = 0.5;
  std::uint64_t seed = 1;
  FitOptions fit;
  unsigned threads = 0;

  // simulate / gradcheck sizes
  Scenario scenario = Scenario::S2;
  Index n = 50;
  Index p = 100;

  // bench
  std::vector<Scenario> scenarios = {Scenario::S2};
  std::vector<int> ks = {2, 5};
  std::vector<std::pair<Index, Index>> sizes = {{50, 100}};
  int replications = 100;
  bool pooled = false;
  bool procrustes = false;

  // gradcheck
  int points = 100;
  double step = 1e-5;
  std::string corrupt_block;  // flips one gradient sign in the named block

  Hyperparams hyperparams() const;
  BenchConfig bench_config() const;
};

// Apply a flat JSON object of settings. Unknown keys are rejected; a
// "result" member (present in fit manifests) is ignored.
void apply_config_json(const std::string& json_text, RunConfig& config);

// Settings of a fit run as JSON, in the form apply_config_json reads back.
std::string config_json(const RunConfig& config);

int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_bench(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const RunConfig& config, std::ostream& out, std::ostream& err);

// Parse argv, merge config, dispatch. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace zippca
