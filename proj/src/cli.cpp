#include "zippca/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "zippca/blocks.hpp"
#include "zippca/io.hpp"

namespace zippca {

using Json = nlohmann::ordered_json;

Hyperparams RunConfig::hyperparams() const {
  Hyperparams h = Hyperparams::with_rank(k);
  if (sigma_beta) {
    h.sigma_beta.resize(static_cast<Index>(sigma_beta->size()));
    for (std::size_t l = 0; l < sigma_beta->size(); ++l) h.sigma_beta(static_cast<Index>(l)) = (*sigma_beta)[l];
  }
  h.alpha1 = alpha1;
  h.alpha2 = alpha2;
  h.pi0 = pi0;
  return h;
}

BenchConfig RunConfig::bench_config() const {
  BenchConfig b;
  b.scenarios = scenarios;
  b.ks = ks;
  b.sizes = sizes;
  b.replications = replications;
  b.base_seed = seed;
  b.fit = fit;
  b.alpha1 = alpha1;
  b.alpha2 = alpha2;
  b.pi0 = pi0;
  b.threads = threads;
  b.pooled = pooled;
  b.procrustes = procrustes;
  return b;
}

namespace {

const char* command_name(Command c) {
  switch (c) {
    case Command::Fit: return "fit";
    case Command::Simulate: return "simulate";
    case Command::Bench: return "bench";
    case Command::Gradcheck: return "gradcheck";
  }
  return "?";
}

char parse_delimiter(const std::string& s) {
  if (s == "auto" || s.empty()) return 0;
  if (s == "comma" || s == ",") return ',';
  if (s == "tab" || s == "\\t" || s == "\t") return '\t';
  throw ValidationError("delimiter must be auto, comma or tab");
}

std::string delimiter_name(char d) { return d == 0 ? "auto" : (d == '\t' ? "tab" : "comma"); }

std::pair<Index, Index> parse_size(const std::string& s) {
  const auto x = s.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument("");
    return {std::stol(s.substr(0, x)), std::stol(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw ValidationError("size must look like 50x100, got '" + s + "'");
  }
}

// Exceptions to exit codes.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const EmptySupportError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DegenerateSupportError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

void ensure_output_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw ValidationError("cannot create output directory " + dir);
}

std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

Json matrix_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const VectorXd& v) {
  Json out = Json::array();
  for (Index a = 0; a < v.size(); ++a) out.push_back(v(a));
  return out;
}

MatrixXd column(const VectorXd& v) { return v; }

// Like CountMatrix::require_support, but names the offending rows and columns.
void require_named_support(const LabeledCounts& table) {
  const auto list = [](const std::vector<Index>& idx, const std::vector<std::string>& names) {
    std::string out;
    for (Index a : idx) out += (out.empty() ? "" : ", ") + names[static_cast<std::size_t>(a)];
    return out;
  };
  const auto samples = table.counts.empty_samples();
  const auto taxa = table.counts.empty_taxa();
  if (samples.empty() && taxa.empty()) return;
  std::string msg = "remove entries with zero total count;";
  if (!samples.empty()) msg += " samples: " + list(samples, table.sample_ids) + ";";
  if (!taxa.empty()) msg += " taxa: " + list(taxa, table.taxon_ids) + ";";
  msg.pop_back();
  throw EmptySupportError(msg);
}

}  // namespace

void apply_config_json(const std::string& json_text, RunConfig& c) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ParseError("config", 0, e.byte, "invalid JSON");
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const Json& v = it.value();
      if (key == "result") continue;
      if (key == "command") {
        if (v.get<std::string>() != command_name(c.command))
          throw ValidationError("config is for command '" + v.get<std::string>() + "'");
      } else if (key == "input") {
        c.input = v.get<std::string>();
      } else if (key == "output_dir") {
        c.output_dir = v.get<std::string>();
      } else if (key == "delimiter") {
        c.delimiter = parse_delimiter(v.get<std::string>());
      } else if (key == "k") {
        c.k = v.get<int>();
      } else if (key == "sigma_beta") {
        c.sigma_beta = v.get<std::vector<double>>();
      } else if (key == "alpha1") {
        c.alpha1 = v.get<double>();
      } else if (key == "alpha2") {
        c.alpha2 = v.get<double>();
      } else if (key == "pi0") {
        c.pi0 = v.get<double>();
      } else if (key == "seed" || key == "base_seed") {
        c.seed = v.get<std::uint64_t>();
      } else if (key == "max_iter") {
        c.fit.max_outer_iter = v.get<int>();
      } else if (key == "tol") {
        c.fit.elbo_rel_tol = v.get<double>();
      } else if (key == "jacobi") {
        c.fit.jacobi_parallel = v.get<bool>();
      } else if (key == "threads") {
        c.threads = v.get<unsigned>();
      } else if (key == "scenario") {
        c.scenario = parse_scenario(v.get<std::string>());
      } else if (key == "n") {
        c.n = v.get<Index>();
      } else if (key == "p") {
        c.p = v.get<Index>();
      } else if (key == "scenarios") {
        c.scenarios.clear();
        for (const auto& s : v) c.scenarios.push_back(parse_scenario(s.get<std::string>()));
      } else if (key == "ks") {
        c.ks = v.get<std::vector<int>>();
      } else if (key == "sizes") {
        c.sizes.clear();
        for (const auto& s : v) {
          if (!s.is_array() || s.size() != 2) throw ValidationError("sizes entries must be [n, p] pairs");
          c.sizes.emplace_back(s[0].get<Index>(), s[1].get<Index>());
        }
      } else if (key == "replications") {
        c.replications = v.get<int>();
      } else if (key == "pooled") {
        c.pooled = v.get<bool>();
      } else if (key == "procrustes") {
        c.procrustes = v.get<bool>();
      } else if (key == "points") {
        c.points = v.get<int>();
      } else if (key == "step") {
        c.step = v.get<double>();
      } else if (key == "corrupt_block") {
        c.corrupt_block = v.get<std::string>();
      } else {
        throw ValidationError("unknown config key '" + key + "'");
      }
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("config value has the wrong type: ") + e.what());
  }
}

std::string config_json(const RunConfig& c) {
  Json j;
  j["command"] = command_name(c.command);
  j["input"] = c.input;
  j["output_dir"] = c.output_dir;
  j["delimiter"] = delimiter_name(c.delimiter);
  j["k"] = c.k;
  j["sigma_beta"] = c.sigma_beta ? Json(*c.sigma_beta) : vector_json(c.hyperparams().sigma_beta);
  j["alpha1"] = c.alpha1;
  j["alpha2"] = c.alpha2;
  j["pi0"] = c.pi0;
  j["seed"] = c.seed;
  j["max_iter"] = c.fit.max_outer_iter;
  j["tol"] = c.fit.elbo_rel_tol;
  j["jacobi"] = c.fit.jacobi_parallel;
  j["threads"] = c.threads;
  return j.dump(2);
}

int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config.input.empty()) throw ValidationError("fit needs --input");
    const LabeledCounts table = read_count_table(config.input, config.delimiter);
    require_named_support(table);
    const Hyperparams hyper = config.hyperparams();
    hyper.validate(table.counts.taxa());
    FitOptions opts = config.fit;
    opts.seed = config.seed;
    opts.threads = config.threads;
    opts.validate();
    ensure_output_dir(config.output_dir);

    const FitResult res = fit(table.counts, hyper, opts);

    const auto factors = numbered_ids("factor", hyper.k);
    const auto& samples = table.sample_ids;
    const auto& taxa = table.taxon_ids;
    const std::string& dir = config.output_dir;
    write_matrix_csv(join_path(dir, "rho_hat.csv"), "sample", samples, taxa, res.rho_hat);
    write_matrix_csv(join_path(dir, "B_hat.csv"), "taxon", taxa, factors, res.theta_hat.B);
    write_matrix_csv(join_path(dir, "F_hat.csv"), "sample", samples, factors, res.F_hat);
    write_matrix_csv(join_path(dir, "eta_hat.csv"), "taxon", taxa, {"eta_hat"}, column(res.theta_hat.eta));
    write_matrix_csv(join_path(dir, "beta0_hat.csv"), "taxon", taxa, {"beta0_hat"}, column(res.theta_hat.beta0));
    std::ostringstream trace;
    trace << "iteration,sweep_start_elbo,elbo\n";
    for (std::size_t t = 0; t < res.elbo_trace.size(); ++t)
      trace << t + 1 << ',' << format_number(res.sweep_start_elbo[t]) << ',' << format_number(res.elbo_trace[t])
            << '\n';
    write_text_file(join_path(dir, "elbo_trace.csv"), trace.str());

    Json manifest = Json::parse(config_json(config));
    Json result;
    result["samples"] = table.counts.samples();
    result["taxa"] = table.counts.taxa();
    result["outer_iterations"] = res.outer_iterations;
    result["converged"] = res.converged;
    result["final_elbo"] = res.elbo_trace.empty() ? 0.0 : res.elbo_trace.back();
    manifest["result"] = result;
    write_text_file(join_path(dir, "manifest.json"), manifest.dump(2) + "\n");

    out << "fit: " << table.counts.samples() << " samples x " << table.counts.taxa() << " taxa, k=" << hyper.k
        << ", " << res.outer_iterations << " outer iterations, " << (res.converged ? "converged" : "not converged")
        << ", ELBO " << format_number(res.elbo_trace.back()) << '\n';
    return kExitOk;
  });
}

int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ScenarioConfig sc{config.scenario, config.n, config.p, config.k, config.seed};
    sc.validate();
    ensure_output_dir(config.output_dir);
    const SimulatedDataset data = generate(sc);
    LabeledCounts table{data.counts, numbered_ids("s", sc.n), numbered_ids("t", sc.p)};
    write_count_table(join_path(config.output_dir, "counts.csv"), table);

    Json truth;
    truth["scenario"] = std::string(scenario_name(sc.scenario));
    truth["n"] = sc.n;
    truth["p"] = sc.p;
    truth["k"] = sc.k;
    truth["seed"] = sc.seed;
    truth["depths"] = vector_json(data.counts.depths());
    truth["beta0"] = vector_json(data.truth_theta.beta0);
    truth["B"] = matrix_json(data.truth_theta.B);
    truth["eta"] = vector_json(data.truth_theta.eta);
    truth["F"] = matrix_json(data.truth_latent.F);
    truth["Z"] = matrix_json(data.truth_latent.Z.cast<double>());
    write_text_file(join_path(config.output_dir, "truth.json"), truth.dump(2) + "\n");

    const double zeros = (data.counts.counts().array() == 0.0).cast<double>().sum();
    out << "simulate: " << scenario_name(sc.scenario) << " n=" << sc.n << " p=" << sc.p << " k=" << sc.k
        << " seed=" << sc.seed << ", zero fraction " << format_number(zeros / static_cast<double>(sc.n * sc.p))
        << '\n';
    return kExitOk;
  });
}

int cmd_bench(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const BenchConfig bench = config.bench_config();
    bench.validate();
    ensure_output_dir(config.output_dir);
    const RmseReport report = run_benchmark(bench);
    write_text_file(join_path(config.output_dir, "rmse_report.csv"), report_csv(report));
    write_text_file(join_path(config.output_dir, "rmse_report.txt"), report_table(report));
    std::ostringstream reps;
    reps << "scenario,n,p,k,replication,seed,converged,outer_iterations,dropped_taxa,rmse_beta0,rmse_eta,rmse_B,rmse_F\n";
    for (const auto& cell : report.cells) {
      for (std::size_t r = 0; r < cell.per_replication.size(); ++r) {
        const auto& s = cell.per_replication[r];
        reps << scenario_name(cell.scenario) << ',' << cell.n << ',' << cell.p << ',' << cell.k << ',' << r + 1
             << ',' << s.seed << ',' << (s.converged ? 1 : 0) << ',' << s.outer_iterations << ','
             << s.dropped_taxa << ',' << format_number(s.rmse_beta0) << ',' << format_number(s.rmse_eta) << ',' << format_number(s.rmse_B)
             << ',' << format_number(s.rmse_F) << '\n';
      }
    }
    write_text_file(join_path(config.output_dir, "replications.csv"), reps.str());
    out << report_table(report);
    for (const auto& cell : report.cells)
      out << scenario_name(cell.scenario) << " (" << cell.n << "," << cell.p << ") k=" << cell.k << ": "
          << format_number(cell.wall_time) << " s\n";
    return kExitOk;
  });
}

int cmd_gradcheck(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config.points < 1) throw ValidationError("points must be at least 1");
    if (!(config.step >= 1e-7 && config.step <= 1e-3)) throw ValidationError("step must lie in [1e-7, 1e-3]");
    std::optional<BlockKind> corrupt;
    if (!config.corrupt_block.empty()) corrupt = parse_block_kind(config.corrupt_block);
    constexpr double kLimit = 1e-4;
    int status = kExitOk;
    for (BlockKind kind : kAllBlocks) {
      double worst = 0.0;
      std::uint64_t worst_seed = 0;
      for (int q = 0; q < config.points; ++q) {
        const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(q);
        const RandomState st = random_feasible_state(config.n, config.p, config.k, seed);
        const Index range = kind == BlockKind::Beta0 ? 1 : (is_column_block(kind) ? config.p : config.n);
        const Index index = q % range;
        BlockProblem prob = make_block(kind, index, st.counts, st.delta, st.beta0, st.hyper);
        if (corrupt && *corrupt == kind) {
          prob.gradient = [g = prob.gradient](const VectorXd& x) {
            VectorXd v = g(x);
            v(0) = -v(0);
            return v;
          };
        }
        const double e = grad_check(prob, block_values(kind, index, st.delta, st.beta0), config.step);
        if (e > worst) {
          worst = e;
          worst_seed = seed;
        }
      }
      const bool ok = worst < kLimit;
      out << block_name(kind) << " max_rel_error " << format_number(worst) << (ok ? " ok" : " FAIL") << '\n';
      if (!ok) {
        err << "gradient check failed for block " << block_name(kind) << " at point seed " << worst_seed << '\n';
        status = kExitCheckFailed;
      }
    }
    return status;
  });
}

namespace {

// Registers options on one subcommand and remembers how to copy each
// explicitly given value into a RunConfig.
class Binder {
 public:
  explicit Binder(CLI::App* app) : app_(app) {}

  template <class T, class Set>
  void option(const std::string& name, T& storage, Set set, const std::string& desc) {
    CLI::Option* opt = app_->add_option(name, storage, desc);
    appliers_.emplace_back(opt, [&storage, set](RunConfig& c) { set(c, storage); });
  }

  template <class Set>
  void flag(const std::string& name, bool& storage, Set set, const std::string& desc) {
    CLI::Option* opt = app_->add_flag(name, storage, desc);
    appliers_.emplace_back(opt, [&storage, set](RunConfig& c) { set(c, storage); });
  }

  void apply(RunConfig& c) const {
    for (const auto& [opt, fn] : appliers_)
      if (opt->count() > 0) fn(c);
  }

  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> appliers_;
};

struct FlagValues {
  std::string config, input, output_dir, delimiter, scenario, corrupt;
  int k = 0, max_iter = 0, replications = 0, points = 0;
  std::vector<int> ks;
  std::vector<double> sigma_beta;
  std::vector<std::string> scenarios, sizes;
  double alpha1 = 0, alpha2 = 0, pi0 = 0, tol = 0, step = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  long n = 0, p = 0;
  bool jacobi = false, pooled = false, procrustes = false;
};

void add_model_flags(Binder& b, FlagValues& v) {
  b.option("--alpha1", v.alpha1, [](RunConfig& c, double x) { c.alpha1 = x; }, "Beta prior first shape");
  b.option("--alpha2", v.alpha2, [](RunConfig& c, double x) { c.alpha2 = x; }, "Beta prior second shape");
  b.option("--pi0", v.pi0, [](RunConfig& c, double x) { c.pi0 = x; }, "classification threshold");
  b.option("--max-iter", v.max_iter, [](RunConfig& c, int x) { c.fit.max_outer_iter = x; }, "outer iteration cap");
  b.option("--tol", v.tol, [](RunConfig& c, double x) { c.fit.elbo_rel_tol = x; }, "relative ELBO tolerance");
  b.option("--threads", v.threads, [](RunConfig& c, unsigned x) { c.threads = x; }, "worker threads (0 = all)");
  b.flag("--jacobi", v.jacobi, [](RunConfig& c, bool x) { c.fit.jacobi_parallel = x; },
         "solve blocks of a stage in parallel from a frozen snapshot");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zero-inflated probabilistic PCA for sparse count tables"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "zippca 1.0.0");

  FlagValues fv[4];
  CLI::App* subs[4] = {
      app.add_subcommand("fit", "fit the model to a count table"),
      app.add_subcommand("simulate", "generate a synthetic dataset"),
      app.add_subcommand("bench", "run the RMSE simulation benchmark"),
      app.add_subcommand("gradcheck", "compare analytic and numerical block gradients"),
  };
  std::vector<Binder> binders;
  for (int s = 0; s < 4; ++s) {
    binders.emplace_back(subs[s]);
    subs[s]->add_option("--config", fv[s].config, "JSON settings file");
    Binder& b = binders.back();
    b.option("--output-dir", fv[s].output_dir, [](RunConfig& c, const std::string& x) { c.output_dir = x; },
             "directory for output files");
    b.option("--seed", fv[s].seed, [](RunConfig& c, std::uint64_t x) { c.seed = x; }, "random seed");
  }
  {
    Binder& b = binders[0];
    FlagValues& v = fv[0];
    b.option("--input", v.input, [](RunConfig& c, const std::string& x) { c.input = x; }, "count table (CSV/TSV)");
    b.option("--delimiter", v.delimiter, [](RunConfig& c, const std::string& x) { c.delimiter = parse_delimiter(x); },
             "auto, comma or tab");
    b.option("--k", v.k, [](RunConfig& c, int x) { c.k = x; }, "number of latent factors");
    b.option("--sigma-beta", v.sigma_beta, [](RunConfig& c, const std::vector<double>& x) { c.sigma_beta = x; },
             "loading prior variances (k values)");
    add_model_flags(b, v);
  }
  {
    Binder& b = binders[1];
    FlagValues& v = fv[1];
    b.option("--scenario", v.scenario, [](RunConfig& c, const std::string& x) { c.scenario = parse_scenario(x); },
             "S1 or S2");
    b.option("--n", v.n, [](RunConfig& c, long x) { c.n = x; }, "samples");
    b.option("--p", v.p, [](RunConfig& c, long x) { c.p = x; }, "taxa");
    b.option("--k", v.k, [](RunConfig& c, int x) { c.k = x; }, "number of latent factors");
  }
  {
    Binder& b = binders[2];
    FlagValues& v = fv[2];
    b.option("--scenario", v.scenarios,
             [](RunConfig& c, const std::vector<std::string>& x) {
               c.scenarios.clear();
               for (const auto& s : x) c.scenarios.push_back(parse_scenario(s));
             },
             "scenarios to run (repeatable)");
    b.option("--k", v.ks, [](RunConfig& c, const std::vector<int>& x) { c.ks = x; }, "ranks to run (repeatable)");
    b.option("--size", v.sizes,
             [](RunConfig& c, const std::vector<std::string>& x) {
               c.sizes.clear();
               for (const auto& s : x) c.sizes.push_back(parse_size(s));
             },
             "NxP grid cells (repeatable)");
    b.option("--replications", v.replications, [](RunConfig& c, int x) { c.replications = x; },
             "replications per cell");
    b.flag("--pooled", v.pooled, [](RunConfig& c, bool x) { c.pooled = x; }, "pooled RMSE instead of mean of RMSEs");
    b.flag("--procrustes", v.procrustes, [](RunConfig& c, bool x) { c.procrustes = x; },
           "rotate estimates onto the truth before scoring");
    add_model_flags(b, v);
  }
  {
    Binder& b = binders[3];
    FlagValues& v = fv[3];
    b.option("--points", v.points, [](RunConfig& c, int x) { c.points = x; }, "random points per block");
    b.option("--step", v.step, [](RunConfig& c, double x) { c.step = x; }, "central difference step");
    b.option("--n", v.n, [](RunConfig& c, long x) { c.n = x; }, "samples");
    b.option("--p", v.p, [](RunConfig& c, long x) { c.p = x; }, "taxa");
    b.option("--k", v.k, [](RunConfig& c, int x) { c.k = x; }, "number of latent factors");
    b.option("--corrupt-block", v.corrupt, [](RunConfig& c, const std::string& x) { c.corrupt_block = x; },
             "flip one gradient sign in this block (detector self-test)")
        ;
    subs[3]->get_option("--corrupt-block")->group("");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (int s = 0; s < 4; ++s) {
    if (!subs[s]->parsed()) continue;
    RunConfig config;
    config.command = static_cast<Command>(s);
    if (config.command == Command::Gradcheck) {
      config.n = 10;
      config.p = 15;
      config.k = 3;
    }
    const int setup = guarded(err, [&] {
      if (!fv[s].config.empty()) {
        std::ifstream in(fv[s].config);
        if (!in) throw ParseError(fv[s].config, 0, 0, "cannot open config file");
        std::stringstream buf;
        buf << in.rdbuf();
        apply_config_json(buf.str(), config);
      }
      binders[static_cast<std::size_t>(s)].apply(config);
      return kExitOk;
    });
    if (setup != kExitOk) return setup;
    switch (config.command) {
      case Command::Fit: return cmd_fit(config, out, err);
      case Command::Simulate: return cmd_simulate(config, out, err);
      case Command::Bench: return cmd_bench(config, out, err);
      case Command::Gradcheck: return cmd_gradcheck(config, out, err);
    }
  }
  return kExitUsage;
}

}  // namespace zippca
