#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "ifbound/errors.hpp"
#include "ifbound/io.hpp"

using namespace ifbound;

namespace {

struct CommonFlags {
  std::string estimand = "basic";
  double alpha = 0.05;
  std::string backend = "linearized";
  std::size_t mc_reps = 10000;
  std::uint64_t node_budget = SolveBudget{}.max_nodes;
  std::int64_t time_budget_ms = 0;
  std::uint64_t seed = 1;
  bool no_floor = false;
  std::string out;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--estimand", f.estimand,
                  "basic | basic-network | indirect | nonneighbors | control | treated")
      ->capture_default_str();
  app->add_option("--alpha", f.alpha, "one-sided level")->capture_default_str();
  app->add_option("--backend", f.backend, "variance moments: linearized | mc")
      ->capture_default_str();
  app->add_option("--mc-reps", f.mc_reps, "design draws for the mc backend")
      ->capture_default_str();
  app->add_option("--node-budget", f.node_budget, "branch-and-bound node cap per solve")
      ->capture_default_str();
  app->add_option("--time-budget-ms", f.time_budget_ms,
                  "wall-clock cap per solve, 0 = none (nondeterministic when set)")
      ->capture_default_str();
  app->add_option("--seed", f.seed, "master seed")->capture_default_str();
  app->add_flag("--no-variance-floor", f.no_floor, "disable the thresholded variance");
  app->add_option("--out", f.out, "write the key=value report here (default: stdout)");
}

MomentBackend make_backend(const CommonFlags& f) {
  MomentBackend b;
  b.mode = parse_backend(f.backend);
  b.replications = f.mc_reps;
  b.seed = f.seed;
  return b;
}

SolveBudget make_budget(const CommonFlags& f) {
  SolveBudget b;
  b.max_nodes = f.node_budget;
  b.time_limit_ms = f.time_budget_ms;
  return b;
}

void warn_floor(const CommonFlags& f) {
  if (f.no_floor) {
    std::cerr << "warning: --no-variance-floor given; the coverage guarantee holds only for "
                 "the thresholded variance\n";
  }
}

template <class Report>
void write_report(const CommonFlags& f, const Report& report, const ReportContext& ctx) {
  if (f.out.empty()) {
    emit_report(std::cout, report, ctx);
    return;
  }
  std::ofstream out(f.out);
  if (!out) throw ConfigError("cannot write " + f.out);
  emit_report(out, report, ctx);
  out.flush();
  if (!out) throw ConfigError("write failed for " + f.out);
  print_summary(std::cout, report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lower confidence bounds on the number of units affected by treatment"};
  app.require_subcommand(1);

  CommonFlags an_flags;
  ExperimentPaths paths;
  std::string units, design, edges, thresholds;
  auto* analyze_cmd = app.add_subcommand("analyze", "bound tau from an observed experiment");
  analyze_cmd->add_option("--units", units, "CSV unit,x,y")->required();
  analyze_cmd->add_option("--design", design, "CSV unit,p")->required();
  analyze_cmd->add_option("--edges", edges, "CSV src,dst");
  analyze_cmd->add_option("--thresholds", thresholds, "CSV unit,t,t2");
  add_common(analyze_cmd, an_flags);

  CommonFlags sim_flags;
  SimConfig cfg;
  std::string rows_path;
  std::vector<double> scales{cfg.scales.a0, cfg.scales.a1, cfg.scales.a2};
  auto* sim_cmd = app.add_subcommand("simulate", "replicate the simulation study");
  sim_cmd->add_option("--n", cfg.n, "units per replication")->capture_default_str();
  sim_cmd->add_option("--reps", cfg.replications, "replications")->capture_default_str();
  sim_cmd->add_option("--treat-prob", cfg.treat_prob, "P(X_i = 1)")->capture_default_str();
  sim_cmd->add_option("--scales", scales, "coefficient scales s0 s1 s2")->expected(3);
  sim_cmd->add_option("--min-partners", cfg.network.min_partners)->capture_default_str();
  sim_cmd->add_option("--max-partners", cfg.network.max_partners)->capture_default_str();
  sim_cmd->add_option("--threshold", cfg.network.close_threshold, "close threshold t")
      ->capture_default_str();
  sim_cmd->add_option("--threshold2", cfg.network.nonclose_threshold, "non-close threshold t2")
      ->capture_default_str();
  sim_cmd->add_option("--threads", cfg.threads, "worker threads, 0 = all cores")
      ->capture_default_str();
  sim_cmd->add_option("--rows", rows_path, "per-replication CSV output");
  sim_flags.estimand = "basic-network";
  add_common(sim_cmd, sim_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*analyze_cmd) {
      warn_floor(an_flags);
      paths.units = units;
      paths.design = design;
      if (!edges.empty()) paths.edges = edges;
      if (!thresholds.empty()) paths.thresholds = thresholds;
      Experiment ex = load_experiment(paths);

      const Estimand est = parse_estimand(an_flags.estimand);
      if (requires_network(est) && !ex.network) {
        throw ConfigError("estimand " + an_flags.estimand + " needs --edges");
      }
      EstimandSpec spec{est, ex.network};
      const std::size_t n = ex.data.size();
      const DesignContext ctx(ex.design, ExposureModel(spec, n), ProbabilityOptions{});
      const Observation obs = observe(ctx, std::move(ex.data));

      InferenceOptions opts;
      opts.alpha = an_flags.alpha;
      opts.backend = make_backend(an_flags);
      opts.budget = make_budget(an_flags);
      opts.use_variance_floor = !an_flags.no_floor;
      const BoundReport report = analyze(ctx, obs, opts);

      ReportContext rc{{"units", units}, {"design", design}, {"edges", edges},
                       {"thresholds", thresholds}, {"seed", std::to_string(an_flags.seed)}};
      write_report(an_flags, report, rc);
      if (an_flags.out.empty()) print_summary(std::cerr, report);
    } else {
      warn_floor(sim_flags);
      cfg.estimand = parse_estimand(sim_flags.estimand);
      cfg.alpha = sim_flags.alpha;
      cfg.backend = make_backend(sim_flags);
      cfg.budget = make_budget(sim_flags);
      cfg.use_variance_floor = !sim_flags.no_floor;
      cfg.seed = sim_flags.seed;
      cfg.scales = {scales[0], scales[1], scales[2]};
      const SimulationResult result = run_replications(cfg);
      if (!rows_path.empty()) {
        std::ofstream rows(rows_path);
        if (!rows) throw ConfigError("cannot write " + rows_path);
        write_replication_rows(rows, result.rows);
      }
      write_report(sim_flags, result, {});
      if (sim_flags.out.empty()) print_summary(std::cerr, result);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
