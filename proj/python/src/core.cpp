#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ifbound/errors.hpp"
#include "ifbound/io.hpp"
#include "ifbound/numeric.hpp"

namespace py = pybind11;
using namespace ifbound;

namespace {

InferenceOptions make_options(double alpha, const std::string& backend, std::size_t mc_reps,
                              std::uint64_t seed, std::uint64_t node_budget,
                              bool variance_floor) {
  InferenceOptions o;
  o.alpha = alpha;
  o.backend.mode = parse_backend(backend);
  o.backend.replications = mc_reps;
  o.backend.seed = seed;
  o.budget.max_nodes = node_budget;
  o.use_variance_floor = variance_floor;
  o.validate();
  return o;
}

py::dict to_dict(const BoundReport& r) {
  py::dict d;
  d["n"] = r.n;
  d["estimand"] = std::string(to_string(r.estimand));
  d["alpha"] = r.alpha;
  d["z"] = r.z;
  d["delta_hajek"] = r.delta_hajek;
  d["tau_hat"] = r.tau_hat;
  d["tau_hat_fraction"] = r.tau_hat_fraction;
  d["ci_lower"] = r.ci_lower;
  d["ci_lower_fraction"] = r.ci_lower_fraction;
  py::list branches;
  for (const auto& b : r.per_k) {
    py::dict k;
    k["k"] = b.k;
    k["point_value"] = b.point_value;
    k["variance_floor"] = b.variance_floor;
    k["q_pairs"] = b.q_pairs;
    k["excluded_pairs"] = b.excluded_pairs;
    k["status"] = std::string(to_string(b.solve.status));
    k["upper_bound"] = b.solve.upper_bound;
    k["incumbent_value"] = b.solve.incumbent_value;
    k["gap"] = b.solve.gap;
    k["nodes_explored"] = b.solve.nodes_explored;
    branches.append(k);
  }
  d["per_k"] = branches;
  return d;
}

BoundReport run(const DesignSpec& design, const ObservedData& data,
                const std::optional<NetworkSpec>& network, const std::string& estimand,
                const InferenceOptions& opts) {
  const std::size_t n = data.size();
  design.validate(n);
  EstimandSpec spec{parse_estimand(estimand), network};
  const DesignContext ctx(design, ExposureModel(spec, n));
  const Observation obs = observe(ctx, data);
  return analyze(ctx, obs, opts);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lower confidence bounds on the number of units affected by a treatment.";

  auto base = py::register_exception<Error>(m, "IfboundError", PyExc_RuntimeError);
  auto config = py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DegenerateArmError>(m, "DegenerateArmError", base.ptr());
  py::register_exception<PositivityError>(m, "PositivityError", base.ptr());
  py::register_exception<ResourceError>(m, "ResourceError", base.ptr());
  (void)config;

  m.def(
      "analyze",
      [](std::vector<std::uint8_t> x, std::vector<std::uint8_t> y, std::vector<double> p,
         const std::string& estimand,
         std::optional<std::vector<std::pair<std::size_t, std::size_t>>> edges, double alpha,
         const std::string& backend, std::size_t mc_reps, std::uint64_t seed,
         std::uint64_t node_budget, bool variance_floor) {
        ObservedData data{std::move(x), std::move(y)};
        data.validate();
        std::optional<NetworkSpec> net;
        if (edges) net = NetworkSpec::from_edges(data.size(), *edges);
        const auto opts = make_options(alpha, backend, mc_reps, seed, node_budget, variance_floor);
        py::gil_scoped_release release;
        const BoundReport r = run(DesignSpec{std::move(p)}, data, net, estimand, opts);
        py::gil_scoped_acquire acquire;
        return to_dict(r);
      },
      py::arg("x"), py::arg("y"), py::arg("p"), py::arg("estimand") = "basic",
      py::arg("edges") = py::none(), py::arg("alpha") = 0.05, py::arg("backend") = "linearized",
      py::arg("mc_reps") = 10000, py::arg("seed") = 1,
      py::arg("node_budget") = SolveBudget{}.max_nodes, py::arg("variance_floor") = true,
      "Bound from in-memory arrays. edges are (src, dst) pairs placing dst in the close set of "
      "src; thresholds default to 1.");

  m.def(
      "analyze_files",
      [](const std::filesystem::path& units, const std::filesystem::path& design,
         std::optional<std::filesystem::path> edges,
         std::optional<std::filesystem::path> thresholds, const std::string& estimand,
         double alpha, const std::string& backend, std::size_t mc_reps, std::uint64_t seed,
         std::uint64_t node_budget, bool variance_floor) {
        const auto opts = make_options(alpha, backend, mc_reps, seed, node_budget, variance_floor);
        py::gil_scoped_release release;
        const Experiment ex = load_experiment({units, design, edges, thresholds});
        const BoundReport r = run(ex.design, ex.data, ex.network, estimand, opts);
        py::gil_scoped_acquire acquire;
        return to_dict(r);
      },
      py::arg("units"), py::arg("design"), py::arg("edges") = py::none(),
      py::arg("thresholds") = py::none(), py::arg("estimand") = "basic",
      py::arg("alpha") = 0.05, py::arg("backend") = "linearized", py::arg("mc_reps") = 10000,
      py::arg("seed") = 1, py::arg("node_budget") = SolveBudget{}.max_nodes,
      py::arg("variance_floor") = true);

  m.def(
      "simulate",
      [](std::size_t n, std::size_t reps, const std::string& estimand, std::uint64_t seed,
         double alpha, double treat_prob, std::size_t threads) {
        SimConfig cfg;
        cfg.n = n;
        cfg.replications = reps;
        cfg.estimand = parse_estimand(estimand);
        cfg.seed = seed;
        cfg.alpha = alpha;
        cfg.treat_prob = treat_prob;
        cfg.threads = threads;
        cfg.validate();
        SimulationResult res;
        {
          py::gil_scoped_release release;
          res = run_replications(cfg);
        }
        const auto& s = res.summary;
        py::dict d;
        d["n"] = s.n;
        d["replications"] = s.replications;
        d["failures"] = s.failures;
        d["alpha"] = s.alpha;
        d["actual_value_fraction"] = s.actual_value_fraction;
        d["bias"] = s.bias;
        d["rmse"] = s.rmse;
        d["coverage"] = s.coverage;
        d["mean_width"] = s.mean_width;
        py::list rows;
        for (const auto& r : res.rows) {
          py::dict row;
          row["rep"] = r.rep;
          row["tau_true"] = r.tau_true;
          row["tau_hat"] = r.tau_hat;
          row["ci_lower"] = r.ci_lower;
          row["failed"] = r.failed;
          rows.append(row);
        }
        d["rows"] = rows;
        return d;
      },
      py::arg("n") = 250, py::arg("reps") = 500, py::arg("estimand") = "basic-network",
      py::arg("seed") = 1, py::arg("alpha") = 0.05, py::arg("treat_prob") = 0.5,
      py::arg("threads") = 0);

  m.def("critical_value", &normal_critical_value, py::arg("alpha"));
  m.def("variance_floor", &variance_floor, py::arg("n"), py::arg("alpha"));
}
