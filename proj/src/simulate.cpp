#include "ifbound/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "ifbound/errors.hpp"
#include "ifbound/numeric.hpp"

namespace ifbound {

void OutcomeModelParams::validate() const {
  const std::size_t n = u.size();
  if (a0.size() != n || a1.size() != n || a2.size() != n) {
    throw ConfigError("outcome model vectors have inconsistent lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(u[i] >= 0.0 && u[i] <= 1.0)) throw ConfigError("u must lie in [0,1]");
    if (!(a0[i] >= 0.0 && a1[i] >= 0.0 && a2[i] >= 0.0)) {
      throw ConfigError("outcome coefficients must be nonnegative");
    }
  }
}

void SimConfig::validate() const {
  if (n < 2) throw ConfigError("simulation needs at least 2 units");
  if (replications < 1) throw ConfigError("replications must be at least 1");
  if (!(scales.a0 >= 0.0 && scales.a1 >= 0.0 && scales.a2 >= 0.0)) {
    throw ConfigError("coefficient scales must be nonnegative");
  }
  if (network.min_partners < 0 || network.max_partners < network.min_partners) {
    throw ConfigError("invalid partner count range");
  }
  if (static_cast<std::size_t>(network.max_partners) >= n) {
    throw ConfigError("max partners must be below N");
  }
  if (network.close_threshold < 1 || network.nonclose_threshold < 1) {
    throw ConfigError("thresholds must be at least 1");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  if (!(treat_prob > 0.0 && treat_prob < 1.0)) {
    throw ConfigError("treatment probability must lie in (0,1)");
  }
  backend.validate();
}

NetworkSpec generate_network(std::size_t n, const NetworkLaw& law, std::mt19937_64& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::uniform_int_distribution<int> degree(law.min_partners, law.max_partners);
  std::uniform_int_distribution<std::size_t> other(0, n - 2);
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < n; ++i) {
    const int d = degree(rng);
    picked.clear();
    while (picked.size() < static_cast<std::size_t>(d)) {
      std::size_t j = other(rng);
      if (j >= i) ++j;  // skip self
      if (std::find(picked.begin(), picked.end(), j) == picked.end()) picked.push_back(j);
    }
    for (std::size_t j : picked) edges.emplace_back(i, j);
  }
  NetworkSpec net = NetworkSpec::from_edges(n, edges, true);
  for (std::size_t i = 0; i < n; ++i) {
    net.set_thresholds(i, law.close_threshold, law.nonclose_threshold);
  }
  return net;
}

OutcomeModelParams generate_model(const SimConfig& cfg, std::mt19937_64& rng) {
  OutcomeModelParams m;
  m.pooled = cfg.pooled_outcome();
  m.u.resize(cfg.n);
  m.a0.resize(cfg.n);
  m.a1.resize(cfg.n);
  m.a2.resize(cfg.n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    m.u[i] = unit(rng);
    m.a0[i] = cfg.scales.a0 * unit(rng);
    m.a1[i] = cfg.scales.a1 * unit(rng);
    m.a2[i] = cfg.scales.a2 * unit(rng);
  }
  return m;
}

namespace {

std::size_t pooled_count_size(const NetworkSpec& net, std::size_t i) {
  return net.close[i].size() - 1 + net.nonclose[i].size();
}

bool outcome(const OutcomeModelParams& p, std::size_t i, int x, int w) {
  return p.u[i] <= p.a0[i] + p.a1[i] * x + p.a2[i] * w;
}

}  // namespace

Assignment compute_pooled_W(std::span<const std::uint8_t> x, const NetworkSpec& network) {
  Assignment out(network.n, 0);
  for (std::size_t i = 0; i < network.n; ++i) {
    int count = 0;
    for (std::size_t j : network.close[i]) {
      if (j != i) count += x[j];
    }
    for (std::size_t j : network.nonclose[i]) count += x[j];
    out[i] = count >= network.t[i] ? 1 : 0;
  }
  return out;
}

Assignment simulate_outcomes(const OutcomeModelParams& params, const NetworkSpec& network,
                             std::span<const std::uint8_t> x) {
  if (x.size() != params.size() || network.n != params.size()) {
    throw ConfigError("assignment, network and outcome model sizes differ");
  }
  const Assignment w = params.pooled ? compute_pooled_W(x, network) : compute_W(x, network);
  Assignment y(params.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = outcome(params, i, x[i], w[i]) ? 1 : 0;
  return y;
}

GroundTruth ground_truth(const OutcomeModelParams& params, const NetworkSpec& network,
                         Estimand estimand) {
  const std::size_t n = params.size();
  GroundTruth g;
  g.phi_star.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const int t = network.t[i];
    const std::size_t count_size =
        params.pooled ? pooled_count_size(network, i) : network.close[i].size() - 1;
    const bool w0 = t >= 1;
    const bool w1 = count_size >= static_cast<std::size_t>(std::max(t, 0));

    // Y_i as a function of own treatment, over the reachable w values.
    auto constant_in_w = [&](int x) {
      if (!(w0 && w1)) return true;
      return outcome(params, i, x, 0) == outcome(params, i, x, 1);
    };
    auto constant_over = [&](std::initializer_list<int> xs) {
      bool have = false;
      bool value = false;
      for (int x : xs) {
        for (int w = 0; w <= 1; ++w) {
          if ((w == 0 && !w0) || (w == 1 && !w1)) continue;
          const bool y = outcome(params, i, x, w);
          if (have && y != value) return false;
          have = true;
          value = y;
        }
      }
      return true;
    };

    bool ok = true;
    switch (estimand) {
      case Estimand::basic:
      case Estimand::basic_network:
        ok = constant_over({0, 1});
        break;
      case Estimand::indirect:
        ok = constant_in_w(0) && constant_in_w(1);
        break;
      case Estimand::control:
        ok = constant_over({0});
        break;
      case Estimand::treated:
        ok = constant_over({1});
        break;
      case Estimand::nonneighbors: {
        if (!params.pooled) break;  // W reads η only
        // X_η fixed leaves c1 = count over η \ {i}; X_η2 moves the pooled count
        // over [c1, c1 + |η2|]. W̄ flips iff c1 < t <= c1 + |η2|.
        const long n1 = static_cast<long>(network.close[i].size()) - 1;
        const long n2 = static_cast<long>(network.nonclose[i].size());
        const long lo = std::max(0L, static_cast<long>(t) - n2);
        const long hi = std::min(n1, static_cast<long>(t) - 1);
        if (n2 >= 1 && lo <= hi) {
          ok = outcome(params, i, 0, 0) == outcome(params, i, 0, 1) &&
               outcome(params, i, 1, 0) == outcome(params, i, 1, 1);
        }
        break;
      }
    }
    g.phi_star[i] = ok ? 1 : 0;
  }
  std::size_t unaffected = 0;
  for (auto v : g.phi_star) unaffected += v;
  g.tau = n - unaffected;
  return g;
}

ReplicationRow run_replication(const SimConfig& cfg, std::size_t rep) {
  const auto start = std::chrono::steady_clock::now();
  ReplicationRow row;
  row.rep = rep;
  std::mt19937_64 rng(substream_seed(cfg.seed, rep, 0));
  const NetworkSpec network = generate_network(cfg.n, cfg.network, rng);
  const OutcomeModelParams params = generate_model(cfg, rng);
  const GroundTruth truth = ground_truth(params, network, cfg.estimand);
  row.tau_true = static_cast<double>(truth.tau);

  const DesignSpec design = DesignSpec::uniform(cfg.n, cfg.treat_prob);
  std::bernoulli_distribution coin(cfg.treat_prob);
  ObservedData data;
  data.x.resize(cfg.n);
  for (auto& xi : data.x) xi = coin(rng) ? 1 : 0;
  data.y = simulate_outcomes(params, network, data.x);

  try {
    EstimandSpec spec{cfg.estimand, network};
    const DesignContext ctx(design, ExposureModel(spec, cfg.n), ProbabilityOptions{});
    const Observation obs = observe(ctx, data);
    InferenceOptions opts;
    opts.alpha = cfg.alpha;
    opts.backend = cfg.backend;
    opts.backend.seed = substream_seed(cfg.seed, rep, 1);
    opts.budget = cfg.budget;
    opts.use_variance_floor = cfg.use_variance_floor;
    const BoundReport report = analyze(ctx, obs, opts);
    row.tau_hat = report.tau_hat;
    row.ci_lower = report.ci_lower;
    row.status_k1 = std::string(to_string(report.per_k[0].solve.status));
    row.status_k2 = std::string(to_string(report.per_k[1].solve.status));
  } catch (const DegenerateArmError& e) {
    row.failed = true;
    row.error = e.what();
  } catch (const PositivityError& e) {
    row.failed = true;
    row.error = e.what();
  } catch (const ResourceError& e) {
    row.failed = true;
    row.error = e.what();
  }
  if (row.failed) {
    row.tau_hat = std::nan("");
    row.ci_lower = std::nan("");
    row.status_k1 = row.status_k2 = "error";
  }
  row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
  return row;
}

ReplicationSummary summarize(const std::vector<ReplicationRow>& rows, std::size_t n, double alpha) {
  ReplicationSummary s;
  s.n = n;
  s.alpha = alpha;
  s.replications = rows.size();
  const double big_n = static_cast<double>(n);
  KahanSum actual, bias, sq, covered, width;
  std::size_t ok = 0;
  for (const auto& r : rows) {
    if (r.failed) {
      ++s.failures;
      continue;
    }
    ++ok;
    const double err = (r.tau_true - r.tau_hat) / big_n;
    actual += r.tau_true / big_n;
    bias += err;
    sq += err * err;
    covered += r.ci_lower <= r.tau_true ? 1.0 : 0.0;
    width += (r.tau_hat - r.ci_lower) / big_n;
  }
  if (ok == 0) return s;
  const double m = static_cast<double>(ok);
  s.actual_value_fraction = actual.value() / m;
  s.bias = bias.value() / m;
  s.rmse = std::sqrt(sq.value() / m);
  s.coverage = covered.value() / m;
  s.mean_width = width.value() / m;
  return s;
}

SimulationResult run_replications(const SimConfig& cfg) {
  cfg.validate();
  SimulationResult result;
  result.config = cfg;
  result.rows.resize(cfg.replications);

  std::size_t workers = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, cfg.replications);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= cfg.replications || failed.load()) return;
      try {
        result.rows[r] = run_replication(cfg, r);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  result.summary = summarize(result.rows, cfg.n, cfg.alpha);
  return result;
}

}  // namespace ifbound
