#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ifbound/exposure.hpp"
#include "ifbound/inference.hpp"

namespace ifbound {

/// Coefficients α_m are drawn Uniform[0, scale_m].
struct CoefficientScales {
  double a0 = 0.4;
  double a1 = 0.5;
  double a2 = 0.5;
};

/// Each unit lists a uniform number of partners in [min_partners, max_partners].
struct NetworkLaw {
  int min_partners = 1;
  int max_partners = 5;
  int close_threshold = 1;
  int nonclose_threshold = 1;
};

/// Y_i = 1{u_i <= a0_i + a1_i X_i + a2_i W_i}, with W̄_i in place of W_i when pooled.
struct OutcomeModelParams {
  std::vector<double> u;
  std::vector<double> a0;
  std::vector<double> a1;
  std::vector<double> a2;
  bool pooled = false;

  std::size_t size() const { return u.size(); }
  void validate() const;
};

struct SimConfig {
  std::size_t n = 250;
  NetworkLaw network;
  CoefficientScales scales;
  Estimand estimand = Estimand::basic_network;
  std::size_t replications = 500;
  double alpha = 0.05;
  double treat_prob = 0.5;
  SolveBudget budget;
  MomentBackend backend;
  bool use_variance_floor = true;
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0: hardware concurrency

  /// The pooled-exposure outcome model is used for τ^nonneighbors.
  bool pooled_outcome() const { return estimand == Estimand::nonneighbors; }
  void validate() const;
};

NetworkSpec generate_network(std::size_t n, const NetworkLaw& law, std::mt19937_64& rng);
OutcomeModelParams generate_model(const SimConfig& cfg, std::mt19937_64& rng);

/// W̄_i: thresholded (t_i) count of treated units in (η_i ∪ η_i^(2)) \ {i}.
Assignment compute_pooled_W(std::span<const std::uint8_t> x, const NetworkSpec& network);
Assignment simulate_outcomes(const OutcomeModelParams& params, const NetworkSpec& network,
                             std::span<const std::uint8_t> x);

struct GroundTruth {
  Assignment phi_star;  // 1 = unit satisfies the estimand's exposure condition
  std::size_t tau = 0;  // N - Σ φ*
};

/// Exact φ* by case analysis over the reachable (X_i, W) grid of each unit.
GroundTruth ground_truth(const OutcomeModelParams& params, const NetworkSpec& network,
                         Estimand estimand);

struct ReplicationRow {
  std::size_t rep = 0;
  double tau_true = 0.0;
  double tau_hat = 0.0;
  double ci_lower = 0.0;
  std::string status_k1;
  std::string status_k2;
  double wall_ms = 0.0;
  bool failed = false;
  std::string error;
};

struct ReplicationSummary {
  std::size_t n = 0;
  std::size_t replications = 0;
  std::size_t failures = 0;
  double alpha = 0.05;
  double actual_value_fraction = 0.0;  // mean τ / N
  double bias = 0.0;                   // mean (τ - τ̂) / N; positive = conservative
  double rmse = 0.0;                   // sqrt(mean ((τ̂ - τ) / N)^2)
  double coverage = 0.0;               // fraction with ci_lower <= τ
  double mean_width = 0.0;             // mean (τ̂ - ci_lower) / N
};

struct SimulationResult {
  SimConfig config;
  ReplicationSummary summary;
  std::vector<ReplicationRow> rows;
};

/// One replication: network, model, assignment, inference, scoring.
ReplicationRow run_replication(const SimConfig& cfg, std::size_t rep);
ReplicationSummary summarize(const std::vector<ReplicationRow>& rows, std::size_t n, double alpha);
SimulationResult run_replications(const SimConfig& cfg);

}  // namespace ifbound
