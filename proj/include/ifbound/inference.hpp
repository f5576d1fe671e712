#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include "ifbound/design.hpp"
#include "ifbound/estimators.hpp"
#include "ifbound/optimizer.hpp"
#include "ifbound/variance.hpp"

namespace ifbound {

struct InferenceOptions {
  double alpha = 0.05;
  MomentBackend backend;
  SolveBudget budget;
  bool use_variance_floor = true;
  /// Overrides z_{1-α/2}; z = 0 collapses the bound onto the point estimate.
  std::optional<double> z_override;

  void validate() const;
};

/// One k ∈ {1,2} branch of the bound.
struct BranchReport {
  int k = 1;
  double point_value = 0.0;  // max_φ Φ̂_k^Haj(φ) = Σ v_i
  double variance_floor = 0.0;
  std::size_t q_pairs = 0;
  std::size_t excluded_pairs = 0;
  SolveResult solve;
};

struct BoundReport {
  std::size_t n = 0;
  Estimand estimand = Estimand::basic;
  double alpha = 0.05;
  double z = 0.0;
  double delta_hajek = 0.0;
  double tau_hat = 0.0;
  double tau_hat_fraction = 0.0;
  double ci_lower = 0.0;
  double ci_lower_fraction = 0.0;
  std::array<BranchReport, 2> per_k;
  InferenceOptions settings;
};

/// τ̂ = N - min_k Σ_i v_i^(k); the all-ones hypothesis maximizes Φ̂_k^Haj since v ≥ 0.
double point_estimate(const Observation& obs);

BoundReport analyze(const Observation& obs, MomentEvaluator& moments,
                    const InferenceOptions& options);
/// Builds a fresh moment evaluator for the context.
BoundReport analyze(const DesignContext& ctx, const Observation& obs,
                    const InferenceOptions& options);

double lower_confidence_bound(const DesignContext& ctx, const Observation& obs,
                              const InferenceOptions& options);

}  // namespace ifbound
