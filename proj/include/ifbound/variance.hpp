#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "ifbound/design.hpp"
#include "ifbound/estimators.hpp"
#include "ifbound/sym_matrix.hpp"

namespace ifbound {

enum class BackendMode {
  linearized,   // N / N̂_a replaced by 1
  monte_carlo,  // conditional moments averaged over design replications
};

std::string_view to_string(BackendMode m);
BackendMode parse_backend(std::string_view name);

struct MomentBackend {
  BackendMode mode = BackendMode::linearized;
  std::size_t replications = 10000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Terms of one (i, j) summand of V_k: E[v_i|T_i], E[v_j|T_j], E[v_i v_j|T_i,T_j]
/// and the sampling probability P(Z̄_i = Y_ki, Z̄_j = Y_kj | T_i, T_j).
struct PairMoments {
  double mean_i = 0.0;
  double mean_j = 0.0;
  double mean_ij = 0.0;
  double p_joint = 0.0;
  double p_ti = 0.0;
  double p_tj = 0.0;
  double p_titj = 0.0;

  /// C_ij = E[v_i v_j] - E[v_i] E[v_j] P(T_i) P(T_j) / P(T_i, T_j).
  double covariance() const { return mean_ij - mean_i * mean_j * p_ti * p_tj / p_titj; }
};

/// Evaluates the conditional moments E[v_i v_j | T_i, T_j] for one observed experiment
/// design. The Monte Carlo backend caches its design replications, so one
/// evaluator should be reused across observations of the same design.
class MomentEvaluator {
 public:
  MomentEvaluator(const DesignContext& ctx, MomentBackend backend);
  ~MomentEvaluator();
  MomentEvaluator(MomentEvaluator&&) noexcept;
  MomentEvaluator& operator=(MomentEvaluator&&) noexcept;

  const MomentBackend& backend() const { return backend_; }
  const DesignContext& context() const { return *ctx_; }

  /// Branch selection (a, b) = (Y_ki, Y_kj) with realized T values.
  /// Returns nullopt-like p_titj = 0 when the conditioning event is impossible.
  PairMoments conditional_moments(std::size_t i, int a, std::uint64_t ti, std::size_t j, int b,
                                  std::uint64_t tj);

  /// Convenience: branch and T values taken from the observation.
  PairMoments conditional_moments(std::size_t i, std::size_t j, int k, const Observation& obs);

 private:
  class MonteCarlo;

  const DesignContext* ctx_;
  MomentBackend backend_;
  std::unique_ptr<MonteCarlo> mc_;
};

/// The (v, Q, z) triple of one k-branch.
struct QuadraticSpec {
  std::vector<double> v;
  SymMatrix q;
  double z = 0.0;
  std::size_t excluded_pairs = 0;  // pairs dropped because P(T_i, T_j) = 0
};

/// Q_ij = C_ij · 1{Z̄_i = Y_ki, Z̄_j = Y_kj} / P(Z̄_i = Y_ki, Z̄_j = Y_kj | T_i, T_j).
QuadraticSpec build_Q(int k, const Observation& obs, MomentEvaluator& moments, double z);

/// max(V, 1.01 N^(2/3 + 0.01) / (z_{1-α/2}^2 · α / 2)).
double threshold_variance(double variance, std::size_t n, double alpha);
/// The floor term alone.
double variance_floor(std::size_t n, double alpha);

}  // namespace ifbound
