#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ifbound/exposure.hpp"

namespace ifbound {

/// Independent Bernoulli design: p[i] = P(X_i = 1).
struct DesignSpec {
  std::vector<double> p;

  static DesignSpec uniform(std::size_t n, double prob);

  std::size_t size() const { return p.size(); }
  /// min over units of min(p_i, 1 - p_i).
  double p_min() const;
  /// Rejects any p_i outside (0, 1) and length mismatches.
  void validate(std::size_t n) const;

  /// Probability of the given values on the given units.
  double probability_of(std::span<const std::size_t> units,
                        std::span<const std::uint8_t> values) const;
};

/// P(sum of independent Bernoulli(probs) >= threshold), O(n * threshold).
double poisson_binomial_tail(std::span<const double> probs, std::size_t threshold);
/// Full pmf of the sum, length n + 1.
std::vector<double> poisson_binomial_pmf(std::span<const double> probs);

/// All 2^|members| assignments of a unit subset with their product weights.
/// Assignment index m sets member k to bit k of m.
struct LocalAssignmentSpace {
  UnitSet members;
  std::vector<double> weights;

  static LocalAssignmentSpace build(UnitSet members, const DesignSpec& design,
                                    std::size_t limit);
};

/// Γ_i for the configured estimand (minimal dependency neighborhood).
UnitSet compute_gamma(const EstimandSpec& estimand, std::size_t n, std::size_t i);

/// d_max: max of |Γ_i| and of the number of Γ_j that contain a unit.
std::size_t max_dependency_degree(const ExposureModel& model);

enum class ProbabilityMethod {
  structured,  // enumerate own/T units, Poisson-binomial DP for counts
  enumerate,   // brute force over Γ_i (∪ Γ_j)
};

struct ProbabilityOptions {
  ProbabilityMethod method = ProbabilityMethod::structured;
  std::size_t enumeration_limit = 24;
};

/// Index helper for Z̄ ∈ {-1, 0, 1}.
constexpr std::size_t zslot(int zbar) { return static_cast<std::size_t>(zbar + 1); }

/// Conditional distribution of Z̄_i given T_i = t.
struct MarginalExposure {
  std::array<double, 3> prob{};  // indexed by zslot
  double p_t = 0.0;              // P(T_i = t)

  double operator()(int zbar) const { return prob[zslot(zbar)]; }
};

/// Joint distribution of (Z̄_i, Z̄_j) given T_i = t_i, T_j = t_j.
struct JointExposure {
  std::array<std::array<double, 3>, 3> prob{};  // [zslot(a)][zslot(b)]
  double p_ti = 0.0;
  double p_tj = 0.0;
  double p_titj = 0.0;  // 0 is legal: conditioning event impossible

  double operator()(int a, int b) const { return prob[zslot(a)][zslot(b)]; }
};

/// Design + exposure model: every exact probability query lives here.
///
/// Queries are const and touch no shared mutable state, so one context can
/// be used from many threads.
class DesignContext {
 public:
  DesignContext(DesignSpec design, ExposureModel model, ProbabilityOptions options = {});

  const DesignSpec& design() const { return design_; }
  const ExposureModel& model() const { return model_; }
  const ProbabilityOptions& options() const { return options_; }
  std::size_t size() const { return design_.size(); }

  double t_probability(std::size_t i, std::uint64_t t) const;
  MarginalExposure marginal(std::size_t i, std::uint64_t t) const;
  /// P(Z̄_i = a | T_i = t). Throws SupportError if t is not a value of T_i.
  double marginal_exposure_prob(std::size_t i, std::uint64_t t, int a) const;
  JointExposure joint(std::size_t i, std::uint64_t ti, std::size_t j, std::uint64_t tj) const;

  MarginalExposure marginal_enumerated(std::size_t i, std::uint64_t t) const;
  JointExposure joint_enumerated(std::size_t i, std::uint64_t ti, std::size_t j,
                                 std::uint64_t tj) const;
  MarginalExposure marginal_structured(std::size_t i, std::uint64_t t) const;
  JointExposure joint_structured(std::size_t i, std::uint64_t ti, std::size_t j,
                                 std::uint64_t tj) const;

  bool gammas_overlap(std::size_t i, std::size_t j) const;

 private:
  void check_support(std::size_t i, std::uint64_t t) const;

  DesignSpec design_;
  ExposureModel model_;
  ProbabilityOptions options_;
};

}  // namespace ifbound
