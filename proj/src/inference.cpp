#include "ifbound/inference.hpp"

#include <algorithm>
#include <cmath>

#include "ifbound/errors.hpp"
#include "ifbound/numeric.hpp"

namespace ifbound {

void InferenceOptions::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  if (z_override && !(*z_override >= 0.0)) throw ConfigError("z override must be nonnegative");
  backend.validate();
}

double point_estimate(const Observation& obs) {
  const HajekNormalizers nh = hajek_normalizers(obs);
  const double big_n = static_cast<double>(obs.size());
  const double s1 = ordered_sum(phi_hat_vector(1, obs, nh));
  const double s2 = ordered_sum(phi_hat_vector(2, obs, nh));
  return big_n - std::min(s1, s2);
}

BoundReport analyze(const Observation& obs, MomentEvaluator& moments,
                    const InferenceOptions& options) {
  options.validate();
  hajek_normalizers(obs);  // fail fast on a degenerate arm

  BoundReport report;
  report.n = obs.size();
  report.estimand = moments.context().model().estimand();
  report.alpha = options.alpha;
  report.z = options.z_override ? *options.z_override : normal_critical_value(options.alpha);
  report.settings = options;
  const double big_n = static_cast<double>(report.n);
  const double floor = options.use_variance_floor ? variance_floor(report.n, options.alpha) : 0.0;

  for (int k = 1; k <= 2; ++k) {
    QuadraticSpec spec = build_Q(k, obs, moments, report.z);
    BranchReport& br = report.per_k[static_cast<std::size_t>(k - 1)];
    br.k = k;
    br.point_value = ordered_sum(spec.v);
    br.variance_floor = floor;
    br.q_pairs = spec.q.pair_count();
    br.excluded_pairs = spec.excluded_pairs;
    BinaryProgram prog{std::move(spec.v), std::move(spec.q), report.z, floor};
    br.solve = solve_branch_bound(prog, options.budget);
  }

  const Contrast contrast = tau_contrast(obs);
  report.delta_hajek = contrast.delta;
  report.tau_hat = big_n - std::min(report.per_k[0].point_value, report.per_k[1].point_value);
  const double min_upper = std::min(report.per_k[0].solve.upper_bound, report.per_k[1].solve.upper_bound);
  report.ci_lower = std::clamp(big_n - min_upper, 0.0, report.tau_hat);
  report.tau_hat_fraction = report.tau_hat / big_n;
  report.ci_lower_fraction = report.ci_lower / big_n;
  return report;
}

BoundReport analyze(const DesignContext& ctx, const Observation& obs,
                    const InferenceOptions& options) {
  MomentEvaluator moments(ctx, options.backend);
  return analyze(obs, moments, options);
}

double lower_confidence_bound(const DesignContext& ctx, const Observation& obs,
                              const InferenceOptions& options) {
  return analyze(ctx, obs, options).ci_lower;
}

}  // namespace ifbound
