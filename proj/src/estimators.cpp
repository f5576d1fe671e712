#include "ifbound/estimators.hpp"

#include <cmath>
#include <string>

#include "ifbound/errors.hpp"
#include "ifbound/numeric.hpp"

namespace ifbound {

void ObservedData::validate() const {
  if (x.size() != y.size()) {
    throw ConfigError("treatment and outcome vectors differ in length");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 1 || y[i] > 1) {
      throw ConfigError("unit " + std::to_string(i) + ": treatment and outcome must be 0 or 1");
    }
  }
}

Observation observe(const DesignContext& ctx, ObservedData data) {
  data.validate();
  if (data.size() != ctx.size()) {
    throw ConfigError("observed data has " + std::to_string(data.size()) + " units, design has " +
                      std::to_string(ctx.size()));
  }
  Observation obs;
  obs.exposure = ctx.model().realize(data.x);
  const std::size_t n = data.size();
  obs.propensities.p0.resize(n);
  obs.propensities.p1.resize(n);
  obs.propensities.p_t.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const MarginalExposure m = ctx.marginal(i, obs.exposure.t_value[i]);
    obs.propensities.p0[i] = m(0);
    obs.propensities.p1[i] = m(1);
    obs.propensities.p_t[i] = m.p_t;
  }
  obs.data = std::move(data);
  return obs;
}

HajekNormalizers raw_hajek_normalizers(std::span<const std::int8_t> zbar,
                                       const UnitPropensities& props) {
  KahanSum n0;
  KahanSum n1;
  for (std::size_t j = 0; j < zbar.size(); ++j) {
    if (zbar[j] == 1) n1 += 1.0 / props.p1[j];
    if (zbar[j] == 0) n0 += 1.0 / props.p0[j];
  }
  return {n0.value(), n1.value()};
}

HajekNormalizers hajek_normalizers(const Observation& obs) {
  const HajekNormalizers nh = raw_hajek_normalizers(obs.exposure.zbar, obs.propensities);
  if (!(nh.n_hat0 > 0.0)) {
    throw DegenerateArmError("no unit realized exposure level 0 (N-hat_0 = 0)");
  }
  if (!(nh.n_hat1 > 0.0)) {
    throw DegenerateArmError("no unit realized exposure level 1 (N-hat_1 = 0)");
  }
  return nh;
}

std::vector<double> phi_hat_vector(int k, const Observation& obs) {
  return phi_hat_vector(k, obs, hajek_normalizers(obs));
}

std::vector<double> phi_hat_vector(int k, const Observation& obs, const HajekNormalizers& nh) {
  const std::size_t n = obs.size();
  const double big_n = static_cast<double>(n);
  std::vector<double> v(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int a = estimator_outcome(k, obs.data.y[i]);
    if (obs.exposure.zbar[i] != a) continue;
    const double prop = obs.propensities.at(i, a);
    if (!(prop > 0.0)) {
      throw PositivityError("unit " + std::to_string(i) +
                            " realized an exposure with zero propensity");
    }
    v[i] = (big_n / nh.at(a)) / prop;
  }
  return v;
}

double phi_hat_ht(int k, const Observation& obs, std::span<const std::uint8_t> phi) {
  KahanSum total;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (!phi[i]) continue;
    const int a = estimator_outcome(k, obs.data.y[i]);
    if (obs.exposure.zbar[i] == a) total += 1.0 / obs.propensities.at(i, a);
  }
  return total.value();
}

Contrast tau_contrast(const Observation& obs) {
  const HajekNormalizers nh = hajek_normalizers(obs);
  const double big_n = static_cast<double>(obs.size());
  KahanSum treated;
  KahanSum control;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (!obs.data.y[i]) continue;
    if (obs.exposure.zbar[i] == 1) treated += (big_n / nh.n_hat1) / obs.propensities.p1[i];
    if (obs.exposure.zbar[i] == 0) control += (big_n / nh.n_hat0) / obs.propensities.p0[i];
  }
  Contrast c;
  c.delta = treated.value() - control.value();
  c.tau_hat = std::abs(c.delta);
  return c;
}

double ordered_sum(std::span<const double> values) {
  KahanSum s;
  for (double v : values) s += v;
  return s.value();
}

}  // namespace ifbound
