#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "ifbound/design.hpp"
#include "ifbound/exposure.hpp"

namespace ifbound {

/// Observed binary treatments and outcomes.
struct ObservedData {
  Assignment x;
  Assignment y;

  std::size_t size() const { return x.size(); }
  void validate() const;
};

/// Y_ki: Y_i for k = 1, 1 - Y_i for k = 2.
inline std::uint8_t estimator_outcome(int k, std::uint8_t y) {
  return k == 1 ? y : static_cast<std::uint8_t>(1 - y);
}

/// Per-unit exact propensities at the realized T_i.
struct UnitPropensities {
  std::vector<double> p0;   // P(Z̄_i = 0 | T_i)
  std::vector<double> p1;   // P(Z̄_i = 1 | T_i)
  std::vector<double> p_t;  // P(T_i)

  double at(std::size_t i, int a) const { return a == 1 ? p1[i] : p0[i]; }
};

/// Everything the estimators need about one observed experiment.
struct Observation {
  ObservedData data;
  ExposureRealization exposure;
  UnitPropensities propensities;

  std::size_t size() const { return data.size(); }
};

Observation observe(const DesignContext& ctx, ObservedData data);

struct HajekNormalizers {
  double n_hat0 = 0.0;
  double n_hat1 = 0.0;

  double at(int a) const { return a == 1 ? n_hat1 : n_hat0; }
};

/// N̂_a = Σ_{j: Z̄_j = a} 1 / P(Z̄_j = a | T_j). Throws DegenerateArmError on N̂_a = 0.
HajekNormalizers hajek_normalizers(const Observation& obs);

/// Normalizers without the degeneracy check (used by the Monte Carlo backend).
HajekNormalizers raw_hajek_normalizers(std::span<const std::int8_t> zbar,
                                       const UnitPropensities& props);

/// v_i = (N / N̂_{Y_ki}) · 1{Z̄_i = Y_ki} / P(Z̄_i = Y_ki | T_i); Φ̂_k^Haj(φ) = v·φ.
std::vector<double> phi_hat_vector(int k, const Observation& obs);
std::vector<double> phi_hat_vector(int k, const Observation& obs, const HajekNormalizers& nh);

/// Unnormalized Horvitz-Thompson Φ̂_k at a known φ*. Test and validation use only.
double phi_hat_ht(int k, const Observation& obs, std::span<const std::uint8_t> phi);

struct Contrast {
  double delta = 0.0;    // Hájek-weighted contrast Δ^Haj
  double tau_hat = 0.0;  // |Δ^Haj|
};

Contrast tau_contrast(const Observation& obs);

/// Compensated sum in ascending index order.
double ordered_sum(std::span<const double> values);

}  // namespace ifbound
