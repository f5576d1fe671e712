#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "ifbound/errors.hpp"
#include "ifbound/estimators.hpp"
#include "ifbound/simulate.hpp"
#include "oracle.hpp"

using namespace ifbound;

namespace {

const Estimand kAll[] = {Estimand::basic,        Estimand::basic_network, Estimand::indirect,
                         Estimand::nonneighbors, Estimand::control,       Estimand::treated};

// 100 units, p = 0.5: 50 treated with 40 Y = 1, 50 controls with 20 Y = 1
ObservedData worked_example() {
  ObservedData d;
  for (int i = 0; i < 100; ++i) {
    d.x.push_back(i < 50 ? 1 : 0);
    d.y.push_back((i < 40 || (i >= 50 && i < 70)) ? 1 : 0);
  }
  return d;
}

DesignContext basic_ctx(std::vector<double> p) {
  const std::size_t n = p.size();
  return DesignContext(DesignSpec{std::move(p)}, ExposureModel({Estimand::basic, std::nullopt}, n));
}

// Hájek contrast straight from its definition, with exact propensities supplied by the oracle.
double oracle_delta(Estimand e, const NetworkSpec& net, const std::vector<double>& p,
                    const ObservedData& d) {
  const std::size_t n = p.size();
  double n_hat[2] = {0, 0};
  double sum_y[2] = {0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const auto ex = oracle::exposure(e, net, d.x, i);
    if (ex.zbar < 0) continue;
    const auto m = oracle::marginal(e, net, p, i, oracle::pack(ex.t));
    const double w = 1.0 / m.prob[ex.zbar + 1];
    n_hat[ex.zbar] += w;
    sum_y[ex.zbar] += w * d.y[i];
  }
  return static_cast<double>(n) * (sum_y[1] / n_hat[1] - sum_y[0] / n_hat[0]);
}

}  // namespace

TEST(HajekNormalizers, WorkedExample) {
  const Observation obs = observe(basic_ctx(std::vector<double>(100, 0.5)), worked_example());
  const HajekNormalizers nh = hajek_normalizers(obs);
  EXPECT_DOUBLE_EQ(nh.n_hat1, 100.0);
  EXPECT_DOUBLE_EQ(nh.n_hat0, 100.0);
}

TEST(HajekNormalizers, InversePropensitySum) {
  ObservedData d{{1, 1, 0}, {0, 1, 1}};
  const Observation obs = observe(basic_ctx({0.25, 0.5, 0.5}), d);
  EXPECT_DOUBLE_EQ(hajek_normalizers(obs).n_hat1, 6.0);
}

TEST(HajekNormalizers, EmptyArmThrows) {
  ObservedData d{{1, 1, 1}, {0, 1, 1}};
  const Observation obs = observe(basic_ctx({0.5, 0.5, 0.5}), d);
  EXPECT_THROW(hajek_normalizers(obs), DegenerateArmError);
}

TEST(PhiHat, WorkedExampleSums) {
  const Observation obs = observe(basic_ctx(std::vector<double>(100, 0.5)), worked_example());
  EXPECT_DOUBLE_EQ(ordered_sum(phi_hat_vector(2, obs)), 60.0);
  EXPECT_DOUBLE_EQ(ordered_sum(phi_hat_vector(1, obs)), 140.0);
  const Contrast c = tau_contrast(obs);
  EXPECT_DOUBLE_EQ(c.tau_hat, 40.0);
  EXPECT_DOUBLE_EQ(c.delta, 40.0);
}

TEST(PhiHat, ZeroOffBranch) {
  std::mt19937_64 rng(31);
  const std::size_t n = 9;
  const NetworkSpec net = oracle::random_network(n, rng);
  ObservedData d;
  for (std::size_t i = 0; i < n; ++i) {
    d.x.push_back(static_cast<std::uint8_t>(i % 2));
    d.y.push_back(static_cast<std::uint8_t>((i / 2) % 2));
  }
  for (Estimand e : {Estimand::control, Estimand::treated, Estimand::basic_network}) {
    const DesignContext ctx(DesignSpec::uniform(n, 0.5), ExposureModel({e, net}, n));
    const Observation obs = observe(ctx, d);
    if (obs.exposure.zbar.end() == std::find(obs.exposure.zbar.begin(), obs.exposure.zbar.end(), 0))
      continue;
    try {
      for (int k = 1; k <= 2; ++k) {
        const auto v = phi_hat_vector(k, obs);
        for (std::size_t i = 0; i < n; ++i) {
          ASSERT_GE(v[i], 0.0);
          if (obs.exposure.zbar[i] != estimator_outcome(k, d.y[i])) ASSERT_EQ(v[i], 0.0);
        }
      }
    } catch (const DegenerateArmError&) {
    }
  }
}

TEST(TauContrast, EqualMeansGiveZero) {
  ObservedData d{{1, 1, 0, 0}, {1, 0, 1, 0}};
  const Observation obs = observe(basic_ctx({0.5, 0.5, 0.5, 0.5}), d);
  EXPECT_EQ(tau_contrast(obs).tau_hat, 0.0);
}

TEST(TauContrast, MatchesIndependentOracle) {
  std::mt19937_64 rng(32);
  int done = 0;
  for (int trial = 0; done < 60 && trial < 400; ++trial) {
    const std::size_t n = 6 + trial % 5;
    const Estimand e = kAll[trial % 6];
    const NetworkSpec net = oracle::random_network(n, rng, 0.3, 2);
    const auto p = oracle::random_probs(n, rng);
    ObservedData d;
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < n; ++i) {
      d.x.push_back(coin(rng));
      d.y.push_back(coin(rng));
    }
    const DesignContext ctx(DesignSpec{p}, ExposureModel({e, net}, n));
    const Observation obs = observe(ctx, d);
    Contrast c;
    try {
      c = tau_contrast(obs);
    } catch (const DegenerateArmError&) {
      continue;
    }
    const double want = oracle_delta(e, net, p, d);
    ASSERT_NEAR(c.delta, want, 1e-9 * n);
    // N − min_k Σ v equals |Δ| (all-ones maximizes since v ≥ 0)
    const double s1 = ordered_sum(phi_hat_vector(1, obs));
    const double s2 = ordered_sum(phi_hat_vector(2, obs));
    ASSERT_NEAR(static_cast<double>(n) - std::min(s1, s2), std::abs(want), 1e-9);
    ++done;
  }
  EXPECT_GE(done, 60);
}

TEST(PhiHatHT, UnbiasedOverExactEnumeration) {
  // Exact expectation over all 2^N assignments equals Φ(φ*) for an arbitrary outcome rule.
  std::mt19937_64 rng(33);
  for (Estimand e : kAll) {
    const std::size_t n = 8;
    const NetworkSpec net = oracle::random_network(n, rng, 0.3, 1);
    const auto p = oracle::random_probs(n, rng);
    OutcomeModelParams params;
    params.pooled = e == Estimand::nonneighbors;
    std::uniform_real_distribution<double> u(0, 1);
    for (std::size_t i = 0; i < n; ++i) {
      params.u.push_back(u(rng));
      params.a0.push_back(0.3 * u(rng));
      params.a1.push_back(0.5 * u(rng));
      params.a2.push_back(0.5 * u(rng));
    }
    const auto phi = oracle::ground_truth(params, net, e);
    const DesignContext ctx(DesignSpec{p}, ExposureModel({e, net}, n));
    for (int k = 1; k <= 2; ++k) {
      double expectation = 0.0;
      for (std::uint64_t m = 0; m < (1ULL << n); ++m) {
        const auto x = oracle::unpack(m, n);
        ObservedData d{x, simulate_outcomes(params, net, x)};
        expectation += oracle::weight(p, x) * phi_hat_ht(k, observe(ctx, d), phi);
      }
      // Unaffected units have Y_k fixed at c(t) on R_i ∩ {T_i = t}; each contributes
      // P(T_i = t) whenever level c(t) has positive conditional probability.
      double truth = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!phi[i]) continue;
        std::map<std::uint64_t, int> level;
        for (std::uint64_t m = 0; m < (1ULL << n); ++m) {
          const auto x = oracle::unpack(m, n);
          const auto ex = oracle::exposure(e, net, x, i);
          if (!ex.in_r) continue;
          level[oracle::pack(ex.t)] = estimator_outcome(k, simulate_outcomes(params, net, x)[i]);
        }
        for (const auto& [t, c] : level) {
          const auto mg = oracle::marginal(e, net, p, i, t);
          if (mg.prob[c + 1] > 0) truth += mg.p_t;
        }
      }
      EXPECT_NEAR(expectation, truth, 1e-9) << to_string(e) << " k=" << k;
    }
  }
}
