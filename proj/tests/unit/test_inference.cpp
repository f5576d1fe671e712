#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ifbound/errors.hpp"
#include "ifbound/inference.hpp"
#include "ifbound/simulate.hpp"
#include "oracle.hpp"

using namespace ifbound;

namespace {

ObservedData worked_example() {
  ObservedData d;
  for (int i = 0; i < 100; ++i) {
    d.x.push_back(i < 50 ? 1 : 0);
    d.y.push_back((i < 40 || (i >= 50 && i < 70)) ? 1 : 0);
  }
  return d;
}

DesignContext basic_ctx(std::size_t n, double p = 0.5) {
  return DesignContext(DesignSpec::uniform(n, p), ExposureModel({Estimand::basic, std::nullopt}, n));
}

// Simulated experiment from the outcome model on a random network.
struct Instance {
  NetworkSpec net;
  ObservedData data;
};

Instance simulated(std::size_t n, std::mt19937_64& rng) {
  SimConfig cfg;
  cfg.n = n;
  Instance inst;
  inst.net = generate_network(n, cfg.network, rng);
  const auto params = generate_model(cfg, rng);
  for (std::size_t i = 0; i < n; ++i) inst.data.x.push_back(std::bernoulli_distribution(0.5)(rng));
  inst.data.y = simulate_outcomes(params, inst.net, inst.data.x);
  return inst;
}

}  // namespace

TEST(PointEstimate, WorkedExample) {
  const auto ctx = basic_ctx(100);
  const Observation obs = observe(ctx, worked_example());
  EXPECT_EQ(point_estimate(obs), 40.0);
}

TEST(PointEstimate, EqualMeansGiveZero) {
  const auto ctx = basic_ctx(4);
  const Observation obs = observe(ctx, ObservedData{{1, 0, 1, 0}, {1, 1, 0, 0}});
  EXPECT_EQ(point_estimate(obs), 0.0);
}

TEST(PointEstimate, EqualsHajekContrast) {
  std::mt19937_64 rng(61);
  int done = 0;
  for (int trial = 0; trial < 50 && done < 20; ++trial) {
    const auto inst = simulated(8, rng);
    for (Estimand e : {Estimand::basic, Estimand::indirect, Estimand::treated}) {
      const DesignContext ctx(DesignSpec::uniform(8, 0.5), ExposureModel({e, inst.net}, 8));
      const Observation obs = observe(ctx, inst.data);
      try {
        EXPECT_NEAR(point_estimate(obs), tau_contrast(obs).tau_hat, 1e-12);
        ++done;
      } catch (const DegenerateArmError&) {
      }
    }
  }
  EXPECT_GE(done, 20);
}

TEST(Analyze, WorkedExampleBounds) {
  const auto ctx = basic_ctx(100);
  const Observation obs = observe(ctx, worked_example());
  const BoundReport r = analyze(ctx, obs, InferenceOptions{});
  EXPECT_EQ(r.tau_hat, 40.0);
  EXPECT_DOUBLE_EQ(r.tau_hat_fraction, 0.4);
  EXPECT_EQ(r.per_k[1].point_value, 60.0);
  EXPECT_GE(r.ci_lower, 0.0);
  EXPECT_LE(r.ci_lower, r.tau_hat);
  EXPECT_NEAR(r.z, 1.959963984540054, 1e-12);
}

TEST(Analyze, ZeroCriticalValueCollapsesToPointEstimate) {
  const auto ctx = basic_ctx(100);
  const Observation obs = observe(ctx, worked_example());
  InferenceOptions opts;
  opts.z_override = 0.0;
  const BoundReport r = analyze(ctx, obs, opts);
  EXPECT_NEAR(r.ci_lower, r.tau_hat, 1e-9);
}

TEST(Analyze, HugeVarianceClampsAtZero) {
  // a handful of units: the floor dominates and the bound hits zero
  const auto ctx = basic_ctx(6);
  const Observation obs = observe(ctx, ObservedData{{1, 1, 1, 0, 0, 0}, {1, 1, 1, 0, 0, 0}});
  const BoundReport r = analyze(ctx, obs, InferenceOptions{});
  EXPECT_EQ(r.tau_hat, 6.0);
  EXPECT_EQ(r.ci_lower, 0.0);
}

TEST(Analyze, BranchAndBoundMatchesExhaustiveN14) {
  std::mt19937_64 rng(62);
  int done = 0;
  for (int trial = 0; trial < 20 && done < 5; ++trial) {
    const auto inst = simulated(14, rng);
    const auto ctx = basic_ctx(14);
    const Observation obs = observe(ctx, inst.data);
    InferenceOptions opts;
    opts.budget.gap_tolerance = 0.0;
    BoundReport r;
    try {
      r = analyze(ctx, obs, opts);
    } catch (const DegenerateArmError&) {
      continue;
    }
    MomentEvaluator ev(ctx, opts.backend);
    double best = INFINITY;
    for (int k = 1; k <= 2; ++k) {
      QuadraticSpec spec = build_Q(k, obs, ev, r.z);
      BinaryProgram prog{spec.v, spec.q, r.z, variance_floor(14, 0.05)};
      best = std::min(best, solve_exact(prog).incumbent_value);
    }
    const double exact_ci = std::clamp(14.0 - best, 0.0, r.tau_hat);
    EXPECT_NEAR(r.ci_lower, exact_ci, 1e-9);
    ++done;
  }
  EXPECT_GE(done, 5);
}

TEST(Analyze, OrderingAndAlphaMonotonicity) {
  std::mt19937_64 rng(63);
  int done = 0;
  for (int trial = 0; trial < 300 && done < 200; ++trial) {
    const std::size_t n = 30 + trial % 40;
    const auto inst = simulated(n, rng);
    const Estimand e = trial % 2 ? Estimand::basic : Estimand::basic_network;
    const DesignContext ctx(DesignSpec::uniform(n, 0.5), ExposureModel({e, inst.net}, n));
    const Observation obs = observe(ctx, inst.data);
    InferenceOptions loose;
    loose.alpha = 0.2;
    InferenceOptions tight;
    tight.alpha = 0.05;
    tight.use_variance_floor = loose.use_variance_floor = false;
    try {
      const auto a = analyze(ctx, obs, loose);
      const auto b = analyze(ctx, obs, tight);
      ASSERT_LE(0.0, b.ci_lower);
      ASSERT_LE(b.ci_lower, b.tau_hat);
      ASSERT_LE(b.tau_hat, static_cast<double>(n));
      ASSERT_LE(b.ci_lower, a.ci_lower + 1e-9);
      ++done;
    } catch (const DegenerateArmError&) {
    }
  }
  EXPECT_GE(done, 200);
}

TEST(Analyze, BudgetExhaustedStillUsesUpperBound) {
  std::mt19937_64 rng(64);
  const auto inst = simulated(80, rng);
  const DesignContext ctx(DesignSpec::uniform(80, 0.5),
                          ExposureModel({Estimand::basic_network, inst.net}, 80));
  const Observation obs = observe(ctx, inst.data);
  InferenceOptions opts;
  opts.budget.max_nodes = 1;
  const auto r = analyze(ctx, obs, opts);
  const auto full = analyze(ctx, obs, InferenceOptions{});
  for (int k = 0; k < 2; ++k) {
    EXPECT_GE(r.per_k[k].solve.upper_bound, full.per_k[k].solve.incumbent_value);
  }
  EXPECT_LE(r.ci_lower, full.ci_lower + 1e-9);
}
