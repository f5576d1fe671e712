#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ifbound/errors.hpp"
#include "ifbound/optimizer.hpp"
#include "ifbound/sym_matrix.hpp"

using namespace ifbound;

namespace {

BinaryProgram random_program(std::size_t n, std::mt19937_64& rng, double density = 0.5,
                             double floor = 0.0) {
  std::uniform_real_distribution<double> uv(0.0, 3.0);
  std::uniform_real_distribution<double> uq(-2.0, 2.0);
  std::bernoulli_distribution keep(density);
  BinaryProgram prog;
  prog.v.resize(n);
  for (double& x : prog.v) x = uv(rng);
  prog.q = SymMatrix(n);
  for (std::size_t i = 0; i < n; ++i) {
    prog.q.set_diagonal(i, uq(rng) + 1.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (keep(rng)) prog.q.add_pair(i, j, uq(rng));
    }
  }
  prog.q.finalize();
  prog.z = 1.959963984540054;
  prog.variance_floor = floor;
  return prog;
}

// Objective straight from the definition, dense arithmetic.
double brute_objective(const BinaryProgram& prog, const std::vector<std::uint8_t>& phi) {
  double lin = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (!phi[i]) continue;
    lin += prog.v[i];
    for (std::size_t j = 0; j < phi.size(); ++j) {
      if (phi[j]) quad += prog.q.at(i, j);
    }
  }
  return lin + prog.z * std::sqrt(std::max(quad, prog.variance_floor));
}

}  // namespace

TEST(SymMatrix, StoresBothDirections) {
  SymMatrix q(4);
  q.set_diagonal(0, 2.0);
  q.add_pair(0, 2, 1.5);
  q.add_pair(2, 0, 0.5);  // merged with the entry above
  q.add_pair(1, 3, -1.0);
  q.finalize();
  EXPECT_EQ(q.at(0, 2), 2.0);
  EXPECT_EQ(q.at(2, 0), 2.0);
  EXPECT_EQ(q.at(3, 1), -1.0);
  EXPECT_EQ(q.at(1, 2), 0.0);
  EXPECT_EQ(q.pair_count(), 2u);
  EXPECT_TRUE(q.is_symmetric(0.0));
  const std::vector<std::uint8_t> phi{1, 1, 1, 0};
  EXPECT_DOUBLE_EQ(q.quadratic_form(phi), 2.0 + 2 * 2.0);
  EXPECT_DOUBLE_EQ(q.abs_sum(), 2.0 + 2 * 2.0 + 2 * 1.0);
}

TEST(SymMatrix, FromDense) {
  const SymMatrix q = SymMatrix::from_dense({{1, 2, 0}, {2, 3, 4}, {0, 4, 5}});
  EXPECT_EQ(q.pair_count(), 2u);
  EXPECT_EQ(q.at(1, 2), 4.0);
  EXPECT_EQ(q.diagonal(2), 5.0);
}

TEST(EvaluateObjective, Examples) {
  BinaryProgram prog;
  prog.v = {1.0, 2.0, 0.5, 4.0};
  prog.q = SymMatrix(4);
  prog.z = 1.96;
  const std::vector<std::uint8_t> some{1, 0, 1, 1};
  EXPECT_DOUBLE_EQ(evaluate_objective(prog, some), 5.5);
  EXPECT_EQ(evaluate_objective(prog, std::vector<std::uint8_t>(4, 0)), 0.0);

  BinaryProgram id;
  id.v.assign(4, 0.0);
  id.q = SymMatrix::from_dense({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}});
  id.z = 1.96;
  EXPECT_NEAR(evaluate_objective(id, std::vector<std::uint8_t>(4, 1)), 3.92, 1e-15);
}

TEST(EvaluateObjective, NegativeFormClampedToZero) {
  BinaryProgram prog;
  prog.v = {1.0, 1.0};
  prog.q = SymMatrix::from_dense({{1, -3}, {-3, 1}});
  prog.z = 2.0;
  EXPECT_EQ(evaluate_objective(prog, std::vector<std::uint8_t>{1, 1}), 2.0);
}

TEST(SolveExact, Examples) {
  BinaryProgram lin;
  lin.v = {1.0, 2.0, 3.0};
  lin.q = SymMatrix(3);
  lin.z = 1.0;
  const auto r = solve_exact(lin);
  EXPECT_EQ(r.upper_bound, 6.0);
  EXPECT_EQ(r.incumbent_phi, (std::vector<std::uint8_t>{1, 1, 1}));

  BinaryProgram one;
  one.v = {2.0};
  one.q = SymMatrix::from_dense({{3.0}});
  one.z = 1.0;
  EXPECT_NEAR(solve_exact(one).upper_bound, 2.0 + std::sqrt(3.0), 1e-15);

  BinaryProgram big;
  big.v.assign(25, 1.0);
  big.q = SymMatrix(25);
  EXPECT_THROW(solve_exact(big), ResourceError);
}

TEST(SolveBranchBound, MonotoneInstanceClosesAtRoot) {
  BinaryProgram prog;
  prog.v = {1.0, 0.5, 2.0, 0.0, 3.0};
  prog.q = SymMatrix(5);
  for (std::size_t i = 0; i < 5; ++i) prog.q.set_diagonal(i, 0.5 * i);
  prog.q.finalize();
  prog.z = 1.96;
  const auto r = solve_branch_bound(prog);
  EXPECT_EQ(r.status, SolveStatus::optimal);
  EXPECT_EQ(r.nodes_explored, 1u);
  EXPECT_EQ(r.incumbent_phi, std::vector<std::uint8_t>(5, 1));
  EXPECT_NEAR(r.incumbent_value, 6.5 + 1.96 * std::sqrt(5.0), 1e-12);
}

TEST(SolveBranchBound, MatchesExhaustiveN12) {
  std::mt19937_64 rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    const auto prog = random_program(12, rng);
    const auto exact = solve_exact(prog);
    SolveBudget budget;
    budget.gap_tolerance = 0.0;
    const auto bb = solve_branch_bound(prog, budget);
    ASSERT_EQ(bb.status, SolveStatus::optimal);
    ASSERT_NEAR(bb.incumbent_value, exact.incumbent_value, 1e-12 * (1 + exact.incumbent_value));
    ASSERT_GE(bb.upper_bound, exact.incumbent_value);
  }
}

TEST(SolveExact, AgreesWithDenseBruteForce) {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 3 + rep % 8;
    const auto prog = random_program(n, rng, 0.6, rep % 2 ? 5.0 : 0.0);
    double best = 0.0;
    for (std::uint64_t m = 0; m < (1ULL << n); ++m) {
      std::vector<std::uint8_t> phi(n);
      for (std::size_t k = 0; k < n; ++k) phi[k] = (m >> k) & 1U;
      best = std::max(best, brute_objective(prog, phi));
    }
    const auto r = solve_exact(prog);
    ASSERT_NEAR(r.incumbent_value, best, 1e-12 * (1 + best));
    ASSERT_NEAR(evaluate_objective(prog, r.incumbent_phi), r.incumbent_value, 1e-12);
  }
}

TEST(SolveBranchBound, SoundUnderTinyBudget) {
  std::mt19937_64 rng(43);
  for (int rep = 0; rep < 30; ++rep) {
    const auto prog = random_program(14, rng, 0.7);
    const double exact = solve_exact(prog).incumbent_value;
    SolveBudget budget;
    budget.max_nodes = 5 + rep;
    const auto r = solve_branch_bound(prog, budget);
    ASSERT_GE(r.upper_bound, exact);
    ASSERT_LE(r.incumbent_value, r.upper_bound);
    ASSERT_NEAR(evaluate_objective(prog, r.incumbent_phi), r.incumbent_value, 1e-12);
  }
}

TEST(SolveBranchBound, AnytimeMonotone) {
  std::mt19937_64 rng(44);
  const auto prog = random_program(16, rng, 0.8);
  double last_ub = INFINITY;
  double last_inc = -INFINITY;
  for (std::uint64_t nodes : {1, 4, 16, 64, 256, 1024, 4096, 200000}) {
    SolveBudget b;
    b.max_nodes = nodes;
    const auto r = solve_branch_bound(prog, b);
    EXPECT_LE(r.upper_bound, last_ub + 1e-12) << nodes;
    EXPECT_GE(r.incumbent_value, last_inc - 1e-12) << nodes;
    last_ub = r.upper_bound;
    last_inc = r.incumbent_value;
  }
}

TEST(SolveBranchBound, Deterministic) {
  std::mt19937_64 rng(45);
  const auto prog = random_program(16, rng, 0.8);
  SolveBudget b;
  b.max_nodes = 300;
  const auto r1 = solve_branch_bound(prog, b);
  const auto r2 = solve_branch_bound(prog, b);
  EXPECT_EQ(r1.upper_bound, r2.upper_bound);
  EXPECT_EQ(r1.incumbent_value, r2.incumbent_value);
  EXPECT_EQ(r1.incumbent_phi, r2.incumbent_phi);
  EXPECT_EQ(r1.nodes_explored, r2.nodes_explored);
  EXPECT_EQ(r1.status, r2.status);
}

TEST(SolveBranchBound, OptimalWithinGap) {
  std::mt19937_64 rng(46);
  for (int rep = 0; rep < 10; ++rep) {
    const auto prog = random_program(15, rng, 0.5);
    const auto r = solve_branch_bound(prog);
    ASSERT_EQ(r.status, SolveStatus::optimal);
    ASSERT_LE(r.gap, 1e-6 * 15 + 1e-12);
  }
}

TEST(SolveBranchBound, EmptyProgram) {
  BinaryProgram prog;
  const auto r = solve_branch_bound(prog);
  EXPECT_EQ(r.status, SolveStatus::optimal);
  EXPECT_EQ(r.upper_bound, 0.0);
}

TEST(ProgramDump, RoundTrips) {
  std::mt19937_64 rng(47);
  const auto prog = random_program(9, rng, 0.4, 3.25);
  std::stringstream ss;
  write_program(ss, prog);
  const BinaryProgram back = read_program(ss);
  ASSERT_EQ(back.size(), prog.size());
  EXPECT_EQ(back.z, prog.z);
  EXPECT_EQ(back.variance_floor, prog.variance_floor);
  EXPECT_EQ(back.v, prog.v);
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = 0; j < 9; ++j) EXPECT_EQ(back.q.at(i, j), prog.q.at(i, j));
  }
}
