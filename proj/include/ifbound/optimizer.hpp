#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "ifbound/sym_matrix.hpp"

namespace ifbound {

/// max over φ ∈ {0,1}^N of v·φ + z·sqrt(max(φ^T Q φ, variance_floor)).
///
/// variance_floor = 0 is the plain clamp of a negative quadratic form; a
/// positive floor carries the thresholded variance into the objective.
struct BinaryProgram {
  std::vector<double> v;
  SymMatrix q;
  double z = 0.0;
  double variance_floor = 0.0;

  std::size_t size() const { return v.size(); }
  void validate() const;
};

enum class SolveStatus { optimal, budget_exhausted };

std::string_view to_string(SolveStatus s);

/// The coverage guarantee rests on upper_bound, never on incumbent_value.
struct SolveResult {
  double upper_bound = 0.0;
  double incumbent_value = 0.0;
  std::vector<std::uint8_t> incumbent_phi;
  SolveStatus status = SolveStatus::optimal;
  double gap = 0.0;
  std::uint64_t nodes_explored = 0;
};

struct SolveBudget {
  std::uint64_t max_nodes = 200000;
  std::int64_t time_limit_ms = 0;  // 0: no wall-clock limit (keeps runs deterministic)
  double gap_tolerance = -1.0;     // < 0: 1e-6 * N
};

double evaluate_objective(const BinaryProgram& prog, std::span<const std::uint8_t> phi);

/// Brute force over all 2^N hypotheses. Throws ResourceError when N > max_units.
SolveResult solve_exact(const BinaryProgram& prog, std::size_t max_units = 20);

/// Depth-first branch-and-bound with a certified upper bound.
SolveResult solve_branch_bound(const BinaryProgram& prog, const SolveBudget& budget = {});

/// Plain-text instance dump: "N,z[,floor]", then the v line, then "i,j,value"
/// triplets for the diagonal and upper triangle.
void write_program(std::ostream& out, const BinaryProgram& prog);
BinaryProgram read_program(std::istream& in);

}  // namespace ifbound
