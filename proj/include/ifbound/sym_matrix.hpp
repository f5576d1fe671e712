#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace ifbound {

/// Symmetric matrix with a dense diagonal and sparse off-diagonal rows.
///
/// Each off-diagonal entry (i, j) is stored in both row i and row j; rows are
/// kept sorted by column after finalize().
class SymMatrix {
 public:
  struct Entry {
    std::size_t col;
    double value;
  };

  SymMatrix() = default;
  explicit SymMatrix(std::size_t n) : diag_(n, 0.0), rows_(n) {}

  std::size_t size() const { return diag_.size(); }

  void set_diagonal(std::size_t i, double value) { diag_[i] = value; }
  /// Adds Q_ij = Q_ji = value for i != j. Call finalize() after the last add.
  void add_pair(std::size_t i, std::size_t j, double value);
  void finalize();

  double diagonal(std::size_t i) const { return diag_[i]; }
  const std::vector<Entry>& row(std::size_t i) const { return rows_[i]; }
  double at(std::size_t i, std::size_t j) const;

  /// Count of stored off-diagonal pairs (each counted once).
  std::size_t pair_count() const;

  /// φ^T Q φ, accumulated row by row in index order.
  double quadratic_form(std::span<const std::uint8_t> phi) const;
  /// Σ_ij |Q_ij|, the big-M constant of the mixed-integer reformulation.
  double abs_sum() const;
  bool is_symmetric(double tol) const;

  static SymMatrix from_dense(const std::vector<std::vector<double>>& dense);

 private:
  std::vector<double> diag_;
  std::vector<std::vector<Entry>> rows_;
};

}  // namespace ifbound
