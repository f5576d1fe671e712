#include "ifbound/sym_matrix.hpp"

#include <algorithm>
#include <cmath>

namespace ifbound {

void SymMatrix::add_pair(std::size_t i, std::size_t j, double value) {
  if (i == j) {
    diag_[i] += value;
    return;
  }
  rows_[i].push_back({j, value});
  rows_[j].push_back({i, value});
}

void SymMatrix::finalize() {
  for (auto& r : rows_) {
    std::sort(r.begin(), r.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
    // merge duplicate columns
    std::size_t out = 0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (out > 0 && r[out - 1].col == r[k].col) {
        r[out - 1].value += r[k].value;
      } else {
        r[out++] = r[k];
      }
    }
    r.resize(out);
  }
}

double SymMatrix::at(std::size_t i, std::size_t j) const {
  if (i == j) return diag_[i];
  const auto& r = rows_[i];
  auto it = std::lower_bound(r.begin(), r.end(), j,
                             [](const Entry& e, std::size_t c) { return e.col < c; });
  return (it != r.end() && it->col == j) ? it->value : 0.0;
}

std::size_t SymMatrix::pair_count() const {
  std::size_t c = 0;
  for (const auto& r : rows_) c += r.size();
  return c / 2;
}

double SymMatrix::quadratic_form(std::span<const std::uint8_t> phi) const {
  double total = 0.0;
  for (std::size_t i = 0; i < diag_.size(); ++i) {
    if (!phi[i]) continue;
    double row_sum = diag_[i];
    for (const Entry& e : rows_[i]) {
      if (phi[e.col]) row_sum += e.value;
    }
    total += row_sum;
  }
  return total;
}

double SymMatrix::abs_sum() const {
  double total = 0.0;
  for (std::size_t i = 0; i < diag_.size(); ++i) {
    total += std::abs(diag_[i]);
    for (const Entry& e : rows_[i]) total += std::abs(e.value);
  }
  return total;
}

bool SymMatrix::is_symmetric(double tol) const {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (const Entry& e : rows_[i]) {
      if (std::abs(at(e.col, i) - e.value) > tol) return false;
    }
  }
  return true;
}

SymMatrix SymMatrix::from_dense(const std::vector<std::vector<double>>& dense) {
  SymMatrix q(dense.size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    q.diag_[i] = dense[i][i];
    for (std::size_t j = i + 1; j < dense.size(); ++j) {
      const double v = 0.5 * (dense[i][j] + dense[j][i]);
      if (v != 0.0) q.add_pair(i, j, v);
    }
  }
  q.finalize();
  return q;
}

}  // namespace ifbound
