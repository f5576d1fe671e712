#include "ifbound/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "ifbound/errors.hpp"

namespace ifbound {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double objective_from(double linear, double quad, double z, double floor) {
  return linear + z * std::sqrt(std::max(quad, floor));
}

// Slack added to every computed node bound. Incremental updates of the row
// sums drift by a few ulps; the slack keeps the bound on the safe side.
double bound_slack(double value) { return 1e-9 * (1.0 + std::abs(value)); }

class BranchAndBound {
 public:
  BranchAndBound(const BinaryProgram& prog, const SolveBudget& budget)
      : prog_(prog), budget_(budget), n_(prog.size()) {
    tolerance_ = budget.gap_tolerance >= 0.0 ? budget.gap_tolerance : 1e-6 * static_cast<double>(n_);
    state_.assign(n_, 0);
    row_s_.assign(n_, 0.0);
    row_f_.assign(n_, 0.0);
    row_fpos_.assign(n_, 0.0);

    std::vector<double> priority(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const bool active = prog_.v[i] != 0.0 || prog_.q.diagonal(i) != 0.0 || !prog_.q.row(i).empty();
      if (!active) continue;
      double pos = std::max(prog_.q.diagonal(i), 0.0);
      for (const auto& e : prog_.q.row(i)) pos += std::max(e.value, 0.0);
      priority[i] = prog_.v[i] + pos;
      order_.push_back(i);
      state_[i] = kFree;
    }
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return priority[a] > priority[b]; });
    for (std::size_t i : order_) {
      v_f_ += prog_.v[i];
      for (const auto& e : prog_.q.row(i)) {
        if (state_[e.col] == kFree) {
          row_f_[i] += e.value;
          row_fpos_[i] += std::max(e.value, 0.0);
        }
      }
    }
  }

  SolveResult run() {
    start_ = std::chrono::steady_clock::now();
    seed_incumbent();
    const double unresolved = dfs(0);
    SolveResult res;
    res.incumbent_value = incumbent_;
    res.incumbent_phi = incumbent_phi_;
    res.nodes_explored = nodes_;
    res.upper_bound = std::max({incumbent_, pruned_max_, unresolved});
    res.status = unresolved == kNegInf ? SolveStatus::optimal : SolveStatus::budget_exhausted;
    res.gap = res.upper_bound - res.incumbent_value;
    return res;
  }

 private:
  static constexpr std::int8_t kFree = -1;

  void consider(std::vector<std::uint8_t> phi) {
    const double value = evaluate_objective(prog_, phi);
    if (value > incumbent_ || incumbent_phi_.empty()) {
      incumbent_ = value;
      incumbent_phi_ = std::move(phi);
    }
  }

  // All-ones start, then steepest single flips until no flip improves.
  void seed_incumbent() {
    std::vector<std::uint8_t> phi(n_, 0);
    for (std::size_t i : order_) phi[i] = 1;
    consider(phi);
    std::vector<double> g(n_, 0.0);
    double lin = 0.0;
    double quad = 0.0;
    for (std::size_t i : order_) {
      lin += prog_.v[i];
      quad += prog_.q.diagonal(i);
      for (const auto& e : prog_.q.row(i)) {
        if (phi[e.col]) g[i] += e.value;
      }
      quad += g[i];
    }
    for (std::size_t iter = 0; iter < 4 * order_.size() + 4; ++iter) {
      const double current = objective_from(lin, quad, prog_.z, prog_.variance_floor);
      double best = current + 1e-12 * (1.0 + std::abs(current));
      std::size_t best_unit = n_;
      for (std::size_t u : order_) {
        const double delta_q = prog_.q.diagonal(u) + 2.0 * g[u];
        const double cand = phi[u] ? objective_from(lin - prog_.v[u], quad - delta_q, prog_.z, prog_.variance_floor)
                                   : objective_from(lin + prog_.v[u], quad + delta_q, prog_.z, prog_.variance_floor);
        if (cand > best) {
          best = cand;
          best_unit = u;
        }
      }
      if (best_unit == n_) break;
      const double sign = phi[best_unit] ? -1.0 : 1.0;
      quad += sign * (prog_.q.diagonal(best_unit) + 2.0 * g[best_unit]);
      lin += sign * prog_.v[best_unit];
      phi[best_unit] = phi[best_unit] ? 0 : 1;
      for (const auto& e : prog_.q.row(best_unit)) g[e.col] += sign * e.value;
    }
    consider(std::move(phi));
  }

  bool out_of_budget() {
    if (nodes_ >= budget_.max_nodes) return true;
    if (budget_.time_limit_ms > 0 && (nodes_ & 63U) == 0) {
      const auto elapsed = std::chrono::steady_clock::now() - start_;
      timed_out_ = timed_out_ ||
                   std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count() >=
                       budget_.time_limit_ms;
    }
    return timed_out_;
  }

  void fix_one(std::size_t u) {
    q_ss_ += prog_.q.diagonal(u) + 2.0 * row_s_[u];
    v_s_ += prog_.v[u];
    v_f_ -= prog_.v[u];
    state_[u] = 1;
    for (const auto& e : prog_.q.row(u)) {
      row_s_[e.col] += e.value;
      row_f_[e.col] -= e.value;
      row_fpos_[e.col] -= std::max(e.value, 0.0);
    }
  }
  void unfix_one(std::size_t u) {
    for (const auto& e : prog_.q.row(u)) {
      row_s_[e.col] -= e.value;
      row_f_[e.col] += e.value;
      row_fpos_[e.col] += std::max(e.value, 0.0);
    }
    state_[u] = kFree;
    v_f_ += prog_.v[u];
    v_s_ -= prog_.v[u];
    q_ss_ -= prog_.q.diagonal(u) + 2.0 * row_s_[u];
  }
  void fix_zero(std::size_t u) {
    v_f_ -= prog_.v[u];
    state_[u] = 0;
    for (const auto& e : prog_.q.row(u)) {
      row_f_[e.col] -= e.value;
      row_fpos_[e.col] -= std::max(e.value, 0.0);
    }
  }
  void unfix_zero(std::size_t u) {
    for (const auto& e : prog_.q.row(u)) {
      row_f_[e.col] += e.value;
      row_fpos_[e.col] += std::max(e.value, 0.0);
    }
    state_[u] = kFree;
    v_f_ += prog_.v[u];
  }

  std::vector<std::uint8_t> phi_with_free(std::uint8_t free_value) const {
    std::vector<std::uint8_t> phi(n_, 0);
    for (std::size_t i = 0; i < n_; ++i) {
      phi[i] = state_[i] == kFree ? free_value : static_cast<std::uint8_t>(state_[i] == 1);
    }
    return phi;
  }

  // Returns the largest bound over parts of this subtree left unexplored
  // (-inf when the subtree is fully resolved).
  double dfs(std::size_t depth) {
    ++nodes_;
    double q_bound = q_ss_;
    double q_all = q_ss_;
    // attained: the all-ones completion reaches the bound term for term
    bool attained = prog_.z == 0.0;
    bool monotone = true;
    for (std::size_t d = depth; d < order_.size(); ++d) {
      const std::size_t u = order_[d];
      const double base = prog_.q.diagonal(u) + 2.0 * row_s_[u];
      q_bound += std::max(0.0, base + row_fpos_[u]);
      q_all += base + row_f_[u];
      monotone = monotone && row_fpos_[u] == row_f_[u] && base + row_f_[u] >= 0.0;
    }
    attained = attained || monotone;
    const double raw = objective_from(v_s_ + v_f_, q_bound, prog_.z, prog_.variance_floor);
    const double bound = raw + bound_slack(raw);

    if (attained) {
      // the subtree maximum is the all-ones completion, evaluated exactly here
      consider(phi_with_free(1));
      return kNegInf;
    }
    if (objective_from(v_s_ + v_f_, q_all, prog_.z, prog_.variance_floor) > incumbent_) {
      consider(phi_with_free(1));
    }
    if (objective_from(v_s_, q_ss_, prog_.z, prog_.variance_floor) > incumbent_) {
      consider(phi_with_free(0));
    }

    if (bound <= incumbent_ + tolerance_) {
      if (bound > incumbent_) pruned_max_ = std::max(pruned_max_, bound);
      return kNegInf;
    }
    if (depth == order_.size()) return kNegInf;
    if (out_of_budget()) return bound;

    const std::size_t u = order_[depth];
    fix_one(u);
    const double r1 = dfs(depth + 1);
    unfix_one(u);
    fix_zero(u);
    const double r0 = dfs(depth + 1);
    unfix_zero(u);
    return std::max(r1, r0);
  }

  const BinaryProgram& prog_;
  SolveBudget budget_;
  std::size_t n_;
  double tolerance_ = 0.0;
  std::vector<std::size_t> order_;
  std::vector<std::int8_t> state_;
  std::vector<double> row_s_;
  std::vector<double> row_f_;
  std::vector<double> row_fpos_;
  double q_ss_ = 0.0;
  double v_s_ = 0.0;
  double v_f_ = 0.0;
  double incumbent_ = kNegInf;
  std::vector<std::uint8_t> incumbent_phi_;
  double pruned_max_ = kNegInf;
  std::uint64_t nodes_ = 0;
  bool timed_out_ = false;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

std::string_view to_string(SolveStatus s) {
  return s == SolveStatus::optimal ? "optimal" : "budget_exhausted";
}

void BinaryProgram::validate() const {
  if (q.size() != v.size()) throw ConfigError("Q and v dimensions differ");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0) || !std::isfinite(v[i])) {
      throw ConfigError("v[" + std::to_string(i) + "] must be finite and nonnegative");
    }
  }
  if (!(z >= 0.0) || !std::isfinite(z)) throw ConfigError("z must be finite and nonnegative");
  if (!(variance_floor >= 0.0)) throw ConfigError("variance floor must be nonnegative");
  if (!q.is_symmetric(1e-9)) throw ConfigError("Q must be symmetric");
}

double evaluate_objective(const BinaryProgram& prog, std::span<const std::uint8_t> phi) {
  double linear = 0.0;
  for (std::size_t i = 0; i < prog.v.size(); ++i) {
    if (phi[i]) linear += prog.v[i];
  }
  return objective_from(linear, prog.q.quadratic_form(phi), prog.z, prog.variance_floor);
}

SolveResult solve_exact(const BinaryProgram& prog, std::size_t max_units) {
  const std::size_t n = prog.size();
  if (n > max_units) {
    throw ResourceError("exhaustive search over " + std::to_string(n) + " units exceeds cap " +
                        std::to_string(max_units));
  }
  std::vector<std::uint8_t> phi(n, 0);
  std::vector<double> g(n, 0.0);  // g[u] = Σ_{j != u} Q_uj φ_j
  double lin = 0.0;
  double quad = 0.0;

  SolveResult res;
  res.incumbent_phi = phi;
  res.incumbent_value = evaluate_objective(prog, phi);
  double best_approx = res.incumbent_value;

  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t m = 1; m < total; ++m) {
    const auto u = static_cast<std::size_t>(std::countr_zero(m));
    const double sign = phi[u] ? -1.0 : 1.0;
    quad += sign * (prog.q.diagonal(u) + 2.0 * g[u]);
    lin += sign * prog.v[u];
    phi[u] ^= 1U;
    for (const auto& e : prog.q.row(u)) g[e.col] += sign * e.value;

    const double approx = objective_from(lin, quad, prog.z, prog.variance_floor);
    if (approx >= best_approx - 1e-9 * (1.0 + std::abs(best_approx))) {
      const double exact = evaluate_objective(prog, phi);
      if (exact > res.incumbent_value) {
        res.incumbent_value = exact;
        res.incumbent_phi = phi;
      }
      best_approx = std::max(best_approx, approx);
    }
  }
  res.upper_bound = res.incumbent_value;
  res.status = SolveStatus::optimal;
  res.gap = 0.0;
  res.nodes_explored = total;
  return res;
}

SolveResult solve_branch_bound(const BinaryProgram& prog, const SolveBudget& budget) {
  if (prog.size() == 0) {
    SolveResult res;
    res.upper_bound = res.incumbent_value = prog.z * std::sqrt(prog.variance_floor);
    res.nodes_explored = 1;
    return res;
  }
  return BranchAndBound(prog, budget).run();
}

void write_program(std::ostream& out, const BinaryProgram& prog) {
  out << std::setprecision(17);
  out << prog.size() << ',' << prog.z;
  if (prog.variance_floor != 0.0) out << ',' << prog.variance_floor;
  out << '\n';
  for (std::size_t i = 0; i < prog.v.size(); ++i) out << (i ? "," : "") << prog.v[i];
  out << '\n';
  for (std::size_t i = 0; i < prog.size(); ++i) {
    if (prog.q.diagonal(i) != 0.0) out << i << ',' << i << ',' << prog.q.diagonal(i) << '\n';
    for (const auto& e : prog.q.row(i)) {
      if (e.col > i) out << i << ',' << e.col << ',' << e.value << '\n';
    }
  }
}

BinaryProgram read_program(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    return parts;
  };
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("instance dump: missing header");
  const auto header = split(line);
  if (header.size() < 2 || header.size() > 3) throw ConfigError("instance dump: bad header '" + line + "'");
  BinaryProgram prog;
  const std::size_t n = std::stoul(header[0]);
  prog.z = std::stod(header[1]);
  if (header.size() == 3) prog.variance_floor = std::stod(header[2]);
  if (!std::getline(in, line)) throw ConfigError("instance dump: missing v line");
  for (const auto& s : split(line)) prog.v.push_back(std::stod(s));
  if (prog.v.size() != n) throw ConfigError("instance dump: v has wrong length");
  prog.q = SymMatrix(n);
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto t = split(line);
    if (t.size() != 3) throw ConfigError("instance dump line " + std::to_string(lineno) + ": expected i,j,value");
    const std::size_t i = std::stoul(t[0]);
    const std::size_t j = std::stoul(t[1]);
    if (i >= n || j >= n) throw ConfigError("instance dump line " + std::to_string(lineno) + ": index out of range");
    if (i == j) prog.q.set_diagonal(i, std::stod(t[2]));
    else prog.q.add_pair(i, j, std::stod(t[2]));
  }
  prog.q.finalize();
  return prog;
}

}  // namespace ifbound
