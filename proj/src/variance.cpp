#include "ifbound/variance.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <unordered_map>

#include "ifbound/errors.hpp"
#include "ifbound/numeric.hpp"

namespace ifbound {

std::string_view to_string(BackendMode m) {
  return m == BackendMode::linearized ? "linearized" : "mc";
}

BackendMode parse_backend(std::string_view name) {
  if (name == "linearized") return BackendMode::linearized;
  if (name == "mc" || name == "monte_carlo" || name == "monte-carlo") return BackendMode::monte_carlo;
  throw ConfigError("unknown moment backend '" + std::string(name) + "'");
}

void MomentBackend::validate() const {
  if (mode == BackendMode::monte_carlo && replications < 1000) {
    throw ConfigError("Monte Carlo backend needs at least 1000 replications");
  }
}

// Common design replications shared by every pair query.
class MomentEvaluator::MonteCarlo {
 public:
  MonteCarlo(const DesignContext& ctx, const MomentBackend& backend)
      : ctx_(ctx), n_(ctx.size()), reps_(backend.replications) {
    const ExposureModel& model = ctx.model();
    constant_t_ = true;
    for (std::size_t i = 0; i < n_; ++i) constant_t_ &= model.rule(i).t_support.empty();
    prop_cache_.resize(n_);

    std::mt19937_64 rng(substream_seed(backend.seed, 0x6d63U));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    draws_.resize(reps_);
    zbar_.resize(reps_);
    tval_.resize(reps_);
    nhat_.resize(reps_);
    for (std::size_t r = 0; r < reps_; ++r) {
      Assignment& x = draws_[r];
      x.resize(n_);
      for (std::size_t u = 0; u < n_; ++u) x[u] = unif(rng) < ctx.design().p[u] ? 1 : 0;
      zbar_[r].resize(n_);
      tval_[r].resize(n_);
      KahanSum n0;
      KahanSum n1;
      for (std::size_t u = 0; u < n_; ++u) {
        const UnitExposure e = model.evaluate(u, x);
        zbar_[r][u] = e.zbar;
        tval_[r][u] = e.t_value;
        if (e.zbar == 1) n1 += 1.0 / propensity(u, e.t_value)[1];
        if (e.zbar == 0) n0 += 1.0 / propensity(u, e.t_value)[0];
      }
      nhat_[r] = {n0.value(), n1.value()};
    }
  }

  // (E[v_i|T_i], E[v_j|T_j], E[v_i v_j|T_i,T_j]); conditioning on T fixes the
  // coordinates of X that T reads.
  std::array<double, 3> moments(std::size_t i, int a, std::uint64_t ti, std::size_t j, int b,
                                std::uint64_t tj) {
    if (constant_t_) {
      build_matrix();
      const std::size_t ci = static_cast<std::size_t>(a) * n_ + i;
      const std::size_t cj = static_cast<std::size_t>(b) * n_ + j;
      return {first_(ci), first_(cj), second_(ci, cj)};
    }
    const auto fi = fixed_coords(i, ti);
    const auto fj = fixed_coords(j, tj);
    auto fij = fi;
    fij.insert(fij.end(), fj.begin(), fj.end());
    const double mi = conditional_mean(fi, i, a, ti, i, a, ti, false);
    const double mj = conditional_mean(fj, j, b, tj, j, b, tj, false);
    const double mij = conditional_mean(fij, i, a, ti, j, b, tj, true);
    return {mi, mj, mij};
  }

 private:
  using Fixed = std::vector<std::pair<std::size_t, std::uint8_t>>;

  const std::array<double, 2>& propensity(std::size_t u, std::uint64_t t) {
    auto& cache = prop_cache_[u];
    auto it = cache.find(t);
    if (it == cache.end()) {
      const MarginalExposure m = ctx_.marginal(u, t);
      it = cache.emplace(t, std::array<double, 2>{m(0), m(1)}).first;
    }
    return it->second;
  }

  Fixed fixed_coords(std::size_t i, std::uint64_t t) const {
    Fixed f;
    const UnitSet& support = ctx_.model().rule(i).t_support;
    for (std::size_t k = 0; k < support.size(); ++k) {
      f.emplace_back(support[k], static_cast<std::uint8_t>((t >> k) & 1U));
    }
    return f;
  }

  double weight(std::int8_t zbar, int a, std::uint64_t t, std::size_t u, const HajekNormalizers& nh) {
    if (zbar != a) return 0.0;
    const double n_a = nh.at(a);
    if (!(n_a > 0.0)) return 0.0;
    return (static_cast<double>(n_) / n_a) / propensity(u, t)[static_cast<std::size_t>(a)];
  }

  double conditional_mean(const Fixed& fixed, std::size_t i, int a, std::uint64_t ti, std::size_t j,
                          int b, std::uint64_t tj, bool product) {
    const ExposureModel& model = ctx_.model();
    Assignment x(n_);
    std::vector<std::size_t> touched;
    std::vector<std::uint8_t> mark(n_, 0);
    KahanSum acc;
    for (std::size_t r = 0; r < reps_; ++r) {
      std::copy(draws_[r].begin(), draws_[r].end(), x.begin());
      touched.clear();
      for (const auto& [u, val] : fixed) {
        if (x[u] == val) continue;
        x[u] = val;
        for (std::size_t w : model.reverse_gamma(u)) {
          if (!mark[w]) {
            mark[w] = 1;
            touched.push_back(w);
          }
        }
      }
      double n0 = nhat_[r].n_hat0;
      double n1 = nhat_[r].n_hat1;
      std::int8_t zi = zbar_[r][i];
      std::int8_t zj = zbar_[r][j];
      for (std::size_t w : touched) {
        mark[w] = 0;
        const std::int8_t old_z = zbar_[r][w];
        const std::uint64_t old_t = tval_[r][w];
        if (old_z == 1) n1 -= 1.0 / propensity(w, old_t)[1];
        if (old_z == 0) n0 -= 1.0 / propensity(w, old_t)[0];
        const UnitExposure e = model.evaluate(w, x);
        if (e.zbar == 1) n1 += 1.0 / propensity(w, e.t_value)[1];
        if (e.zbar == 0) n0 += 1.0 / propensity(w, e.t_value)[0];
        if (w == i) zi = e.zbar;
        if (w == j) zj = e.zbar;
      }
      const HajekNormalizers nh{n0, n1};
      const double vi = weight(zi, a, ti, i, nh);
      acc += product ? vi * weight(zj, b, tj, j, nh) : vi;
    }
    return acc.value() / static_cast<double>(reps_);
  }

  void build_matrix() {
    if (built_) return;
    const std::size_t cols = 2 * n_;
    first_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols));
    second_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(cols));
    constexpr std::size_t kChunk = 512;
    Eigen::MatrixXd block;
    for (std::size_t start = 0; start < reps_; start += kChunk) {
      const std::size_t rows = std::min(kChunk, reps_ - start);
      block.setZero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t rep = start + r;
        for (std::size_t u = 0; u < n_; ++u) {
          const std::int8_t z = zbar_[rep][u];
          if (z < 0) continue;
          block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(static_cast<std::size_t>(z) * n_ + u)) =
              weight(z, z, tval_[rep][u], u, nhat_[rep]);
        }
      }
      first_ += block.colwise().sum().transpose();
      second_.noalias() += block.transpose() * block;
    }
    first_ /= static_cast<double>(reps_);
    second_ /= static_cast<double>(reps_);
    built_ = true;
  }

  const DesignContext& ctx_;
  std::size_t n_;
  std::size_t reps_;
  bool constant_t_ = true;
  std::vector<Assignment> draws_;
  std::vector<std::vector<std::int8_t>> zbar_;
  std::vector<std::vector<std::uint64_t>> tval_;
  std::vector<HajekNormalizers> nhat_;
  std::vector<std::unordered_map<std::uint64_t, std::array<double, 2>>> prop_cache_;
  bool built_ = false;
  Eigen::VectorXd first_;
  Eigen::MatrixXd second_;
};

MomentEvaluator::MomentEvaluator(const DesignContext& ctx, MomentBackend backend)
    : ctx_(&ctx), backend_(backend) {
  backend_.validate();
}

MomentEvaluator::~MomentEvaluator() = default;
MomentEvaluator::MomentEvaluator(MomentEvaluator&&) noexcept = default;
MomentEvaluator& MomentEvaluator::operator=(MomentEvaluator&&) noexcept = default;

PairMoments MomentEvaluator::conditional_moments(std::size_t i, int a, std::uint64_t ti,
                                                 std::size_t j, int b, std::uint64_t tj) {
  const JointExposure joint = ctx_->joint(i, ti, j, tj);
  PairMoments m;
  m.p_ti = joint.p_ti;
  m.p_tj = joint.p_tj;
  m.p_titj = joint.p_titj;
  if (!(joint.p_titj > 0.0)) return m;
  m.p_joint = joint(a, b);
  if (backend_.mode == BackendMode::linearized) {
    const double qi = ctx_->marginal(i, ti)(a);
    const double qj = i == j ? qi : ctx_->marginal(j, tj)(b);
    m.mean_i = 1.0;
    m.mean_j = 1.0;
    m.mean_ij = m.p_joint / (qi * qj);
    return m;
  }
  if (!mc_) mc_ = std::make_unique<MonteCarlo>(*ctx_, backend_);
  const auto mom = mc_->moments(i, a, ti, j, b, tj);
  m.mean_i = mom[0];
  m.mean_j = mom[1];
  m.mean_ij = mom[2];
  return m;
}

PairMoments MomentEvaluator::conditional_moments(std::size_t i, std::size_t j, int k,
                                                 const Observation& obs) {
  const int a = estimator_outcome(k, obs.data.y[i]);
  const int b = estimator_outcome(k, obs.data.y[j]);
  const std::uint64_t ti = obs.exposure.t_value[i];
  const std::uint64_t tj = obs.exposure.t_value[j];
  if (backend_.mode != BackendMode::linearized) return conditional_moments(i, a, ti, j, b, tj);

  // Linearized: reuse the realized marginals instead of recomputing them.
  PairMoments m;
  const double qi = obs.propensities.at(i, a);
  const double qj = obs.propensities.at(j, b);
  m.mean_i = 1.0;
  m.mean_j = 1.0;
  if (i == j) {
    m.p_ti = m.p_tj = m.p_titj = obs.propensities.p_t[i];
    m.p_joint = a == b ? qi : 0.0;
  } else {
    const JointExposure joint = ctx_->joint(i, ti, j, tj);
    m.p_ti = joint.p_ti;
    m.p_tj = joint.p_tj;
    m.p_titj = joint.p_titj;
    m.p_joint = joint(a, b);
  }
  m.mean_ij = m.p_joint / (qi * qj);
  return m;
}

QuadraticSpec build_Q(int k, const Observation& obs, MomentEvaluator& moments, double z) {
  const DesignContext& ctx = moments.context();
  const std::size_t n = obs.size();
  QuadraticSpec spec;
  spec.v = phi_hat_vector(k, obs);
  spec.z = z;
  spec.q = SymMatrix(n);

  std::vector<std::uint8_t> member(n, 0);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < n; ++i) {
    if (obs.exposure.zbar[i] == estimator_outcome(k, obs.data.y[i])) {
      member[i] = 1;
      members.push_back(i);
    }
  }

  auto add_entry = [&](std::size_t i, std::size_t j) {
    const PairMoments m = moments.conditional_moments(i, j, k, obs);
    if (!(m.p_titj > 0.0) || !(m.p_joint > 0.0)) {
      ++spec.excluded_pairs;
      return;
    }
    const double value = m.covariance() / m.p_joint;
    if (i == j) spec.q.set_diagonal(i, value);
    else if (value != 0.0) spec.q.add_pair(i, j, value);
  };

  const bool linearized = moments.backend().mode == BackendMode::linearized;
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::size_t> partners;
  for (std::size_t i : members) {
    add_entry(i, i);
    partners.clear();
    if (linearized) {
      // Disjoint dependency neighborhoods give C_ij = 0 exactly.
      for (std::size_t u : ctx.model().gamma(i)) {
        for (std::size_t j : ctx.model().reverse_gamma(u)) {
          if (j > i && member[j] && !seen[j]) {
            seen[j] = 1;
            partners.push_back(j);
          }
        }
      }
      std::sort(partners.begin(), partners.end());
      for (std::size_t j : partners) seen[j] = 0;
    } else {
      for (std::size_t j : members) {
        if (j > i) partners.push_back(j);
      }
    }
    for (std::size_t j : partners) add_entry(i, j);
  }
  spec.q.finalize();
  return spec;
}

double variance_floor(std::size_t n, double alpha) {
  const double z = normal_critical_value(alpha);
  return 1.01 * std::pow(static_cast<double>(n), 2.0 / 3.0 + 0.01) / (z * z * alpha / 2.0);
}

double threshold_variance(double variance, std::size_t n, double alpha) {
  return std::max(variance, variance_floor(n, alpha));
}

}  // namespace ifbound
