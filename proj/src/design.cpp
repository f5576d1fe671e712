#include "ifbound/design.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ifbound/errors.hpp"
#include "ifbound/numeric.hpp"

namespace ifbound {
namespace {

constexpr double kConditioningFloor = 1e-300;

/// Upper tail P(count >= k) of a Poisson-binomial count, any integer k.
class CountTail {
 public:
  CountTail() : tail_{1.0, 0.0} {}
  explicit CountTail(std::span<const double> probs) {
    const std::vector<double> pmf = poisson_binomial_pmf(probs);
    tail_.assign(pmf.size() + 1, 0.0);
    for (std::size_t k = pmf.size(); k-- > 0;) tail_[k] = tail_[k + 1] + pmf[k];
  }
  double at_least(long k) const {
    if (k <= 0) return 1.0;
    if (k >= static_cast<long>(tail_.size())) return 0.0;
    return tail_[static_cast<std::size_t>(k)];
  }
  double below(long k) const {
    if (k <= 0) return 0.0;
    if (k >= static_cast<long>(tail_.size())) return 1.0;
    return 1.0 - tail_[static_cast<std::size_t>(k)];
  }

 private:
  std::vector<double> tail_;
};

/// Small map unit -> value for the explicitly enumerated coordinates.
class LocalValues {
 public:
  void set(std::size_t unit, std::uint8_t v) {
    for (auto& [u, val] : entries_) {
      if (u == unit) {
        val = v;
        return;
      }
    }
    entries_.emplace_back(unit, v);
  }
  /// Returns false when the unit is already fixed to a different value.
  bool fix(std::size_t unit, std::uint8_t v) {
    for (const auto& [u, val] : entries_) {
      if (u == unit) return val == v;
    }
    entries_.emplace_back(unit, v);
    return true;
  }
  bool has(std::size_t unit) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [unit](const auto& e) { return e.first == unit; });
  }
  std::uint8_t get(std::size_t unit) const {
    for (const auto& [u, val] : entries_) {
      if (u == unit) return val;
    }
    return 0;
  }

 private:
  std::vector<std::pair<std::size_t, std::uint8_t>> entries_;
};

bool fix_t_support(const UnitRule& r, std::uint64_t t, LocalValues& fixed) {
  bool ok = true;
  for (std::size_t k = 0; k < r.t_support.size(); ++k) {
    ok &= fixed.fix(r.t_support[k], static_cast<std::uint8_t>((t >> k) & 1U));
  }
  return ok;
}

double t_support_probability(const UnitRule& r, std::uint64_t t, const DesignSpec& design) {
  double prob = 1.0;
  for (std::size_t k = 0; k < r.t_support.size(); ++k) {
    const double p = design.p[r.t_support[k]];
    prob *= ((t >> k) & 1U) ? p : 1.0 - p;
  }
  return prob;
}

/// Count-set members split into explicitly known ones and the rest.
struct CountSplit {
  UnitSet known;
  UnitSet rest;
};

CountSplit split_count_set(const UnitRule& r, const LocalValues& known) {
  CountSplit s;
  for (std::size_t u : r.count_set) (known.has(u) ? s.known : s.rest).push_back(u);
  return s;
}

std::vector<double> probs_of(const UnitSet& units, const DesignSpec& design) {
  std::vector<double> out;
  out.reserve(units.size());
  for (std::size_t u : units) out.push_back(design.p[u]);
  return out;
}

long known_count(const UnitSet& units, const LocalValues& values) {
  long c = 0;
  for (std::size_t u : units) c += values.get(u);
  return c;
}

}  // namespace

DesignSpec DesignSpec::uniform(std::size_t n, double prob) { return DesignSpec{std::vector<double>(n, prob)}; }

double DesignSpec::p_min() const {
  double m = 0.5;
  for (double pi : p) m = std::min({m, pi, 1.0 - pi});
  return m;
}

void DesignSpec::validate(std::size_t n) const {
  if (p.size() != n) {
    throw ConfigError("design has " + std::to_string(p.size()) + " probabilities, expected " +
                      std::to_string(n));
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0 && p[i] < 1.0)) {
      throw ConfigError("unit " + std::to_string(i) + ": treatment probability " +
                        std::to_string(p[i]) +
                        " must lie strictly inside (0,1) (positivity of the Bernoulli design)");
    }
  }
}

double DesignSpec::probability_of(std::span<const std::size_t> units,
                                  std::span<const std::uint8_t> values) const {
  double prob = 1.0;
  for (std::size_t k = 0; k < units.size(); ++k) {
    prob *= values[k] ? p[units[k]] : 1.0 - p[units[k]];
  }
  return prob;
}

double poisson_binomial_tail(std::span<const double> probs, std::size_t threshold) {
  if (threshold == 0) return 1.0;
  if (threshold > probs.size()) return 0.0;
  // state[c] = P(count == c) for c < threshold; reached = P(count >= threshold)
  std::vector<double> state(threshold, 0.0);
  state[0] = 1.0;
  double reached = 0.0;
  for (double p : probs) {
    reached += state[threshold - 1] * p;
    for (std::size_t c = threshold - 1; c > 0; --c) {
      state[c] = state[c] * (1.0 - p) + state[c - 1] * p;
    }
    state[0] *= 1.0 - p;
  }
  return reached;
}

std::vector<double> poisson_binomial_pmf(std::span<const double> probs) {
  std::vector<double> pmf(probs.size() + 1, 0.0);
  pmf[0] = 1.0;
  std::size_t len = 1;
  for (double p : probs) {
    pmf[len] = pmf[len - 1] * p;
    for (std::size_t c = len - 1; c > 0; --c) pmf[c] = pmf[c] * (1.0 - p) + pmf[c - 1] * p;
    pmf[0] *= 1.0 - p;
    ++len;
  }
  return pmf;
}

LocalAssignmentSpace LocalAssignmentSpace::build(UnitSet members, const DesignSpec& design,
                                                 std::size_t limit) {
  if (members.size() > limit) {
    throw ResourceError("enumeration over " + std::to_string(members.size()) +
                        " units exceeds the configured limit of " + std::to_string(limit));
  }
  LocalAssignmentSpace space;
  space.weights.assign(std::size_t{1} << members.size(), 0.0);
  space.weights[0] = 1.0;
  for (std::size_t k = 0; k < members.size(); ++k) {
    const double p = design.p[members[k]];
    const std::size_t half = std::size_t{1} << k;
    for (std::size_t m = 0; m < half; ++m) {
      space.weights[m | half] = space.weights[m] * p;
      space.weights[m] *= 1.0 - p;
    }
  }
  space.members = std::move(members);
  return space;
}

UnitSet compute_gamma(const EstimandSpec& estimand, std::size_t n, std::size_t i) {
  if (i >= n) throw ConfigError("unit index " + std::to_string(i) + " out of range");
  return ExposureModel(estimand, n).gamma(i);
}

std::size_t max_dependency_degree(const ExposureModel& model) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    d = std::max({d, model.gamma(i).size(), model.reverse_gamma(i).size()});
  }
  return d;
}

DesignContext::DesignContext(DesignSpec design, ExposureModel model, ProbabilityOptions options)
    : design_(std::move(design)), model_(std::move(model)), options_(options) {
  design_.validate(model_.size());
}

void DesignContext::check_support(std::size_t i, std::uint64_t t) const {
  if (i >= size()) throw ConfigError("unit index " + std::to_string(i) + " out of range");
  if (t >= model_.t_cardinality(i)) {
    throw SupportError("value " + std::to_string(t) + " is outside the support of T_" +
                       std::to_string(i));
  }
}

bool DesignContext::gammas_overlap(std::size_t i, std::size_t j) const {
  const UnitSet& a = model_.gamma(i);
  const UnitSet& b = model_.gamma(j);
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia == *ib) return true;
    if (*ia < *ib) ++ia; else ++ib;
  }
  return false;
}

double DesignContext::t_probability(std::size_t i, std::uint64_t t) const {
  check_support(i, t);
  return t_support_probability(model_.rule(i), t, design_);
}

MarginalExposure DesignContext::marginal(std::size_t i, std::uint64_t t) const {
  return options_.method == ProbabilityMethod::enumerate ? marginal_enumerated(i, t)
                                                         : marginal_structured(i, t);
}

double DesignContext::marginal_exposure_prob(std::size_t i, std::uint64_t t, int a) const {
  return marginal(i, t)(a);
}

JointExposure DesignContext::joint(std::size_t i, std::uint64_t ti, std::size_t j,
                                   std::uint64_t tj) const {
  return options_.method == ProbabilityMethod::enumerate ? joint_enumerated(i, ti, j, tj)
                                                         : joint_structured(i, ti, j, tj);
}

MarginalExposure DesignContext::marginal_structured(std::size_t i, std::uint64_t t) const {
  check_support(i, t);
  const UnitRule& r = model_.rule(i);
  MarginalExposure out;
  out.p_t = t_support_probability(r, t, design_);
  if (out.p_t < kConditioningFloor) {
    throw PositivityError("P(T_" + std::to_string(i) + ") is below 1e-300");
  }
  LocalValues fixed;
  fix_t_support(r, t, fixed);
  const bool own_free = !fixed.has(i);

  // Own treatment is the only explicitly enumerated coordinate besides T.
  LocalValues probe = fixed;
  probe.set(i, 0);
  const CountSplit split = split_count_set(r, probe);
  const CountTail tail = r.has_count ? CountTail(probs_of(split.rest, design_)) : CountTail();

  std::array<KahanSum, 3> acc;
  for (std::uint8_t xi = 0; xi <= 1; ++xi) {
    double weight = 1.0;
    if (own_free) {
      weight = xi ? design_.p[i] : 1.0 - design_.p[i];
    } else if (fixed.get(i) != xi) {
      continue;
    }
    LocalValues values = fixed;
    values.set(i, xi);
    if (!r.has_count) {
      acc[zslot(zbar_from(model_.estimand(), xi, 0))] += weight;
      continue;
    }
    const long need = r.threshold - known_count(split.known, values);
    acc[zslot(zbar_from(model_.estimand(), xi, 1))] += weight * tail.at_least(need);
    acc[zslot(zbar_from(model_.estimand(), xi, 0))] += weight * tail.below(need);
  }
  for (std::size_t s = 0; s < 3; ++s) out.prob[s] = acc[s].value();
  return out;
}

JointExposure DesignContext::joint_structured(std::size_t i, std::uint64_t ti, std::size_t j,
                                              std::uint64_t tj) const {
  check_support(i, ti);
  check_support(j, tj);
  const UnitRule& ri = model_.rule(i);
  const UnitRule& rj = model_.rule(j);
  JointExposure out;
  out.p_ti = t_support_probability(ri, ti, design_);
  out.p_tj = t_support_probability(rj, tj, design_);

  if (i == j) {
    if (ti != tj) return out;
    const MarginalExposure m = marginal_structured(i, ti);
    for (std::size_t s = 0; s < 3; ++s) out.prob[s][s] = m.prob[s];
    out.p_titj = m.p_t;
    return out;
  }

  LocalValues fixed;
  if (!fix_t_support(ri, ti, fixed) || !fix_t_support(rj, tj, fixed)) return out;
  {
    UnitSet support;
    std::set_union(ri.t_support.begin(), ri.t_support.end(), rj.t_support.begin(),
                   rj.t_support.end(), std::back_inserter(support));
    std::vector<std::uint8_t> vals;
    for (std::size_t u : support) vals.push_back(fixed.get(u));
    out.p_titj = design_.probability_of(support, vals);
  }
  if (out.p_titj < kConditioningFloor) {
    out.p_titj = 0.0;
    return out;
  }

  UnitSet free_units;
  for (std::size_t u : {std::min(i, j), std::max(i, j)}) {
    if (!fixed.has(u)) free_units.push_back(u);
  }
  if (free_units.size() > options_.enumeration_limit) {
    throw ResourceError("structured enumeration exceeds the configured limit");
  }

  LocalValues probe = fixed;
  probe.set(i, 0);
  probe.set(j, 0);
  const CountSplit si = split_count_set(ri, probe);
  const CountSplit sj = split_count_set(rj, probe);
  UnitSet shared;
  UnitSet only_i;
  UnitSet only_j;
  std::set_intersection(si.rest.begin(), si.rest.end(), sj.rest.begin(), sj.rest.end(),
                        std::back_inserter(shared));
  std::set_difference(si.rest.begin(), si.rest.end(), shared.begin(), shared.end(),
                      std::back_inserter(only_i));
  std::set_difference(sj.rest.begin(), sj.rest.end(), shared.begin(), shared.end(),
                      std::back_inserter(only_j));
  const std::vector<double> shared_pmf = poisson_binomial_pmf(probs_of(shared, design_));
  const CountTail tail_i = ri.has_count ? CountTail(probs_of(only_i, design_)) : CountTail();
  const CountTail tail_j = rj.has_count ? CountTail(probs_of(only_j, design_)) : CountTail();

  std::array<std::array<KahanSum, 3>, 3> acc;
  const std::size_t combos = std::size_t{1} << free_units.size();
  for (std::size_t m = 0; m < combos; ++m) {
    LocalValues values = fixed;
    double weight = 1.0;
    for (std::size_t k = 0; k < free_units.size(); ++k) {
      const std::uint8_t v = static_cast<std::uint8_t>((m >> k) & 1U);
      values.set(free_units[k], v);
      const double p = design_.p[free_units[k]];
      weight *= v ? p : 1.0 - p;
    }
    const std::uint8_t xi = values.get(i);
    const std::uint8_t xj = values.get(j);
    const long need_i = ri.threshold - known_count(si.known, values);
    const long need_j = rj.threshold - known_count(sj.known, values);

    std::array<std::array<double, 2>, 2> w{};  // P(W_i = a, W_j = b)
    for (std::size_t s = 0; s < shared_pmf.size(); ++s) {
      const double ps = shared_pmf[s];
      const long sl = static_cast<long>(s);
      const std::array<double, 2> pi =
          ri.has_count ? std::array<double, 2>{tail_i.below(need_i - sl), tail_i.at_least(need_i - sl)}
                       : std::array<double, 2>{1.0, 0.0};
      const std::array<double, 2> pj =
          rj.has_count ? std::array<double, 2>{tail_j.below(need_j - sl), tail_j.at_least(need_j - sl)}
                       : std::array<double, 2>{1.0, 0.0};
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) w[a][b] += ps * pi[a] * pj[b];
      }
    }
    for (std::uint8_t a = 0; a < 2; ++a) {
      for (std::uint8_t b = 0; b < 2; ++b) {
        const int za = zbar_from(model_.estimand(), xi, a);
        const int zb = zbar_from(model_.estimand(), xj, b);
        acc[zslot(za)][zslot(zb)] += weight * w[a][b];
      }
    }
  }
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) out.prob[a][b] = acc[a][b].value();
  }
  return out;
}

MarginalExposure DesignContext::marginal_enumerated(std::size_t i, std::uint64_t t) const {
  check_support(i, t);
  const LocalAssignmentSpace space =
      LocalAssignmentSpace::build(model_.gamma(i), design_, options_.enumeration_limit);
  Assignment x(size(), 0);
  KahanSum p_t;
  std::array<KahanSum, 3> acc;
  for (std::size_t m = 0; m < space.weights.size(); ++m) {
    for (std::size_t k = 0; k < space.members.size(); ++k) {
      x[space.members[k]] = static_cast<std::uint8_t>((m >> k) & 1U);
    }
    const UnitExposure e = model_.evaluate(i, x);
    if (e.t_value != t) continue;
    p_t += space.weights[m];
    acc[zslot(e.zbar)] += space.weights[m];
  }
  MarginalExposure out;
  out.p_t = p_t.value();
  if (out.p_t < kConditioningFloor) {
    throw PositivityError("P(T_" + std::to_string(i) + ") is below 1e-300");
  }
  for (std::size_t s = 0; s < 3; ++s) out.prob[s] = acc[s].value() / out.p_t;
  return out;
}

JointExposure DesignContext::joint_enumerated(std::size_t i, std::uint64_t ti, std::size_t j,
                                              std::uint64_t tj) const {
  check_support(i, ti);
  check_support(j, tj);
  UnitSet members;
  std::set_union(model_.gamma(i).begin(), model_.gamma(i).end(), model_.gamma(j).begin(),
                 model_.gamma(j).end(), std::back_inserter(members));
  const LocalAssignmentSpace space =
      LocalAssignmentSpace::build(std::move(members), design_, options_.enumeration_limit);
  Assignment x(size(), 0);
  KahanSum p_ti;
  KahanSum p_tj;
  KahanSum p_titj;
  std::array<std::array<KahanSum, 3>, 3> acc;
  for (std::size_t m = 0; m < space.weights.size(); ++m) {
    for (std::size_t k = 0; k < space.members.size(); ++k) {
      x[space.members[k]] = static_cast<std::uint8_t>((m >> k) & 1U);
    }
    const UnitExposure ei = model_.evaluate(i, x);
    const UnitExposure ej = model_.evaluate(j, x);
    const double w = space.weights[m];
    const bool hit_i = ei.t_value == ti;
    const bool hit_j = ej.t_value == tj;
    if (hit_i) p_ti += w;
    if (hit_j) p_tj += w;
    if (hit_i && hit_j) {
      p_titj += w;
      acc[zslot(ei.zbar)][zslot(ej.zbar)] += w;
    }
  }
  JointExposure out;
  out.p_ti = p_ti.value();
  out.p_tj = p_tj.value();
  out.p_titj = p_titj.value();
  if (out.p_titj < kConditioningFloor) {
    out.p_titj = 0.0;
    return out;
  }
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) out.prob[a][b] = acc[a][b].value() / out.p_titj;
  }
  return out;
}

}  // namespace ifbound
