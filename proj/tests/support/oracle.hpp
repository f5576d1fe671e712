#pragma once

// Brute-force reference implementations. These read the exposure table
// directly and enumerate every assignment; nothing here calls into the
// library's probability or exposure code.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "ifbound/design.hpp"
#include "ifbound/exposure.hpp"
#include "ifbound/simulate.hpp"

namespace oracle {

using ifbound::Estimand;
using ifbound::NetworkSpec;

inline int close_count(const NetworkSpec& net, const std::vector<std::uint8_t>& x, std::size_t i) {
  int c = 0;
  for (std::size_t j : net.close[i]) {
    if (j != i) c += x[j];
  }
  return c;
}

inline int nonclose_count(const NetworkSpec& net, const std::vector<std::uint8_t>& x,
                          std::size_t i) {
  int c = 0;
  for (std::size_t j : net.nonclose[i]) c += x[j];
  return c;
}

struct Exposure {
  std::vector<std::uint8_t> t;  // T_i as X values on its support, ascending unit order
  int zbar = -1;
  bool in_r = true;
};

inline Exposure exposure(Estimand e, const NetworkSpec& net, const std::vector<std::uint8_t>& x,
                         std::size_t i) {
  const int xi = x[i];
  const int w = close_count(net, x, i) >= net.t[i] ? 1 : 0;
  const int w2 = nonclose_count(net, x, i) >= net.t2[i] ? 1 : 0;
  Exposure out;
  switch (e) {
    case Estimand::basic:
      out.zbar = xi;
      break;
    case Estimand::basic_network:
      out.zbar = (xi == 1 && w == 1) ? 1 : (xi == 0 && w == 0) ? 0 : -1;
      break;
    case Estimand::indirect:
      out.t = {static_cast<std::uint8_t>(xi)};
      out.zbar = w;
      break;
    case Estimand::nonneighbors:
      for (std::size_t j : net.close[i]) out.t.push_back(x[j]);
      out.zbar = w2;
      break;
    case Estimand::control:
      out.in_r = xi == 0;
      out.zbar = out.in_r ? w : -1;
      break;
    case Estimand::treated:
      out.in_r = xi == 1;
      out.zbar = out.in_r ? w : -1;
      break;
  }
  return out;
}

inline std::uint64_t pack(const std::vector<std::uint8_t>& t) {
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < t.size(); ++k) v |= static_cast<std::uint64_t>(t[k]) << k;
  return v;
}

inline std::vector<std::uint8_t> unpack(std::uint64_t m, std::size_t n) {
  std::vector<std::uint8_t> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = static_cast<std::uint8_t>((m >> k) & 1U);
  return x;
}

inline double weight(const std::vector<double>& p, const std::vector<std::uint8_t>& x) {
  double w = 1.0;
  for (std::size_t k = 0; k < x.size(); ++k) w *= x[k] ? p[k] : 1.0 - p[k];
  return w;
}

/// P(Z̄_i = a | T_i = t) by summing over all 2^N assignments.
struct Marginal {
  double p_t = 0.0;
  double prob[3] = {0, 0, 0};  // zbar + 1
};

inline Marginal marginal(Estimand e, const NetworkSpec& net, const std::vector<double>& p,
                         std::size_t i, std::uint64_t t) {
  const std::size_t n = p.size();
  Marginal m;
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    const auto x = unpack(mask, n);
    const auto ex = exposure(e, net, x, i);
    if (pack(ex.t) != t) continue;
    const double w = weight(p, x);
    m.p_t += w;
    m.prob[ex.zbar + 1] += w;
  }
  for (double& q : m.prob) q /= m.p_t;
  return m;
}

struct Joint {
  double p_ti = 0.0;
  double p_tj = 0.0;
  double p_titj = 0.0;
  double prob[3][3] = {};
};

inline Joint joint(Estimand e, const NetworkSpec& net, const std::vector<double>& p,
                   std::size_t i, std::uint64_t ti, std::size_t j, std::uint64_t tj) {
  const std::size_t n = p.size();
  Joint r;
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    const auto x = unpack(mask, n);
    const auto ei = exposure(e, net, x, i);
    const auto ej = exposure(e, net, x, j);
    const double w = weight(p, x);
    const bool hi = pack(ei.t) == ti;
    const bool hj = pack(ej.t) == tj;
    if (hi) r.p_ti += w;
    if (hj) r.p_tj += w;
    if (hi && hj) {
      r.p_titj += w;
      r.prob[ei.zbar + 1][ej.zbar + 1] += w;
    }
  }
  if (r.p_titj > 0) {
    for (auto& row : r.prob) {
      for (double& q : row) q /= r.p_titj;
    }
  }
  return r;
}

inline double poisson_tail(const std::vector<double>& p, std::size_t threshold) {
  double total = 0.0;
  const std::size_t n = p.size();
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    const auto x = unpack(mask, n);
    std::size_t c = 0;
    for (auto b : x) c += b;
    if (c >= threshold) total += weight(p, x);
  }
  return total;
}

/// φ*_i = 1 iff Y_i is a function of T_i on R_i, checked over all 2^N assignments.
inline std::vector<std::uint8_t> ground_truth(const ifbound::OutcomeModelParams& params,
                                              const NetworkSpec& net, Estimand e) {
  const std::size_t n = params.size();
  std::vector<std::vector<std::uint8_t>> ys(1ULL << n);
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    ys[mask] = ifbound::simulate_outcomes(params, net, unpack(mask, n));
  }
  std::vector<std::uint8_t> phi(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::map<std::uint64_t, int> seen;
    for (std::uint64_t mask = 0; mask < (1ULL << n) && phi[i]; ++mask) {
      const auto x = unpack(mask, n);
      const auto ex = exposure(e, net, x, i);
      if (!ex.in_r) continue;
      const auto [it, fresh] = seen.emplace(pack(ex.t), ys[mask][i]);
      if (!fresh && it->second != ys[mask][i]) phi[i] = 0;
    }
  }
  return phi;
}

/// Small random directed network with random thresholds.
inline NetworkSpec random_network(std::size_t n, std::mt19937_64& rng, double edge_prob = 0.3,
                                  int max_t = 2) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::bernoulli_distribution edge(edge_prob);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b && edge(rng)) edges.emplace_back(a, b);
    }
  }
  NetworkSpec net = NetworkSpec::from_edges(n, edges, true);
  std::uniform_int_distribution<int> th(1, max_t);
  for (std::size_t i = 0; i < n; ++i) net.set_thresholds(i, th(rng), th(rng));
  return net;
}

inline std::vector<double> random_probs(std::size_t n, std::mt19937_64& rng, double lo = 0.15,
                                        double hi = 0.85) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> p(n);
  for (double& q : p) q = u(rng);
  return p;
}

}  // namespace oracle
