#include "ifbound/exposure.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "ifbound/errors.hpp"

namespace ifbound {
namespace {

void sort_unique(UnitSet& s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
}

UnitSet set_union(const UnitSet& a, const UnitSet& b) {
  UnitSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::uint8_t thresholded_count(const UnitSet& members, std::size_t skip, int threshold,
                               std::span<const std::uint8_t> x) {
  int count = 0;
  for (std::size_t j : members) {
    if (j != skip && x[j]) ++count;
  }
  return count >= threshold ? 1 : 0;
}

constexpr std::array<std::pair<std::string_view, Estimand>, 9> kNames{{
    {"basic", Estimand::basic},
    {"basic-network", Estimand::basic_network},
    {"basic_network", Estimand::basic_network},
    {"indirect", Estimand::indirect},
    {"nonneighbors", Estimand::nonneighbors},
    {"nonneighbor", Estimand::nonneighbors},
    {"control", Estimand::control},
    {"treated", Estimand::treated},
    {"tr", Estimand::treated},
}};

}  // namespace

std::string_view to_string(Estimand e) {
  switch (e) {
    case Estimand::basic: return "basic";
    case Estimand::basic_network: return "basic-network";
    case Estimand::indirect: return "indirect";
    case Estimand::nonneighbors: return "nonneighbors";
    case Estimand::control: return "control";
    case Estimand::treated: return "treated";
  }
  return "unknown";
}

Estimand parse_estimand(std::string_view name) {
  for (const auto& [key, value] : kNames) {
    if (key == name) return value;
  }
  throw ConfigError("unknown estimand variant '" + std::string(name) + "'");
}

bool requires_network(Estimand e) { return e != Estimand::basic; }

NetworkSpec NetworkSpec::isolated(std::size_t n) {
  NetworkSpec net;
  net.n = n;
  net.close.resize(n);
  net.nonclose.resize(n);
  for (std::size_t i = 0; i < n; ++i) net.close[i] = {i};
  net.t.assign(n, 1);
  net.t2.assign(n, 1);
  return net;
}

NetworkSpec NetworkSpec::from_edges(std::size_t n,
                                    std::span<const std::pair<std::size_t, std::size_t>> edges,
                                    bool derive_distance2) {
  NetworkSpec net = isolated(n);
  std::vector<UnitSet> out(n);
  for (const auto& [src, dst] : edges) {
    if (src >= n || dst >= n) {
      throw ConfigError("edge (" + std::to_string(src) + "," + std::to_string(dst) +
                        ") references a unit outside [0," + std::to_string(n) + ")");
    }
    if (src != dst) out[src].push_back(dst);
  }
  for (std::size_t i = 0; i < n; ++i) {
    sort_unique(out[i]);
    net.close[i] = out[i];
    net.close[i].push_back(i);
    sort_unique(net.close[i]);
  }
  if (derive_distance2) {
    for (std::size_t i = 0; i < n; ++i) {
      UnitSet second;
      for (std::size_t j : out[i]) {
        for (std::size_t k : out[j]) {
          if (!std::binary_search(net.close[i].begin(), net.close[i].end(), k)) {
            second.push_back(k);
          }
        }
      }
      sort_unique(second);
      net.nonclose[i] = std::move(second);
    }
  }
  return net;
}

void NetworkSpec::set_thresholds(std::size_t unit, int close_threshold, int nonclose_threshold) {
  if (unit >= n) throw ConfigError("threshold row for unit " + std::to_string(unit) + " out of range");
  t[unit] = close_threshold;
  t2[unit] = nonclose_threshold;
}

void NetworkSpec::validate() const {
  if (close.size() != n || nonclose.size() != n || t.size() != n || t2.size() != n) {
    throw ConfigError("network arrays do not match unit count " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = close[i];
    const auto& nc = nonclose[i];
    if (!std::is_sorted(c.begin(), c.end()) || !std::is_sorted(nc.begin(), nc.end()) ||
        std::adjacent_find(c.begin(), c.end()) != c.end() ||
        std::adjacent_find(nc.begin(), nc.end()) != nc.end()) {
      throw ConfigError("neighborhoods of unit " + std::to_string(i) + " must be sorted and unique");
    }
    if (!std::binary_search(c.begin(), c.end(), i)) {
      throw ConfigError("close neighborhood of unit " + std::to_string(i) + " must contain the unit");
    }
    if ((!c.empty() && c.back() >= n) || (!nc.empty() && nc.back() >= n)) {
      throw ConfigError("neighborhood of unit " + std::to_string(i) + " references unknown unit");
    }
    for (std::size_t j : nc) {
      if (std::binary_search(c.begin(), c.end(), j)) {
        throw ConfigError("close and non-close neighborhoods of unit " + std::to_string(i) +
                          " overlap at unit " + std::to_string(j));
      }
    }
    if (t[i] < 1 || t2[i] < 1) {
      throw ConfigError("thresholds of unit " + std::to_string(i) + " must be >= 1");
    }
  }
}

void EstimandSpec::validate(std::size_t n) const {
  if (!requires_network(variant)) return;
  if (!network) {
    throw ConfigError("estimand '" + std::string(to_string(variant)) + "' requires a network");
  }
  if (network->n != n) {
    throw ConfigError("network has " + std::to_string(network->n) + " units, expected " +
                      std::to_string(n));
  }
  network->validate();
}

Assignment compute_W(std::span<const std::uint8_t> x, const NetworkSpec& network) {
  Assignment w(network.n, 0);
  for (std::size_t i = 0; i < network.n; ++i) {
    w[i] = thresholded_count(network.close[i], i, network.t[i], x);
  }
  return w;
}

Assignment compute_W2(std::span<const std::uint8_t> x, const NetworkSpec& network) {
  Assignment w(network.n, 0);
  for (std::size_t i = 0; i < network.n; ++i) {
    w[i] = thresholded_count(network.nonclose[i], network.n, network.t2[i], x);
  }
  return w;
}

std::int8_t zbar_from(Estimand e, std::uint8_t own, std::uint8_t w) {
  switch (e) {
    case Estimand::basic: return static_cast<std::int8_t>(own);
    case Estimand::basic_network:
      if (own == 1 && w == 1) return 1;
      if (own == 0 && w == 0) return 0;
      return -1;
    case Estimand::indirect:
    case Estimand::nonneighbors: return static_cast<std::int8_t>(w);
    case Estimand::control: return own == 0 ? static_cast<std::int8_t>(w) : std::int8_t{-1};
    case Estimand::treated: return own == 1 ? static_cast<std::int8_t>(w) : std::int8_t{-1};
  }
  return -1;
}

ExposureModel::ExposureModel(const EstimandSpec& spec, std::size_t n) : estimand_(spec.variant) {
  spec.validate(n);
  network_ = spec.network ? *spec.network : NetworkSpec::isolated(n);
  rules_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    UnitRule& r = rules_[i];
    r.unit = i;
    switch (estimand_) {
      case Estimand::basic:
        break;
      case Estimand::nonneighbors:
        r.count_set = network_.nonclose[i];
        r.threshold = network_.t2[i];
        r.has_count = true;
        r.t_support = network_.close[i];
        if (r.t_support.size() > 63) {
          throw ResourceError("close neighborhood of unit " + std::to_string(i) +
                            " too large for a vector-valued exposure (max 63)");
        }
        break;
      default:
        for (std::size_t j : network_.close[i]) {
          if (j != i) r.count_set.push_back(j);
        }
        r.threshold = network_.t[i];
        r.has_count = true;
        if (estimand_ == Estimand::indirect) r.t_support = {i};
        break;
    }
    r.gamma = set_union(r.t_support, UnitSet{i});
    const bool reachable = r.has_count && r.count_set.size() >= static_cast<std::size_t>(r.threshold);
    if (reachable) r.gamma = set_union(r.gamma, r.count_set);
  }
  reverse_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : rules_[i].gamma) reverse_[j].push_back(i);
  }
}

std::uint64_t ExposureModel::t_cardinality(std::size_t i) const {
  return std::uint64_t{1} << rules_[i].t_support.size();
}

UnitExposure ExposureModel::evaluate(std::size_t i, std::span<const std::uint8_t> x) const {
  const UnitRule& r = rules_[i];
  UnitExposure out;
  for (std::size_t k = 0; k < r.t_support.size(); ++k) {
    if (x[r.t_support[k]]) out.t_value |= std::uint64_t{1} << k;
  }
  out.w = thresholded_count(network_.close[i], i, network_.t[i], x);
  out.w2 = thresholded_count(network_.nonclose[i], network_.n, network_.t2[i], x);
  const std::uint8_t w = estimand_ == Estimand::nonneighbors ? out.w2 : out.w;
  out.zbar = zbar_from(estimand_, x[i], r.has_count ? w : std::uint8_t{0});
  return out;
}

ExposureRealization ExposureModel::realize(std::span<const std::uint8_t> x) const {
  const std::size_t n = rules_.size();
  if (x.size() != n) {
    throw ConfigError("assignment has " + std::to_string(x.size()) + " entries, expected " +
                      std::to_string(n));
  }
  ExposureRealization out;
  out.t_value.resize(n);
  out.zbar.resize(n);
  out.w.resize(n);
  out.w2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const UnitExposure e = evaluate(i, x);
    out.t_value[i] = e.t_value;
    out.zbar[i] = e.zbar;
    out.w[i] = e.w;
    out.w2[i] = e.w2;
  }
  return out;
}

ExposureRealization realize_exposures(std::span<const std::uint8_t> x, const ExposureModel& model) {
  return model.realize(x);
}

}  // namespace ifbound
