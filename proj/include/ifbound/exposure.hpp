#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ifbound {

using Assignment = std::vector<std::uint8_t>;
using UnitSet = std::vector<std::size_t>;

enum class Estimand { basic, basic_network, indirect, nonneighbors, control, treated };

std::string_view to_string(Estimand e);
/// Accepts the CLI spellings (basic-network, tr, ...) and the enum names.
Estimand parse_estimand(std::string_view name);
bool requires_network(Estimand e);

/// Close (η_i) and non-close (η_i^(2)) neighborhoods with their thresholds.
///
/// close[i] always contains i. Sets are stored sorted and deduplicated.
struct NetworkSpec {
  std::size_t n = 0;
  std::vector<UnitSet> close;
  std::vector<UnitSet> nonclose;
  std::vector<int> t;
  std::vector<int> t2;

  /// Network with no edges: η_i = {i}, η_i^(2) = ∅.
  static NetworkSpec isolated(std::size_t n);

  /// Directed edges src -> dst place dst in η_src. η^(2) is the distance-2
  /// set along out-edges, minus η. Thresholds default to 1.
  static NetworkSpec from_edges(std::size_t n,
                                std::span<const std::pair<std::size_t, std::size_t>> edges,
                                bool derive_distance2 = true);

  void set_thresholds(std::size_t unit, int close_threshold, int nonclose_threshold);

  /// Throws ConfigError when any structural invariant is broken.
  void validate() const;
};

struct EstimandSpec {
  Estimand variant = Estimand::basic;
  std::optional<NetworkSpec> network;

  void validate(std::size_t n) const;
};

/// Thresholded count of treated close neighbors, excluding the unit itself.
Assignment compute_W(std::span<const std::uint8_t> x, const NetworkSpec& network);
/// Thresholded count of treated non-close neighbors.
Assignment compute_W2(std::span<const std::uint8_t> x, const NetworkSpec& network);

/// Exposure of a single unit under one assignment.
struct UnitExposure {
  std::uint64_t t_value = 0;  // bit k = X of the k-th member of t_support
  std::int8_t zbar = -1;      // {1, 0, -1}
  std::uint8_t w = 0;         // W_i
  std::uint8_t w2 = 0;        // W_i^(2)
};

struct ExposureRealization {
  std::vector<std::uint64_t> t_value;
  std::vector<std::int8_t> zbar;
  Assignment w;
  Assignment w2;

  std::size_t size() const { return zbar.size(); }
};

/// How one unit's (T_i, Z̄_i) depends on X, specialised per estimand.
///
/// Z̄_i is a function of X_i and one thresholded count over count_set.
/// T_i is the subvector X_{t_support} (empty support = constant T).
struct UnitRule {
  std::size_t unit = 0;
  UnitSet count_set;
  int threshold = 0;
  bool has_count = false;
  UnitSet t_support;
  UnitSet gamma;  // minimal dependency neighborhood Γ_i
};

/// Maps a 2-bit local state (own treatment, thresholded count) to Z̄.
std::int8_t zbar_from(Estimand e, std::uint8_t own, std::uint8_t w);

class ExposureModel {
 public:
  ExposureModel() = default;
  /// For Estimand::basic the network may be absent.
  ExposureModel(const EstimandSpec& spec, std::size_t n);

  Estimand estimand() const { return estimand_; }
  std::size_t size() const { return rules_.size(); }
  const UnitRule& rule(std::size_t i) const { return rules_[i]; }
  const UnitSet& gamma(std::size_t i) const { return rules_[i].gamma; }
  /// Units j whose Γ_j contains i.
  const UnitSet& reverse_gamma(std::size_t i) const { return reverse_[i]; }
  const NetworkSpec& network() const { return network_; }

  /// Number of distinct values T_i can take.
  std::uint64_t t_cardinality(std::size_t i) const;

  UnitExposure evaluate(std::size_t i, std::span<const std::uint8_t> x) const;
  ExposureRealization realize(std::span<const std::uint8_t> x) const;

 private:
  Estimand estimand_ = Estimand::basic;
  NetworkSpec network_;
  std::vector<UnitRule> rules_;
  std::vector<UnitSet> reverse_;
};

/// Exposures of every unit for an observed X.
ExposureRealization realize_exposures(std::span<const std::uint8_t> x,
                                      const ExposureModel& model);

}  // namespace ifbound
