#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ifbound/design.hpp"
#include "ifbound/estimators.hpp"
#include "ifbound/exposure.hpp"
#include "ifbound/inference.hpp"
#include "ifbound/simulate.hpp"

namespace ifbound {

struct ExperimentPaths {
  std::filesystem::path units;   // unit,x,y
  std::filesystem::path design;  // unit,p
  std::optional<std::filesystem::path> edges;       // src,dst
  std::optional<std::filesystem::path> thresholds;  // unit,t,t2
};

struct Experiment {
  ObservedData data;
  DesignSpec design;
  std::optional<NetworkSpec> network;
};

/// Parses and cross-validates the input CSVs. Schema errors name file and line.
Experiment load_experiment(const ExperimentPaths& paths);

/// A header row followed by comma-separated fields; returns rows with 1-based line numbers.
struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};
std::vector<CsvRow> read_csv(const std::filesystem::path& path,
                             const std::vector<std::string>& header);

using ReportContext = std::vector<std::pair<std::string, std::string>>;

/// %.17g; round-trips through strtod.
std::string format_exact(double x);
/// Fixed 4 decimals.
std::string format_fraction(double x);

/// key=value lines. Fraction fields use 4 decimals; every other number is exact.
void emit_report(std::ostream& out, const BoundReport& report, const ReportContext& context = {});
void emit_report(std::ostream& out, const SimulationResult& result,
                 const ReportContext& context = {});
/// Short human-readable summary.
void print_summary(std::ostream& out, const BoundReport& report);
void print_summary(std::ostream& out, const SimulationResult& result);

/// Raw key=value map; blank lines and '#' comments are skipped.
std::map<std::string, std::string> parse_key_values(std::istream& in);
/// Recovers the numeric fields of an emitted report. Fractions are recomputed
/// from the exact counts, so they match the in-memory values exactly.
BoundReport parse_report(std::istream& in);
ReplicationSummary parse_summary(std::istream& in);

/// rep,tau_true,tau_hat,ci_lower,solver_status_k1,solver_status_k2,wall_ms
void write_replication_rows(std::ostream& out, const std::vector<ReplicationRow>& rows);

}  // namespace ifbound
