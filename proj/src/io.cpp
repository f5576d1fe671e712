#include "ifbound/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ifbound/errors.hpp"

namespace ifbound {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

std::size_t parse_index(const std::string& s, const std::filesystem::path& path, std::size_t line,
                        const char* what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(where(path, line) + what + " '" + s + "' is not a nonnegative integer");
  }
  return v;
}

int parse_int(const std::string& s, const std::filesystem::path& path, std::size_t line,
              const char* what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(where(path, line) + what + " '" + s + "' is not an integer");
  }
  return v;
}

std::uint8_t parse_binary(const std::string& s, const std::filesystem::path& path,
                          std::size_t line, const char* what) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw ConfigError(where(path, line) + what + " must be 0 or 1, got '" + s + "'");
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line,
                    const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(where(path, line) + what + " '" + s + "' is not a number");
  }
  return v;
}

/// Rows keyed by a unit column covering 0..n-1 exactly once.
template <class F>
void for_each_unit_row(const std::vector<CsvRow>& rows, const std::filesystem::path& path,
                       std::size_t n, F&& f) {
  std::vector<std::uint8_t> seen(n, 0);
  for (const auto& r : rows) {
    const std::size_t u = parse_index(r.fields[0], path, r.line, "unit");
    if (u >= n) {
      throw ConfigError(where(path, r.line) + "unit " + std::to_string(u) +
                        " outside [0," + std::to_string(n) + ")");
    }
    if (seen[u]) throw ConfigError(where(path, r.line) + "duplicate unit " + std::to_string(u));
    seen[u] = 1;
    f(u, r);
  }
}

}  // namespace

std::vector<CsvRow> read_csv(const std::filesystem::path& path,
                             const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  std::vector<CsvRow> rows;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_commas(line);
    if (!have_header) {
      if (fields != header) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        throw ConfigError(where(path, lineno) + "expected header '" + want + "'");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw ConfigError(where(path, lineno) + "expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(fields.size()));
    }
    rows.push_back({lineno, std::move(fields)});
  }
  if (!have_header) throw ConfigError(path.string() + ": empty file, header row missing");
  return rows;
}

Experiment load_experiment(const ExperimentPaths& paths) {
  Experiment ex;
  const auto units = read_csv(paths.units, {"unit", "x", "y"});
  const std::size_t n = units.size();
  if (n == 0) throw ConfigError(paths.units.string() + ": no units");
  ex.data.x.assign(n, 0);
  ex.data.y.assign(n, 0);
  for_each_unit_row(units, paths.units, n, [&](std::size_t u, const CsvRow& r) {
    ex.data.x[u] = parse_binary(r.fields[1], paths.units, r.line, "x");
    ex.data.y[u] = parse_binary(r.fields[2], paths.units, r.line, "y");
  });

  const auto design = read_csv(paths.design, {"unit", "p"});
  if (design.size() != n) {
    throw ConfigError(paths.design.string() + ": " + std::to_string(design.size()) +
                      " rows but units file has " + std::to_string(n));
  }
  ex.design.p.assign(n, 0.0);
  for_each_unit_row(design, paths.design, n, [&](std::size_t u, const CsvRow& r) {
    const double p = parse_double(r.fields[1], paths.design, r.line, "p");
    if (!(p > 0.0 && p < 1.0)) {
      throw ConfigError(where(paths.design, r.line) + "unit " + std::to_string(u) +
                        " has p = " + r.fields[1] +
                        "; every unit needs 0 < p < 1 (positivity assumption)");
    }
    ex.design.p[u] = p;
  });

  if (paths.edges) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& r : read_csv(*paths.edges, {"src", "dst"})) {
      const std::size_t s = parse_index(r.fields[0], *paths.edges, r.line, "src");
      const std::size_t d = parse_index(r.fields[1], *paths.edges, r.line, "dst");
      if (s >= n || d >= n) {
        throw ConfigError(where(*paths.edges, r.line) + "edge references a unit outside [0," +
                          std::to_string(n) + ")");
      }
      edges.emplace_back(s, d);
    }
    ex.network = NetworkSpec::from_edges(n, edges, true);
  }
  if (paths.thresholds) {
    if (!ex.network) ex.network = NetworkSpec::isolated(n);
    const auto rows = read_csv(*paths.thresholds, {"unit", "t", "t2"});
    for_each_unit_row(rows, *paths.thresholds, n, [&](std::size_t u, const CsvRow& r) {
      const int t = parse_int(r.fields[1], *paths.thresholds, r.line, "t");
      const int t2 = parse_int(r.fields[2], *paths.thresholds, r.line, "t2");
      if (t < 1 || t2 < 1) {
        throw ConfigError(where(*paths.thresholds, r.line) + "thresholds must be at least 1");
      }
      ex.network->set_thresholds(u, t, t2);
    });
  }
  ex.data.validate();
  ex.design.validate(n);
  if (ex.network) ex.network->validate();
  return ex;
}

std::string format_exact(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_fraction(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

namespace {

void kv(std::ostream& out, const std::string& key, const std::string& value) {
  out << key << '=' << value << '\n';
}

void kv(std::ostream& out, const std::string& key, double value) {
  kv(out, key, format_exact(value));
}

void kv_count(std::ostream& out, const std::string& key, std::uint64_t value) {
  kv(out, key, std::to_string(value));
}

void emit_context(std::ostream& out, const ReportContext& context) {
  for (const auto& [k, v] : context) kv(out, k, v);
}

void emit_budget(std::ostream& out, const SolveBudget& b) {
  kv_count(out, "node_budget", b.max_nodes);
  kv(out, "time_budget_ms", std::to_string(b.time_limit_ms));
  kv(out, "gap_tolerance", b.gap_tolerance);
}

void emit_backend(std::ostream& out, const MomentBackend& b) {
  kv(out, "backend", std::string(to_string(b.mode)));
  kv_count(out, "mc_reps", b.replications);
  kv_count(out, "mc_seed", b.seed);
}

using KeyValues = std::map<std::string, std::string>;

const std::string& need(const KeyValues& m, const std::string& key) {
  const auto it = m.find(key);
  if (it == m.end()) throw ConfigError("report is missing key '" + key + "'");
  return it->second;
}

double need_double(const KeyValues& m, const std::string& key) {
  const std::string& s = need(m, key);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    // from_chars rejects "inf"/"nan" spellings from printf
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw ConfigError("report key '" + key + "' is not numeric");
  }
  return v;
}

std::uint64_t need_count(const KeyValues& m, const std::string& key) {
  const std::string& s = need(m, key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("report key '" + key + "' is not a count");
  }
  return v;
}

SolveStatus parse_status(const std::string& s) {
  if (s == "optimal") return SolveStatus::optimal;
  if (s == "budget_exhausted") return SolveStatus::budget_exhausted;
  throw ConfigError("unknown solver status '" + s + "'");
}

}  // namespace

void emit_report(std::ostream& out, const BoundReport& r, const ReportContext& context) {
  out << "# ifbound analyze report\n";
  kv(out, "mode", "analyze");
  emit_context(out, context);
  kv_count(out, "n", r.n);
  kv(out, "estimand", std::string(to_string(r.estimand)));
  kv(out, "alpha", r.alpha);
  kv(out, "z", r.z);
  if (r.settings.z_override) kv(out, "z_override", *r.settings.z_override);
  kv(out, "variance_floor_enabled", r.settings.use_variance_floor ? "1" : "0");
  emit_backend(out, r.settings.backend);
  emit_budget(out, r.settings.budget);
  kv(out, "delta_hajek", r.delta_hajek);
  kv(out, "tau_hat", r.tau_hat);
  kv(out, "tau_hat_fraction", format_fraction(r.tau_hat_fraction));
  kv(out, "ci_lower", r.ci_lower);
  kv(out, "ci_lower_fraction", format_fraction(r.ci_lower_fraction));
  for (const auto& b : r.per_k) {
    const std::string p = "k" + std::to_string(b.k) + ".";
    kv(out, p + "point_value", b.point_value);
    kv(out, p + "variance_floor", b.variance_floor);
    kv_count(out, p + "q_pairs", b.q_pairs);
    kv_count(out, p + "excluded_pairs", b.excluded_pairs);
    kv(out, p + "status", std::string(to_string(b.solve.status)));
    kv(out, p + "upper_bound", b.solve.upper_bound);
    kv(out, p + "incumbent_value", b.solve.incumbent_value);
    kv(out, p + "gap", b.solve.gap);
    kv_count(out, p + "nodes_explored", b.solve.nodes_explored);
  }
}

void emit_report(std::ostream& out, const SimulationResult& res, const ReportContext& context) {
  const SimConfig& c = res.config;
  const ReplicationSummary& s = res.summary;
  out << "# ifbound simulate report\n";
  kv(out, "mode", "simulate");
  emit_context(out, context);
  kv_count(out, "n", c.n);
  kv(out, "estimand", std::string(to_string(c.estimand)));
  kv(out, "alpha", c.alpha);
  kv_count(out, "seed", c.seed);
  kv_count(out, "replications", c.replications);
  kv(out, "treat_prob", c.treat_prob);
  kv(out, "scale_a0", c.scales.a0);
  kv(out, "scale_a1", c.scales.a1);
  kv(out, "scale_a2", c.scales.a2);
  kv(out, "min_partners", std::to_string(c.network.min_partners));
  kv(out, "max_partners", std::to_string(c.network.max_partners));
  kv(out, "close_threshold", std::to_string(c.network.close_threshold));
  kv(out, "nonclose_threshold", std::to_string(c.network.nonclose_threshold));
  kv(out, "variance_floor_enabled", c.use_variance_floor ? "1" : "0");
  emit_backend(out, c.backend);
  emit_budget(out, c.budget);
  kv_count(out, "failures", s.failures);
  kv(out, "actual_value_fraction", format_fraction(s.actual_value_fraction));
  kv(out, "bias", format_fraction(s.bias));
  kv(out, "rmse", format_fraction(s.rmse));
  kv(out, "coverage", format_fraction(s.coverage));
  kv(out, "mean_width", format_fraction(s.mean_width));
  kv(out, "actual_value_fraction_exact", s.actual_value_fraction);
  kv(out, "bias_exact", s.bias);
  kv(out, "rmse_exact", s.rmse);
  kv(out, "coverage_exact", s.coverage);
  kv(out, "mean_width_exact", s.mean_width);
}

void print_summary(std::ostream& out, const BoundReport& r) {
  out << "estimand " << to_string(r.estimand) << ", N = " << r.n << ", alpha = " << r.alpha
      << "\n  point estimate  tau_hat  = " << format_exact(r.tau_hat) << " ("
      << format_fraction(r.tau_hat_fraction) << " of N)"
      << "\n  lower bound     ci_lower = " << format_exact(r.ci_lower) << " ("
      << format_fraction(r.ci_lower_fraction) << " of N)\n";
  for (const auto& b : r.per_k) {
    out << "  k=" << b.k << ": max Phi = " << format_exact(b.point_value)
        << ", upper bound = " << format_exact(b.solve.upper_bound) << " ["
        << to_string(b.solve.status) << ", " << b.solve.nodes_explored << " nodes]\n";
  }
}

void print_summary(std::ostream& out, const SimulationResult& res) {
  const auto& s = res.summary;
  out << "estimand " << to_string(res.config.estimand) << ", N = " << s.n << ", R = "
      << s.replications << " (" << s.failures << " failed)"
      << "\n  actual value " << format_fraction(s.actual_value_fraction)
      << "\n  bias         " << format_fraction(s.bias)
      << "\n  rmse         " << format_fraction(s.rmse)
      << "\n  coverage     " << format_fraction(s.coverage)
      << "\n  mean width   " << format_fraction(s.mean_width) << '\n';
}

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  KeyValues m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("report line " + std::to_string(lineno) + ": expected key=value");
    }
    m[t.substr(0, eq)] = t.substr(eq + 1);
  }
  return m;
}

BoundReport parse_report(std::istream& in) {
  const KeyValues m = parse_key_values(in);
  BoundReport r;
  r.n = need_count(m, "n");
  r.estimand = parse_estimand(need(m, "estimand"));
  r.alpha = need_double(m, "alpha");
  r.z = need_double(m, "z");
  r.settings.alpha = r.alpha;
  if (m.count("z_override")) r.settings.z_override = need_double(m, "z_override");
  r.settings.use_variance_floor = need(m, "variance_floor_enabled") == "1";
  r.settings.backend.mode = parse_backend(need(m, "backend"));
  r.settings.backend.replications = need_count(m, "mc_reps");
  r.settings.backend.seed = need_count(m, "mc_seed");
  r.settings.budget.max_nodes = need_count(m, "node_budget");
  r.settings.budget.time_limit_ms = static_cast<std::int64_t>(need_double(m, "time_budget_ms"));
  r.settings.budget.gap_tolerance = need_double(m, "gap_tolerance");
  r.delta_hajek = need_double(m, "delta_hajek");
  r.tau_hat = need_double(m, "tau_hat");
  r.ci_lower = need_double(m, "ci_lower");
  const double big_n = static_cast<double>(r.n);
  r.tau_hat_fraction = r.tau_hat / big_n;
  r.ci_lower_fraction = r.ci_lower / big_n;
  for (int k = 1; k <= 2; ++k) {
    BranchReport& b = r.per_k[static_cast<std::size_t>(k - 1)];
    const std::string p = "k" + std::to_string(k) + ".";
    b.k = k;
    b.point_value = need_double(m, p + "point_value");
    b.variance_floor = need_double(m, p + "variance_floor");
    b.q_pairs = need_count(m, p + "q_pairs");
    b.excluded_pairs = need_count(m, p + "excluded_pairs");
    b.solve.status = parse_status(need(m, p + "status"));
    b.solve.upper_bound = need_double(m, p + "upper_bound");
    b.solve.incumbent_value = need_double(m, p + "incumbent_value");
    b.solve.gap = need_double(m, p + "gap");
    b.solve.nodes_explored = need_count(m, p + "nodes_explored");
  }
  return r;
}

ReplicationSummary parse_summary(std::istream& in) {
  const KeyValues m = parse_key_values(in);
  ReplicationSummary s;
  s.n = need_count(m, "n");
  s.replications = need_count(m, "replications");
  s.failures = need_count(m, "failures");
  s.alpha = need_double(m, "alpha");
  s.actual_value_fraction = need_double(m, "actual_value_fraction_exact");
  s.bias = need_double(m, "bias_exact");
  s.rmse = need_double(m, "rmse_exact");
  s.coverage = need_double(m, "coverage_exact");
  s.mean_width = need_double(m, "mean_width_exact");
  return s;
}

void write_replication_rows(std::ostream& out, const std::vector<ReplicationRow>& rows) {
  out << "rep,tau_true,tau_hat,ci_lower,solver_status_k1,solver_status_k2,wall_ms\n";
  for (const auto& r : rows) {
    out << r.rep << ',' << format_exact(r.tau_true) << ',' << format_exact(r.tau_hat) << ','
        << format_exact(r.ci_lower) << ',' << r.status_k1 << ',' << r.status_k2 << ','
        << format_fraction(r.wall_ms) << '\n';
  }
}

}  // namespace ifbound
