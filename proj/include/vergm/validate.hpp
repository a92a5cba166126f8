#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vergm/csv.hpp"
#include "vergm/network.hpp"
#include "vergm/node_table.hpp"

namespace vergm {

enum class IssueCode {
  MissingColumn,
  BadNumber,
  NonFiniteValue,
  MissingValue,
  OutOfRangeShare,
  NegativePopulation,
  BadPosition,
  DuplicateNodeId,
  UnknownId,
  SelfLoop,
  DuplicateDyad,
  NonIntegerCount,
  NegativeCount,
  EmptyTable,
};

inline std::string issue_code_name(IssueCode code) {
  switch (code) {
    case IssueCode::MissingColumn: return "missing_column";
    case IssueCode::BadNumber: return "bad_number";
    case IssueCode::NonFiniteValue: return "non_finite_value";
    case IssueCode::MissingValue: return "missing_value";
    case IssueCode::OutOfRangeShare: return "out_of_range_share";
    case IssueCode::NegativePopulation: return "negative_population";
    case IssueCode::BadPosition: return "bad_position";
    case IssueCode::DuplicateNodeId: return "duplicate_node_id";
    case IssueCode::UnknownId: return "unknown_id";
    case IssueCode::SelfLoop: return "self_loop";
    case IssueCode::DuplicateDyad: return "duplicate_dyad";
    case IssueCode::NonIntegerCount: return "non_integer_count";
    case IssueCode::NegativeCount: return "negative_count";
    case IssueCode::EmptyTable: return "empty_table";
  }
  return "?";
}

struct ValidationIssue {
  IssueCode code;
  std::string file;
  std::size_t line = 0;   // 1-based source line; 0 for file-level issues
  std::string column;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  std::int64_t n_nodes = 0;
  std::int64_t n_edges = 0;          // stored (positive) dyads
  std::int64_t total_count = 0;
  std::vector<std::string> covariates;

  bool ok() const { return issues.empty(); }

  void add(IssueCode code, const std::string& file, std::size_t line, const std::string& column,
           const std::string& message) {
    issues.push_back({code, file, line, column, message});
  }

  std::string summary() const {
    std::string out = "nodes=" + std::to_string(n_nodes) + " edges=" + std::to_string(n_edges) +
                      " total_count=" + std::to_string(total_count) +
                      " covariates=" + std::to_string(covariates.size()) +
                      " violations=" + std::to_string(issues.size());
    return out;
  }
};

namespace detail {

constexpr const char* kNodeRequired[] = {"node_id", "lat", "lon", "population", "state", "region"};

inline bool parse_finite(const CsvTable& table, std::size_t row, int col,
                         ValidationReport& report, double& out) {
  const std::string& text = table.cell(row, col);
  if (text.empty()) {
    report.add(IssueCode::MissingValue, table.path, table.line_numbers[row],
               table.header[static_cast<std::size_t>(col)], "missing value");
    return false;
  }
  if (!parse_double(text, out)) {
    report.add(IssueCode::BadNumber, table.path, table.line_numbers[row],
               table.header[static_cast<std::size_t>(col)], "not a decimal number: '" + text + "'");
    return false;
  }
  if (!std::isfinite(out)) {
    report.add(IssueCode::NonFiniteValue, table.path, table.line_numbers[row],
               table.header[static_cast<std::size_t>(col)], "non-finite value");
    return false;
  }
  return true;
}

}  // namespace detail

/// Parses and checks the node CSV (header: node_id,lat,lon,population,state,
/// region,<covariate...>). Returns a table when structurally loadable; all
/// violations are recorded in the report either way.
inline std::optional<NodeTable> load_node_table(const std::filesystem::path& path,
                                                ValidationReport& report) {
  CsvTable table;
  try {
    table = read_csv(path);
  } catch (const std::exception& e) {
    report.add(IssueCode::EmptyTable, path.string(), 0, "", e.what());
    return std::nullopt;
  }

  bool header_ok = true;
  for (const char* col : detail::kNodeRequired)
    if (!table.has_column(col)) {
      report.add(IssueCode::MissingColumn, table.path, 1, col, "required column missing");
      header_ok = false;
    }
  if (!header_ok) return std::nullopt;
  if (table.rows.empty()) {
    report.add(IssueCode::EmptyTable, table.path, 0, "", "no node rows");
    return std::nullopt;
  }

  std::vector<int> covariate_cols;
  std::vector<std::string> covariate_names;
  const std::set<std::string> required(std::begin(detail::kNodeRequired),
                                       std::end(detail::kNodeRequired));
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (!required.count(table.header[c])) {
      covariate_cols.push_back(static_cast<int>(c));
      covariate_names.push_back(table.header[c]);
    }

  NodeTable nodes;
  const int id_col = table.column("node_id");
  const int lat_col = table.column("lat");
  const int lon_col = table.column("lon");
  const int pop_col = table.column("population");
  std::vector<std::vector<double>> covariate_values(covariate_cols.size());
  std::vector<std::string> states, regions;
  const int state_col = table.column("state");
  const int region_col = table.column("region");

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::size_t line = table.line_numbers[r];
    const std::string& id = table.cell(r, id_col);
    if (id.empty()) {
      report.add(IssueCode::MissingValue, table.path, line, "node_id", "empty node id");
      continue;
    }
    if (nodes.find(id)) {
      report.add(IssueCode::DuplicateNodeId, table.path, line, "node_id",
                 "duplicate node id '" + id + "'");
      continue;
    }
    double lat = 0, lon = 0, pop = 0;
    bool row_ok = detail::parse_finite(table, r, lat_col, report, lat);
    row_ok &= detail::parse_finite(table, r, lon_col, report, lon);
    row_ok &= detail::parse_finite(table, r, pop_col, report, pop);
    if (row_ok && (lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 360.0)) {
      report.add(IssueCode::BadPosition, table.path, line, "lat",
                 "position out of range: (" + table.cell(r, lat_col) + ", " +
                     table.cell(r, lon_col) + ")");
      row_ok = false;
    }
    if (row_ok && pop < 0) {
      report.add(IssueCode::NegativePopulation, table.path, line, "population",
                 "negative population");
      row_ok = false;
    }
    std::vector<double> row_covariates(covariate_cols.size(), 0.0);
    for (std::size_t c = 0; c < covariate_cols.size(); ++c) {
      double v = 0;
      if (!detail::parse_finite(table, r, covariate_cols[c], report, v)) {
        row_ok = false;
        continue;
      }
      if (NodeTable::is_share_covariate(covariate_names[c]) && (v < 0.0 || v > 1.0)) {
        report.add(IssueCode::OutOfRangeShare, table.path, line, covariate_names[c],
                   "share covariate outside [0,1]: " + table.cell(r, covariate_cols[c]));
        row_ok = false;
      }
      row_covariates[c] = v;
    }
    if (!row_ok) continue;
    nodes.add_node(id, lat, lon, pop);
    states.push_back(table.cell(r, state_col));
    regions.push_back(table.cell(r, region_col));
    for (std::size_t c = 0; c < covariate_cols.size(); ++c)
      covariate_values[c].push_back(row_covariates[c]);
  }

  if (!report.ok()) return std::nullopt;
  nodes.add_categorical("state", std::move(states));
  nodes.add_categorical("region", std::move(regions));
  for (std::size_t c = 0; c < covariate_cols.size(); ++c)
    nodes.add_numeric(covariate_names[c], std::move(covariate_values[c]));
  report.n_nodes = nodes.size();
  report.covariates = covariate_names;
  return nodes;
}

/// Parses and checks an edge CSV (header: origin,dest,count) against a node
/// table; referential integrity and dyad uniqueness are enforced here.
inline std::optional<std::vector<EdgeTriple>> load_edge_list(const std::filesystem::path& path,
                                                             const NodeTable& nodes,
                                                             ValidationReport& report) {
  CsvTable table;
  try {
    table = read_csv(path);
  } catch (const std::exception& e) {
    report.add(IssueCode::EmptyTable, path.string(), 0, "", e.what());
    return std::nullopt;
  }
  bool header_ok = true;
  for (const char* col : {"origin", "dest", "count"})
    if (!table.has_column(col)) {
      report.add(IssueCode::MissingColumn, table.path, 1, col, "required column missing");
      header_ok = false;
    }
  if (!header_ok) return std::nullopt;

  const int origin_col = table.column("origin");
  const int dest_col = table.column("dest");
  const int count_col = table.column("count");
  std::set<std::pair<NodeIndex, NodeIndex>> seen;
  std::vector<EdgeTriple> edges;
  edges.reserve(table.rows.size());

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::size_t line = table.line_numbers[r];
    const auto origin = nodes.find(table.cell(r, origin_col));
    const auto dest = nodes.find(table.cell(r, dest_col));
    if (!origin)
      report.add(IssueCode::UnknownId, table.path, line, "origin",
                 "unknown node id '" + table.cell(r, origin_col) + "'");
    if (!dest)
      report.add(IssueCode::UnknownId, table.path, line, "dest",
                 "unknown node id '" + table.cell(r, dest_col) + "'");
    if (!origin || !dest) continue;
    if (*origin == *dest) {
      report.add(IssueCode::SelfLoop, table.path, line, "origin",
                 "self-loop on node '" + table.cell(r, origin_col) + "'");
      continue;
    }
    std::int64_t count = 0;
    const std::string& count_text = table.cell(r, count_col);
    if (!parse_count(count_text, count)) {
      report.add(IssueCode::NonIntegerCount, table.path, line, "count",
                 "count must be a plain integer, got '" + count_text + "'");
      continue;
    }
    if (count < 0) {
      report.add(IssueCode::NegativeCount, table.path, line, "count", "negative count");
      continue;
    }
    if (!seen.emplace(*origin, *dest).second) {
      report.add(IssueCode::DuplicateDyad, table.path, line, "origin",
                 "duplicate dyad (" + table.cell(r, origin_col) + ", " +
                     table.cell(r, dest_col) + ")");
      continue;
    }
    edges.push_back({*origin, *dest, count});
  }
  if (!report.ok()) return std::nullopt;
  for (const auto& e : edges) report.total_count += e.count;
  report.n_edges =
      static_cast<std::int64_t>(std::count_if(edges.begin(), edges.end(),
                                              [](const EdgeTriple& e) { return e.count > 0; }));
  return edges;
}

struct LoadedInputs {
  NodeTable nodes;
  std::vector<EdgeTriple> edges;
  CountNetwork network{0};
  ValidationReport report;
};

/// Schema checks, referential integrity, and summary counts for a data set;
/// hard-fails (throws) on any violation when `require_valid` is set.
inline LoadedInputs load_inputs(const std::filesystem::path& edges_path,
                                const std::filesystem::path& nodes_path,
                                bool require_valid = true) {
  LoadedInputs loaded;
  auto nodes = load_node_table(nodes_path, loaded.report);
  if (nodes) {
    auto edges = load_edge_list(edges_path, *nodes, loaded.report);
    if (edges) {
      loaded.nodes = std::move(*nodes);
      loaded.edges = std::move(*edges);
      loaded.network = build_network(loaded.nodes.size(), loaded.edges);
    }
  }
  if (require_valid && !loaded.report.ok()) {
    std::string message = "input validation failed:";
    const std::size_t shown = std::min<std::size_t>(loaded.report.issues.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) {
      const auto& issue = loaded.report.issues[i];
      message += "\n  [" + issue_code_name(issue.code) + "] " + issue.file + ":" +
                 std::to_string(issue.line) + " column '" + issue.column + "': " + issue.message;
    }
    if (loaded.report.issues.size() > shown)
      message += "\n  ... and " + std::to_string(loaded.report.issues.size() - shown) + " more";
    throw std::runtime_error(message);
  }
  return loaded;
}

}  // namespace vergm
