#pragma once

#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vergm/csv.hpp"
#include "vergm/ffgrid.hpp"
#include "vergm/knockout.hpp"
#include "vergm/likelihood.hpp"
#include "vergm/metrics.hpp"
#include "vergm/model_io.hpp"
#include "vergm/sampler.hpp"
#include "vergm/validate.hpp"
#include "vergm/version.hpp"

namespace vergm {

/// Resolved configuration of one CLI run. Every field participates in the
/// config digest; re-running with an identical digest and seed reproduces
/// all CSV artifacts byte-for-byte.
struct RunConfig {
  std::string subcommand;  // fit | simulate | knockout | ffgrid | metrics | validate

  std::string edges_path;
  std::string nodes_path;
  std::string past_edges_path;   // optional; builds log_past_flow
  std::string model_path;        // fit
  std::string fit_path;          // simulate/knockout/ffgrid
  std::string scenarios_path;    // knockout
  std::string out_dir = ".";

  double tol = 1e-8;
  int max_iter = 100;
  int workers = 0;

  std::int64_t samples = 0;
  std::int64_t burn_in = 200;
  std::int64_t thin = 20;
  std::uint64_t seed = 0;
  std::string init = "observed";
  std::int64_t max_count = -1;   // <0: adaptive support

  std::string group_col = "state";
  std::string focal_group;       // metrics: optional quantile subset

  std::string ffgrid_group;
  int grid_resolution = 101;
  int histogram_bins = 50;
  std::optional<double> focal_value;
  std::string normalizer = "pw-mean";
  double normalizer_value_fixed = 0.0;

  /// Canonical key=value text; hashing it yields the config digest.
  std::string canonical_text() const {
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["edges"] = edges_path;
    j["nodes"] = nodes_path;
    j["past_edges"] = past_edges_path;
    j["model"] = model_path;
    j["fit"] = fit_path;
    j["scenarios"] = scenarios_path;
    // out_dir and workers are excluded: neither affects artifact content,
    // so runs that differ only in them share a digest.
    j["tol"] = format_double(tol);
    j["max_iter"] = max_iter;
    j["samples"] = samples;
    j["burn_in"] = burn_in;
    j["thin"] = thin;
    j["seed"] = seed;
    j["init"] = init;
    j["max_count"] = max_count;
    j["group_col"] = group_col;
    j["focal_group"] = focal_group;
    j["ffgrid_group"] = ffgrid_group;
    j["grid_resolution"] = grid_resolution;
    j["histogram_bins"] = histogram_bins;
    j["focal_value"] = focal_value ? format_double(*focal_value) : "";
    j["normalizer"] = normalizer;
    j["normalizer_value"] = format_double(normalizer_value_fixed);
    return j.dump();  // nlohmann objects serialize with sorted keys
  }

  std::string digest() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_text())));
    return std::string(buf);
  }

  /// First header comment of every artifact.
  std::string artifact_stamp() const {
    return "seed=" + format_int(static_cast<std::int64_t>(seed)) + " config=" + digest() +
           " tool=vergm " + std::string(kVersion);
  }

  SamplerConfig sampler_config() const {
    SamplerConfig sc;
    sc.burn_in_sweeps = burn_in;
    sc.thin_sweeps = thin;
    sc.n_samples = samples;
    sc.seed = seed;
    sc.init = sampler_init_from_name(init);
    if (max_count >= 0) sc.max_count = max_count;
    return sc;
  }
};

struct RunResult {
  int exit_code = 0;
  std::vector<std::string> artifacts;  // paths written
  std::string error;                   // empty on success
};

namespace detail {

inline std::string slug(const std::string& text) {
  std::string out;
  for (char c : text)
    out += (std::isalnum(static_cast<unsigned char>(c)) != 0) ? c : '_';
  return out;
}

inline void write_manifest(const RunConfig& config, const std::vector<std::string>& artifacts,
                           double wall_seconds) {
  nlohmann::json j;
  j["subcommand"] = config.subcommand;
  j["config_digest"] = config.digest();
  j["seed"] = config.seed;
  j["version"] = kVersion;
  j["wall_clock_seconds"] = wall_seconds;
  j["artifacts"] = artifacts;
  atomic_write_file(std::filesystem::path(config.out_dir) / "manifest.json", j.dump(2) + "\n");
}

inline std::string edge_list_csv(const RunConfig& config, const CountNetwork& net,
                                 const NodeTable& nodes) {
  CsvWriter w;
  w.comment(config.artifact_stamp());
  w.row({"origin", "dest", "count"});
  for (const auto& e : net.sorted_edges())
    w.row({nodes.id(e.origin), nodes.id(e.dest), format_int(e.count)});
  return w.str();
}

inline std::string metric_report_csv(const RunConfig& config, const MetricReport& report) {
  CsvWriter w;
  w.comment(config.artifact_stamp());
  w.comment("total_migrants=" + format_double(report.total_migrants) +
            " dyad_asymmetry=" + format_double(report.dyad_asymmetry) +
            " node_asymmetry=" + format_double(report.node_asymmetry));
  w.row({"group", "population", "in_migrants", "out_migrants", "net_count", "net_rate", "mii"});
  for (const auto& g : report.groups)
    w.row({g.group, format_double(g.population), format_double(g.in_migrants),
           format_double(g.out_migrants), format_double(g.net_count), format_double(g.net_rate),
           g.mii ? format_double(*g.mii) : ""});
  return w.str();
}

inline DyadTable build_dyad_table(const ModelSpec& spec, const NodeTable& nodes,
                                  const std::vector<EdgeTriple>& past_edges,
                                  bool have_past_edges) {
  DyadTable dyads;
  for (const auto& term : spec.terms) {
    if (term.kind != TermKind::DyadCovariate || dyads.has(term.covariate)) continue;
    if (term.covariate == "log_distance") {
      dyads.columns.emplace("log_distance", pairwise_log_distance(nodes));
    } else if (term.covariate == "same_state") {
      dyads.columns.emplace("same_state", same_category_column(nodes, "state"));
    } else if (term.covariate == "log_past_flow") {
      if (!have_past_edges)
        throw std::runtime_error("model uses log_past_flow; provide --past-edges");
      dyads.columns.emplace("log_past_flow", log_past_flow_column(nodes.size(), past_edges));
    } else {
      throw std::runtime_error("unknown dyad covariate '" + term.covariate +
                               "' (expected log_distance, same_state, or log_past_flow)");
    }
  }
  return dyads;
}

}  // namespace detail

inline std::vector<std::string> run_fit(const RunConfig& config) {
  LoadedInputs inputs = load_inputs(config.edges_path, config.nodes_path);
  ModelSpec spec = load_model_spec(config.model_path);

  std::vector<EdgeTriple> past_edges;
  ValidationReport past_report;
  if (!config.past_edges_path.empty()) {
    auto parsed = load_edge_list(config.past_edges_path, inputs.nodes, past_report);
    if (!parsed) throw std::runtime_error("past edge list failed validation");
    past_edges = std::move(*parsed);
  }
  const DyadTable dyads =
      detail::build_dyad_table(spec, inputs.nodes, past_edges, !config.past_edges_path.empty());
  const CompiledModel model(spec, inputs.nodes, dyads);

  FitOptions options;
  options.tol = config.tol;
  options.max_iter = config.max_iter;
  options.workers = config.workers;
  const FitResult fit = fit_mple(model, inputs.network, options);

  const std::filesystem::path out(config.out_dir);
  const std::string fit_csv = fit_result_csv(spec, fit, {config.artifact_stamp()});
  atomic_write_file(out / "fit.csv", fit_csv);

  CsvWriter log;
  log.comment(config.artifact_stamp());
  log.row({"iteration", "neg_log_pl", "grad_norm", "step"});
  for (const auto& rec : fit.trace)
    log.row({format_int(rec.iteration), format_double(rec.neg_log_pl),
             format_double(rec.grad_norm), format_double(rec.step)});
  log.write_to(out / "fit_log.csv");

  if (!fit.converged)
    throw std::runtime_error("fit did not converge in " + std::to_string(fit.iterations) +
                             " iterations (grad_norm=" + format_double(fit.grad_norm) +
                             "); artifacts written to " + config.out_dir);
  return {(out / "fit.csv").string(), (out / "fit_log.csv").string()};
}

inline std::vector<std::string> run_simulate(const RunConfig& config) {
  LoadedInputs inputs = load_inputs(config.edges_path, config.nodes_path);
  ModelSpec spec = load_fit_file(config.fit_path);

  std::vector<EdgeTriple> past_edges;
  ValidationReport past_report;
  if (!config.past_edges_path.empty()) {
    auto parsed = load_edge_list(config.past_edges_path, inputs.nodes, past_report);
    if (!parsed) throw std::runtime_error("past edge list failed validation");
    past_edges = std::move(*parsed);
  }
  const DyadTable dyads =
      detail::build_dyad_table(spec, inputs.nodes, past_edges, !config.past_edges_path.empty());
  const CompiledModel model(spec, inputs.nodes, dyads);

  const SampleRun run = sample_networks(model, inputs.network, config.sampler_config());

  const std::filesystem::path out(config.out_dir);
  std::vector<std::string> artifacts;
  CsvWriter trace;
  trace.comment(config.artifact_stamp());
  std::vector<std::string> header = {"sample", "sweep"};
  header.insert(header.end(), run.stat_names.begin(), run.stat_names.end());
  trace.row(header);
  for (std::size_t s = 0; s < run.networks.size(); ++s) {
    std::vector<std::string> row = {format_int(static_cast<std::int64_t>(s)),
                                    format_int(run.sweep_index[s])};
    for (double v : run.trace[s]) row.push_back(format_double(v));
    trace.row(row);

    char name[32];
    std::snprintf(name, sizeof(name), "sample_%03zu.csv", s);
    const auto path = out / name;
    atomic_write_file(path, detail::edge_list_csv(config, run.networks[s], inputs.nodes));
    artifacts.push_back(path.string());
  }
  trace.write_to(out / "trace.csv");
  artifacts.push_back((out / "trace.csv").string());
  return artifacts;
}

inline std::vector<std::string> run_metrics(const RunConfig& config) {
  LoadedInputs inputs = load_inputs(config.edges_path, config.nodes_path);
  const Grouping grouping = make_grouping(inputs.nodes, config.group_col);
  const MetricReport report = compute_metrics(inputs.network, grouping);

  const std::filesystem::path out(config.out_dir);
  atomic_write_file(out / "metrics.csv", detail::metric_report_csv(config, report));
  std::vector<std::string> artifacts = {(out / "metrics.csv").string()};

  if (!config.focal_group.empty()) {
    const auto& labels = inputs.nodes.categorical(config.group_col);
    std::vector<NodeIndex> subset;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == config.focal_group) subset.push_back(static_cast<NodeIndex>(i));
    if (subset.empty())
      throw std::runtime_error("focal group '" + config.focal_group + "' has no nodes");
    CsvWriter w;
    w.comment(config.artifact_stamp());
    w.row({"covariate", "unit", "unit_id", "quantile"});
    for (const auto& cq : attribute_quantiles(inputs.nodes, subset)) {
      for (const auto& [id, q] : cq.node_quantiles)
        w.row({cq.covariate, "node", id, format_double(q)});
      w.row({cq.covariate, "group", config.focal_group, format_double(cq.aggregate_quantile)});
    }
    w.write_to(out / "quantiles.csv");
    artifacts.push_back((out / "quantiles.csv").string());
  }
  return artifacts;
}

inline std::vector<std::string> run_knockout(const RunConfig& config) {
  LoadedInputs inputs = load_inputs(config.edges_path, config.nodes_path);
  ModelSpec spec = load_fit_file(config.fit_path);
  KnockoutConfig knockout_config = load_knockout_config(config.scenarios_path);

  std::vector<EdgeTriple> past_edges;
  ValidationReport past_report;
  if (!config.past_edges_path.empty()) {
    auto parsed = load_edge_list(config.past_edges_path, inputs.nodes, past_report);
    if (!parsed) throw std::runtime_error("past edge list failed validation");
    past_edges = std::move(*parsed);
  }
  const DyadTable dyads =
      detail::build_dyad_table(spec, inputs.nodes, past_edges, !config.past_edges_path.empty());

  const ScenarioReport report =
      run_knockout_suite(spec, inputs.nodes, dyads, inputs.network, knockout_config,
                         config.sampler_config(), config.seed, config.workers);

  const std::filesystem::path out(config.out_dir);
  CsvWriter summary;
  summary.comment(config.artifact_stamp());
  summary.comment("focal_group=" + report.focal_group + " group_by=" + knockout_config.group_by +
                  " samples=" + format_int(config.samples));
  summary.row({"scenario", "metric", "average_rank", "rank_change"});
  CsvWriter samples;
  samples.comment(config.artifact_stamp());
  samples.row({"scenario", "sample", "metric", "rank"});
  for (std::size_t s = 0; s < report.scenario_names.size(); ++s) {
    for (std::size_t m = 0; m < report.metrics.size(); ++m) {
      const auto& cell = report.results[s][m];
      summary.row({report.scenario_names[s], metric_name(report.metrics[m]),
                   format_double(cell.average_rank), format_double(cell.rank_change)});
      for (std::size_t k = 0; k < cell.sample_ranks.size(); ++k)
        samples.row({report.scenario_names[s], format_int(static_cast<std::int64_t>(k)),
                     metric_name(report.metrics[m]), format_double(cell.sample_ranks[k])});
    }
  }
  summary.write_to(out / "knockout_summary.csv");
  samples.write_to(out / "knockout_samples.csv");
  return {(out / "knockout_summary.csv").string(), (out / "knockout_samples.csv").string()};
}

inline std::vector<std::string> run_ffgrid(const RunConfig& config) {
  ValidationReport report;
  auto nodes = load_node_table(config.nodes_path, report);
  if (!nodes) throw std::runtime_error("node table failed validation: " + report.summary());
  ModelSpec spec = load_fit_file(config.fit_path);
  const TermGroup group = extract_term_group(spec, config.ffgrid_group);

  const NormalizerKind normalizer_kind = normalizer_from_name(config.normalizer);
  const double x0 =
      normalizer_value(*nodes, group.covariate, normalizer_kind, config.normalizer_value_fixed);
  const GridSpec grid = grid_over_observed_range(*nodes, group.covariate, config.grid_resolution);

  const std::filesystem::path out(config.out_dir);
  std::vector<std::string> artifacts;
  auto write_grid = [&](const FFGrid& g, const std::string& stem) {
    CsvWriter w;
    w.comment(config.artifact_stamp());
    w.comment("group=" + group.name + " covariate=" + group.covariate + " x0=" +
              format_double(x0) + " surface=" + g.label);
    w.row({"origin_value", "dest_value", "ratio"});
    for (std::size_t oi = 0; oi < g.origin_values.size(); ++oi)
      for (std::size_t di = 0; di < g.dest_values.size(); ++di)
        w.row({format_double(g.origin_values[oi]), format_double(g.dest_values[di]),
               format_double(g.at(oi, di))});
    const auto path = out / (stem + ".csv");
    w.write_to(path);
    artifacts.push_back(path.string());
  };

  for (std::size_t k = 0; k < group.terms.size(); ++k)
    write_grid(ffgrid_single(group.terms[k], group.coefficients[k], grid, x0),
               "ffgrid_" + detail::slug(group.name) + "_" + detail::slug(group.terms[k].name()));
  write_grid(ffgrid(group, grid, x0, group.name + " total"),
             "ffgrid_" + detail::slug(group.name) + "_total");

  if (config.focal_value) {
    GridSpec focal_grid = grid;
    focal_grid.resolution = config.histogram_bins;
    const FocalCurves curves =
        focal_curves(group, *config.focal_value, focal_grid, x0, *nodes);
    CsvWriter w;
    w.comment(config.artifact_stamp());
    w.comment("group=" + group.name + " covariate=" + group.covariate +
              " focal_value=" + format_double(*config.focal_value) + " x0=" + format_double(x0));
    w.row({"x", "r_in", "r_out", "net", "pop_mass"});
    for (std::size_t g = 0; g < curves.x.size(); ++g)
      w.row({format_double(curves.x[g]), format_double(curves.r_in[g]),
             format_double(curves.r_out[g]), format_double(curves.net[g]),
             format_double(curves.pop_mass[g])});
    const auto path = out / ("focal_" + detail::slug(group.name) + ".csv");
    w.write_to(path);
    artifacts.push_back(path.string());
  }
  return artifacts;
}

inline std::vector<std::string> run_validate(const RunConfig& config) {
  LoadedInputs inputs = load_inputs(config.edges_path, config.nodes_path, false);
  const std::filesystem::path out(config.out_dir);
  CsvWriter w;
  w.comment(config.artifact_stamp());
  w.comment(inputs.report.summary());
  w.row({"code", "file", "line", "column", "message"});
  for (const auto& issue : inputs.report.issues)
    w.row({issue_code_name(issue.code), issue.file, format_int(static_cast<std::int64_t>(issue.line)),
           issue.column, issue.message});
  w.write_to(out / "validation.csv");
  if (!inputs.report.ok())
    throw std::runtime_error("validation found " + std::to_string(inputs.report.issues.size()) +
                             " violation(s); see " + (out / "validation.csv").string());
  return {(out / "validation.csv").string()};
}

/// Dispatches a subcommand, writes its artifacts atomically plus a manifest
/// recording the config digest, seed, version, and wall-clock time. Returns
/// nonzero exit status with a machine-readable error record on failure.
inline RunResult run_pipeline(const RunConfig& config) {
  RunResult result;
  const auto started = std::chrono::steady_clock::now();
  try {
    if (config.subcommand == "fit") result.artifacts = run_fit(config);
    else if (config.subcommand == "simulate") result.artifacts = run_simulate(config);
    else if (config.subcommand == "knockout") result.artifacts = run_knockout(config);
    else if (config.subcommand == "ffgrid") result.artifacts = run_ffgrid(config);
    else if (config.subcommand == "metrics") result.artifacts = run_metrics(config);
    else if (config.subcommand == "validate") result.artifacts = run_validate(config);
    else throw std::runtime_error("unknown subcommand '" + config.subcommand + "'");
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.error = e.what();
    return result;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  detail::write_manifest(config, result.artifacts, wall);
  return result;
}

}  // namespace vergm
