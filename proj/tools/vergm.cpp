// Command-line front end: fit / simulate / knockout / ffgrid / metrics /
// validate over edge-list + node CSVs. All heavy lifting lives in the
// library; this file only maps flags onto a RunConfig.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vergm/pipeline.hpp"
#include "vergm/version.hpp"

namespace {

void add_data_options(CLI::App* cmd, vergm::RunConfig& config, bool need_edges = true) {
  cmd->add_option("--nodes", config.nodes_path, "Node CSV (node_id,lat,lon,population,state,region,...)")
      ->required();
  auto* edges = cmd->add_option("--edges", config.edges_path, "Edge-list CSV (origin,dest,count)");
  if (need_edges) edges->required();
  cmd->add_option("--past-edges", config.past_edges_path,
                  "Edge-list CSV of the previous period (builds log_past_flow)");
}

void add_sampler_options(CLI::App* cmd, vergm::RunConfig& config) {
  cmd->add_option("--samples", config.samples, "Retained networks per chain")->required();
  cmd->add_option("--burnin", config.burn_in, "Burn-in sweeps (default 200)");
  cmd->add_option("--thin", config.thin, "Sweeps between retained samples (default 20)");
  cmd->add_option("--seed", config.seed, "Master seed")->required();
  cmd->add_option("--max-count", config.max_count, "Truncate conditional support at this count");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Count-valued ERGM toolkit for directed flow networks"};
  app.set_version_flag("--version", std::string("vergm ") + vergm::kVersion);
  app.require_subcommand(1);

  vergm::RunConfig config;

  auto* fit = app.add_subcommand("fit", "Maximum pseudolikelihood fit");
  add_data_options(fit, config);
  fit->add_option("--model", config.model_path, "Model configuration JSON")->required();
  fit->add_option("--out", config.out_dir, "Output directory")->required();
  fit->add_option("--tol", config.tol, "Relative gradient tolerance (default 1e-8)");
  fit->add_option("--max-iter", config.max_iter, "Newton iteration cap (default 100)");
  fit->add_option("--workers", config.workers, "Worker threads (default: VERGM_WORKERS or cores)");
  fit->add_option("--seed", config.seed, "Recorded in artifacts; fitting is deterministic");

  auto* simulate = app.add_subcommand("simulate", "Draw networks from a fitted model");
  add_data_options(simulate, config);
  simulate->add_option("--fit", config.fit_path, "Fit CSV from the fit subcommand")->required();
  simulate->add_option("--out", config.out_dir, "Output directory")->required();
  add_sampler_options(simulate, config);
  simulate->add_option("--init", config.init, "Chain start: observed|empty|independence");

  auto* knockout = app.add_subcommand("knockout", "Counterfactual knockout experiments");
  add_data_options(knockout, config);
  knockout->add_option("--fit", config.fit_path, "Fit CSV")->required();
  knockout->add_option("--scenarios", config.scenarios_path, "Scenario JSON")->required();
  knockout->add_option("--out", config.out_dir, "Output directory")->required();
  add_sampler_options(knockout, config);
  knockout->add_option("--init", config.init, "Chain start: observed|empty|independence");
  knockout->add_option("--workers", config.workers, "Concurrent scenario jobs");

  auto* ffgrid = app.add_subcommand("ffgrid", "Functional-form ratio grids");
  ffgrid->add_option("--nodes", config.nodes_path, "Node CSV")->required();
  ffgrid->add_option("--fit", config.fit_path, "Fit CSV")->required();
  ffgrid->add_option("--group", config.ffgrid_group, "Term group label to visualize")->required();
  ffgrid->add_option("--out", config.out_dir, "Output directory")->required();
  ffgrid->add_option("--grid", config.grid_resolution, "Grid resolution (default 101)");
  ffgrid->add_option("--bins", config.histogram_bins, "Focal-curve histogram bins (default 50)");
  double focal = 0.0;
  auto* focal_opt = ffgrid->add_option("--focal", focal, "Focal covariate value for net curves");
  ffgrid->add_option("--normalizer", config.normalizer,
                     "X0 rule: pw-mean|median|weighted-median|fixed (default pw-mean)");
  ffgrid->add_option("--normalizer-value", config.normalizer_value_fixed,
                     "X0 when --normalizer fixed");
  ffgrid->add_option("--seed", config.seed, "Recorded in artifacts");

  auto* metrics = app.add_subcommand("metrics", "Migration metrics and rankings");
  add_data_options(metrics, config);
  metrics->add_option("--out", config.out_dir, "Output directory")->required();
  metrics->add_option("--group-col", config.group_col, "Grouping column (default state)");
  metrics->add_option("--focal-group", config.focal_group,
                      "Also emit attribute quantiles for this group");
  metrics->add_option("--seed", config.seed, "Recorded in artifacts");

  auto* validate = app.add_subcommand("validate", "Check input files, report violations");
  add_data_options(validate, config);
  validate->add_option("--out", config.out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  config.subcommand = app.get_subcommands().front()->get_name();
  if (focal_opt->count() > 0) config.focal_value = focal;

  const vergm::RunResult result = vergm::run_pipeline(config);
  if (result.exit_code != 0) {
    nlohmann::json error;
    error["error"] = result.error;
    error["subcommand"] = config.subcommand;
    error["config_digest"] = config.digest();
    std::cerr << error.dump() << "\n";
    return result.exit_code;
  }
  for (const auto& path : result.artifacts) std::cout << path << "\n";
  return 0;
}
