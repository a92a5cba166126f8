#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vergm/metrics.hpp"
#include "vergm/node_table.hpp"
#include "vergm/parallel.hpp"
#include "vergm/rng.hpp"
#include "vergm/sampler.hpp"
#include "vergm/terms.hpp"

namespace vergm {

enum class ReplacementRule {
  PopulationWeightedMean,
  NationalMedian,           // unweighted median over nodes
  WeightedMedian,           // population-weighted median
  FixedValue,
  DyadMean,                 // dyadic covariates: mean over all ordered dyads
};

inline std::string replacement_rule_name(ReplacementRule rule) {
  switch (rule) {
    case ReplacementRule::PopulationWeightedMean: return "population_weighted_mean";
    case ReplacementRule::NationalMedian: return "national_median";
    case ReplacementRule::WeightedMedian: return "weighted_median";
    case ReplacementRule::FixedValue: return "fixed";
    case ReplacementRule::DyadMean: return "dyad_mean";
  }
  return "?";
}

inline ReplacementRule replacement_rule_from_name(const std::string& name) {
  for (ReplacementRule r :
       {ReplacementRule::PopulationWeightedMean, ReplacementRule::NationalMedian,
        ReplacementRule::WeightedMedian, ReplacementRule::FixedValue, ReplacementRule::DyadMean})
    if (replacement_rule_name(r) == name) return r;
  throw std::invalid_argument("unknown replacement rule '" + name + "'");
}

struct KnockoutAction {
  enum class Scope { NodeCovariate, DyadCovariate, PopulationEqualization };
  Scope scope = Scope::NodeCovariate;
  std::string covariate;
  ReplacementRule rule = ReplacementRule::PopulationWeightedMean;
  double fixed_value = 0.0;
  /// Population equalization: node covariates to reset to log(new population).
  std::vector<std::string> update_covariates;
};

struct KnockoutScenario {
  std::string name;
  std::vector<KnockoutAction> actions;

  bool is_baseline() const { return actions.empty(); }
};

namespace detail {

inline double weighted_mean(const std::vector<double>& values, const std::vector<double>& weights) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += weights[i] * values[i];
    den += weights[i];
  }
  if (!(den > 0)) throw std::invalid_argument("knockout: weights sum to zero");
  return num / den;
}

inline double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty vector");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

/// Smallest value whose cumulative weight reaches half the total.
inline double weighted_median(std::vector<std::pair<double, double>> value_weight) {
  std::sort(value_weight.begin(), value_weight.end());
  double total = 0.0;
  for (const auto& [v, w] : value_weight) total += w;
  if (!(total > 0)) throw std::invalid_argument("knockout: weights sum to zero");
  double cum = 0.0;
  for (const auto& [v, w] : value_weight) {
    cum += w;
    if (cum >= total / 2.0) return v;
  }
  return value_weight.back().first;
}

}  // namespace detail

/// Neutralizes covariates in place: every node (or dyad) gets the common
/// replacement value, removing differential mixing on that covariate while
/// leaving everything else at observed levels. Idempotent by construction.
inline void apply_knockout(const KnockoutScenario& scenario, NodeTable& nodes, DyadTable& dyads) {
  for (const auto& action : scenario.actions) {
    switch (action.scope) {
      case KnockoutAction::Scope::NodeCovariate: {
        auto& values = nodes.numeric_mutable(action.covariate);
        double replacement = 0.0;
        switch (action.rule) {
          case ReplacementRule::PopulationWeightedMean: {
            std::vector<double> weights(values.size());
            for (std::size_t i = 0; i < weights.size(); ++i)
              weights[i] = nodes.population(static_cast<NodeIndex>(i));
            replacement = detail::weighted_mean(values, weights);
            break;
          }
          case ReplacementRule::NationalMedian:
            replacement = detail::median(values);
            break;
          case ReplacementRule::WeightedMedian: {
            std::vector<std::pair<double, double>> vw(values.size());
            for (std::size_t i = 0; i < vw.size(); ++i)
              vw[i] = {values[i], nodes.population(static_cast<NodeIndex>(i))};
            replacement = detail::weighted_median(std::move(vw));
            break;
          }
          case ReplacementRule::FixedValue:
            replacement = action.fixed_value;
            break;
          case ReplacementRule::DyadMean:
            throw std::invalid_argument("dyad_mean rule on node covariate '" +
                                        action.covariate + "'");
        }
        std::fill(values.begin(), values.end(), replacement);
        break;
      }
      case KnockoutAction::Scope::DyadCovariate: {
        auto it = dyads.columns.find(action.covariate);
        if (it == dyads.columns.end())
          throw std::invalid_argument("unknown dyad covariate '" + action.covariate + "'");
        const double replacement = action.rule == ReplacementRule::FixedValue
                                       ? action.fixed_value
                                       : it->second.mean_over_dyads();
        it->second.fill_constant(replacement);
        break;
      }
      case KnockoutAction::Scope::PopulationEqualization: {
        const double share = nodes.total_population() / static_cast<double>(nodes.size());
        if (!(share > 0)) throw std::invalid_argument("knockout: total population is zero");
        for (NodeIndex i = 0; i < nodes.size(); ++i) nodes.set_population(i, share);
        for (const auto& name : action.update_covariates) {
          auto& values = nodes.numeric_mutable(name);
          std::fill(values.begin(), values.end(), std::log(share));
        }
        break;
      }
    }
  }
}

struct KnockoutConfig {
  std::string group_by = "state";
  std::string focal_group;
  std::vector<KnockoutScenario> scenarios;
};

struct ScenarioMetricResult {
  std::vector<double> sample_ranks;   // focal group's rank per retained sample
  double average_rank = 0.0;
  double rank_change = 0.0;           // vs the baseline scenario
};

struct ScenarioReport {
  std::vector<std::string> scenario_names;
  std::vector<Metric> metrics;
  // indexed [scenario][metric]
  std::vector<std::vector<ScenarioMetricResult>> results;
  std::string focal_group;
  std::size_t baseline_index = 0;
};

/// For each scenario: neutralize covariates, resample networks from the
/// fitted model (warm-started at the observed network), compute state-level
/// metrics per sample, rank, average, and report the change against the
/// baseline scenario. Group populations for the rate metric always come
/// from the observed table; knockouts alter the flow-generating process,
/// not the metric definitions.
///
/// Every scenario's chain uses the same replicate sub-seed (common random
/// numbers), so rank changes are paired comparisons.
inline ScenarioReport run_knockout_suite(const ModelSpec& fitted, const NodeTable& nodes,
                                         const DyadTable& dyads, const CountNetwork& observed,
                                         const KnockoutConfig& config,
                                         const SamplerConfig& sampler_config,
                                         std::uint64_t master_seed, int workers = 0) {
  if (config.scenarios.empty()) throw std::invalid_argument("no knockout scenarios given");
  std::size_t baseline = config.scenarios.size();
  for (std::size_t s = 0; s < config.scenarios.size(); ++s)
    if (config.scenarios[s].is_baseline()) {
      baseline = s;
      break;
    }
  if (baseline == config.scenarios.size())
    throw std::invalid_argument("scenario list must include a baseline (no-action) scenario");

  const std::vector<double> theta = fitted.coefficients();
  const Grouping grouping = make_grouping(nodes, config.group_by);
  const std::int32_t focal = grouping.group_index(config.focal_group);
  const std::vector<Metric> metric_set = {Metric::NetCount, Metric::NetRate, Metric::Mii};

  ScenarioReport report;
  report.metrics = metric_set;
  report.focal_group = config.focal_group;
  report.baseline_index = baseline;
  report.results.resize(config.scenarios.size());
  for (const auto& s : config.scenarios) report.scenario_names.push_back(s.name);

  run_jobs(static_cast<std::int64_t>(config.scenarios.size()), workers, [&](std::int64_t job) {
    const auto& scenario = config.scenarios[static_cast<std::size_t>(job)];
    NodeTable scenario_nodes = nodes;
    DyadTable scenario_dyads = dyads;
    apply_knockout(scenario, scenario_nodes, scenario_dyads);
    const CompiledModel model(fitted, scenario_nodes, scenario_dyads);

    SamplerConfig chain_config = sampler_config;
    chain_config.seed = derive_seed(master_seed, "knockout-chain", 0);
    const SampleRun run = sample_networks(model, theta, observed, chain_config);

    auto& row = report.results[static_cast<std::size_t>(job)];
    row.assign(metric_set.size(), ScenarioMetricResult{});
    for (const auto& net : run.networks) {
      const MetricReport metrics = compute_metrics(net, grouping);
      for (std::size_t m = 0; m < metric_set.size(); ++m) {
        const auto ranks = rank_groups(metrics, metric_set[m]);
        row[m].sample_ranks.push_back(ranks[static_cast<std::size_t>(focal)]);
      }
    }
    for (auto& cell : row) {
      double sum = 0.0;
      for (double r : cell.sample_ranks) sum += r;
      cell.average_rank = cell.sample_ranks.empty()
                              ? 0.0
                              : sum / static_cast<double>(cell.sample_ranks.size());
    }
  });

  for (std::size_t s = 0; s < report.results.size(); ++s)
    for (std::size_t m = 0; m < metric_set.size(); ++m)
      report.results[s][m].rank_change =
          report.results[s][m].average_rank - report.results[baseline][m].average_rank;
  return report;
}

}  // namespace vergm
