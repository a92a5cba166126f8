#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vergm/csv.hpp"
#include "vergm/knockout.hpp"
#include "vergm/likelihood.hpp"
#include "vergm/terms.hpp"

namespace vergm {

inline nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return j;
}

/// Model configuration: {"terms": [{"kind": ..., "covariate": ...,
/// "level": ..., "role": ..., "group": ..., "coefficient": ...}, ...]}
inline ModelSpec parse_model_spec(const nlohmann::json& j, const std::string& context) {
  if (!j.is_object() || !j.contains("terms") || !j["terms"].is_array())
    throw std::runtime_error(context + ": expected an object with a 'terms' array");
  ModelSpec spec;
  for (const auto& tj : j["terms"]) {
    TermSpec term;
    const std::string kind = tj.value("kind", "");
    const auto parsed = term_kind_from_name(kind);
    if (!parsed) throw std::runtime_error(context + ": unknown term kind '" + kind + "'");
    term.kind = *parsed;
    term.covariate = tj.value("covariate", "");
    term.level = tj.value("level", "");
    term.group = tj.value("group", "");
    const std::string role = tj.value("role", "origin");
    if (role == "origin") term.role = EndpointRole::Origin;
    else if (role == "destination") term.role = EndpointRole::Destination;
    else throw std::runtime_error(context + ": unknown role '" + role + "'");
    if (tj.contains("coefficient")) term.coefficient = tj["coefficient"].get<double>();
    if (!term.is_structural() && term.kind != TermKind::RegionFixedEffect && term.covariate.empty())
      throw std::runtime_error(context + ": term kind '" + kind + "' requires a covariate");
    if (term.kind == TermKind::RegionFixedEffect && term.level.empty())
      throw std::runtime_error(context + ": region_fixed_effect requires a level");
    spec.terms.push_back(std::move(term));
  }
  spec.validate_unique();
  return spec;
}

inline ModelSpec load_model_spec(const std::filesystem::path& path) {
  return parse_model_spec(load_json(path), path.string());
}

inline std::string role_name(EndpointRole role) {
  return role == EndpointRole::Origin ? "origin" : "destination";
}

/// Fit file: Table-2-style CSV (term, estimate, std err, p) carrying enough
/// term metadata to reconstruct the model for simulate/knockout/ffgrid.
inline std::string fit_result_csv(const ModelSpec& spec, const FitResult& fit,
                                  const std::vector<std::string>& header_comments) {
  CsvWriter w;
  for (const auto& c : header_comments) w.comment(c);
  w.comment("converged=" + std::string(fit.converged ? "true" : "false") +
            " iterations=" + format_int(fit.iterations) +
            " neg_log_pl=" + format_double(fit.neg_log_pl) +
            " grad_norm=" + format_double(fit.grad_norm));
  w.comment("std errors are naive pseudolikelihood errors; two-tailed p-values are "
            "anti-conservative under dependence");
  w.row({"term", "kind", "covariate", "level", "role", "group", "estimate", "std_err", "p_value"});
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    const auto& term = spec.terms[t];
    w.row({term.name(), term_kind_name(term.kind), term.covariate, term.level,
           role_name(term.role), term.group, format_double(fit.theta[t]),
           format_double(fit.std_err[t]), format_double(two_tailed_p(fit.theta[t], fit.std_err[t]))});
  }
  return w.str();
}

/// Reads a fit file back into a ModelSpec with coefficients present.
inline ModelSpec load_fit_file(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const int kind_col = table.column("kind");
  const int cov_col = table.column("covariate");
  const int level_col = table.column("level");
  const int role_col = table.column("role");
  const int group_col = table.column("group");
  const int est_col = table.column("estimate");
  ModelSpec spec;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    TermSpec term;
    const auto kind = term_kind_from_name(table.cell(r, kind_col));
    if (!kind)
      throw std::runtime_error(path.string() + ": unknown term kind '" +
                               table.cell(r, kind_col) + "'");
    term.kind = *kind;
    term.covariate = table.cell(r, cov_col);
    term.level = table.cell(r, level_col);
    term.role = table.cell(r, role_col) == "destination" ? EndpointRole::Destination
                                                         : EndpointRole::Origin;
    term.group = table.cell(r, group_col);
    double estimate = 0.0;
    if (!parse_double(table.cell(r, est_col), estimate))
      throw std::runtime_error(path.string() + ": bad estimate '" + table.cell(r, est_col) + "'");
    term.coefficient = estimate;
    spec.terms.push_back(std::move(term));
  }
  spec.validate_unique();
  return spec;
}

/// Scenario configuration:
/// {"group_by": "state", "focal_group": "CA", "scenarios": [
///    {"name": "full_model", "actions": []},
///    {"name": "remove_housing", "actions":
///       [{"scope": "node", "covariate": "log_housing_cost", "rule": "national_median"}]},
///    {"name": "remove_distance", "actions":
///       [{"scope": "dyad", "covariate": "log_distance", "rule": "dyad_mean"}]},
///    {"name": "remove_population", "actions":
///       [{"scope": "population", "update_covariates": ["log_population"]}]} ]}
inline KnockoutConfig load_knockout_config(const std::filesystem::path& path) {
  const nlohmann::json j = load_json(path);
  KnockoutConfig config;
  config.group_by = j.value("group_by", "state");
  config.focal_group = j.value("focal_group", "");
  if (config.focal_group.empty())
    throw std::runtime_error(path.string() + ": focal_group is required");
  if (!j.contains("scenarios") || !j["scenarios"].is_array())
    throw std::runtime_error(path.string() + ": expected a 'scenarios' array");
  for (const auto& sj : j["scenarios"]) {
    KnockoutScenario scenario;
    scenario.name = sj.value("name", "");
    if (scenario.name.empty()) throw std::runtime_error(path.string() + ": scenario without name");
    for (const auto& aj : sj.value("actions", nlohmann::json::array())) {
      KnockoutAction action;
      const std::string scope = aj.value("scope", "");
      if (scope == "node") action.scope = KnockoutAction::Scope::NodeCovariate;
      else if (scope == "dyad") action.scope = KnockoutAction::Scope::DyadCovariate;
      else if (scope == "population") action.scope = KnockoutAction::Scope::PopulationEqualization;
      else throw std::runtime_error(path.string() + ": unknown action scope '" + scope + "'");
      action.covariate = aj.value("covariate", "");
      if (scope != "population") {
        if (action.covariate.empty())
          throw std::runtime_error(path.string() + ": action requires a covariate");
        const std::string rule =
            aj.value("rule", scope == "dyad" ? "dyad_mean" : "population_weighted_mean");
        action.rule = replacement_rule_from_name(rule);
        action.fixed_value = aj.value("value", 0.0);
      } else {
        for (const auto& name : aj.value("update_covariates", nlohmann::json::array()))
          action.update_covariates.push_back(name.get<std::string>());
      }
      scenario.actions.push_back(std::move(action));
    }
    config.scenarios.push_back(std::move(scenario));
  }
  return config;
}

}  // namespace vergm
