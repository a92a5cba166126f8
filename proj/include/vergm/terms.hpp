#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "vergm/network.hpp"
#include "vergm/node_table.hpp"

namespace vergm {

/// Sufficient-statistic vocabulary. Structural kinds (sum, nonzero,
/// mutuality_min, waypoint_flow) depend on the network configuration;
/// the rest are edge-linear: g(y, X) = sum_ij f(X_ij) * y_ij.
enum class TermKind {
  Sum,              // sum_ij y_ij
  Nonzero,          // sum_ij 1[y_ij > 0]
  MutualityMin,     // sum over unordered pairs of min(y_ij, y_ji)
  WaypointFlow,     // sum over nodes of min(in_total, out_total)
  Origin,           // f = x_i
  Destination,      // f = x_j
  AbsDissimilarity, // f = |x_i - x_j|
  SignDirection,    // f = sign(x_j - x_i), +1 toward higher covariate level
  Difference,       // f = x_j - x_i
  DyadCovariate,    // f = D_ij (log_distance, same_state, log_past_flow, ...)
  RegionFixedEffect // f = 1[label(role endpoint) == level]
};

enum class EndpointRole { Origin, Destination };

inline std::string term_kind_name(TermKind kind) {
  switch (kind) {
    case TermKind::Sum: return "sum";
    case TermKind::Nonzero: return "nonzero";
    case TermKind::MutualityMin: return "mutuality_min";
    case TermKind::WaypointFlow: return "waypoint_flow";
    case TermKind::Origin: return "origin";
    case TermKind::Destination: return "destination";
    case TermKind::AbsDissimilarity: return "dissimilarity";
    case TermKind::SignDirection: return "sign_direction";
    case TermKind::Difference: return "difference";
    case TermKind::DyadCovariate: return "dyad_covariate";
    case TermKind::RegionFixedEffect: return "region_fixed_effect";
  }
  return "?";
}

inline std::optional<TermKind> term_kind_from_name(const std::string& name) {
  for (TermKind k :
       {TermKind::Sum, TermKind::Nonzero, TermKind::MutualityMin, TermKind::WaypointFlow,
        TermKind::Origin, TermKind::Destination, TermKind::AbsDissimilarity,
        TermKind::SignDirection, TermKind::Difference, TermKind::DyadCovariate,
        TermKind::RegionFixedEffect})
    if (term_kind_name(k) == name) return k;
  return std::nullopt;
}

struct TermSpec {
  TermKind kind = TermKind::Sum;
  std::string covariate;                        // node or dyad covariate name
  std::string level;                            // region_fixed_effect only
  EndpointRole role = EndpointRole::Origin;     // region_fixed_effect only
  std::string group;                            // label for ffgrid/reporting
  std::optional<double> coefficient;            // present after fitting

  std::string name() const {
    switch (kind) {
      case TermKind::Sum:
      case TermKind::Nonzero:
      case TermKind::MutualityMin:
      case TermKind::WaypointFlow:
        return term_kind_name(kind);
      case TermKind::DyadCovariate:
        return "dyad(" + covariate + ")";
      case TermKind::RegionFixedEffect:
        return std::string(role == EndpointRole::Origin ? "origin_region(" : "destination_region(") +
               level + ")";
      default:
        return term_kind_name(kind) + "(" + covariate + ")";
    }
  }

  bool is_structural() const {
    return kind == TermKind::Sum || kind == TermKind::Nonzero ||
           kind == TermKind::MutualityMin || kind == TermKind::WaypointFlow;
  }

  /// Functional forms defined on a single node covariate; the ones the
  /// visualization grids are built from.
  bool is_node_form() const {
    return kind == TermKind::Origin || kind == TermKind::Destination ||
           kind == TermKind::AbsDissimilarity || kind == TermKind::SignDirection ||
           kind == TermKind::Difference;
  }
};

/// Pure functional form on covariate values: the f in g = sum f(X_ij) y_ij.
/// `dyad_value` is consulted only for DyadCovariate terms.
inline double covariate_form(const TermSpec& term, double x_i, double x_j,
                             double dyad_value = 0.0) {
  switch (term.kind) {
    case TermKind::Sum: return 1.0;
    case TermKind::Origin: return x_i;
    case TermKind::Destination: return x_j;
    case TermKind::AbsDissimilarity: return std::abs(x_i - x_j);
    case TermKind::SignDirection: return x_j > x_i ? 1.0 : (x_j < x_i ? -1.0 : 0.0);
    case TermKind::Difference: return x_j - x_i;
    case TermKind::DyadCovariate: return dyad_value;
    default:
      throw std::invalid_argument("covariate_form undefined for term '" +
                                  term_kind_name(term.kind) + "'");
  }
}

struct ModelSpec {
  std::vector<TermSpec> terms;
  // Reference measure is fixed to Poissonian: h(y) = prod 1/y_ij!.

  std::vector<std::string> term_names() const {
    std::vector<std::string> names;
    names.reserve(terms.size());
    for (const auto& t : terms) names.push_back(t.name());
    return names;
  }

  void validate_unique() const {
    if (terms.empty()) throw std::invalid_argument("model must contain at least one term");
    std::set<std::string> seen;
    for (const auto& t : terms)
      if (!seen.insert(t.name()).second)
        throw std::invalid_argument("duplicate term '" + t.name() + "' in model");
  }

  /// Coefficient vector; throws if any term is unfitted.
  std::vector<double> coefficients() const {
    std::vector<double> theta;
    theta.reserve(terms.size());
    for (const auto& t : terms) {
      if (!t.coefficient)
        throw std::invalid_argument("term '" + t.name() + "' has no coefficient");
      theta.push_back(*t.coefficient);
    }
    return theta;
  }
};

/// A ModelSpec bound to data tables: covariate references resolved, region
/// levels coded, ready for fast per-dyad evaluation. Holds pointers into the
/// tables, which must outlive it.
class CompiledModel {
 public:
  CompiledModel(const ModelSpec& spec, const NodeTable& nodes, const DyadTable& dyads)
      : spec_(spec), nodes_(&nodes) {
    spec_.validate_unique();
    bound_.reserve(spec_.terms.size());
    for (const auto& term : spec_.terms) {
      Bound b;
      switch (term.kind) {
        case TermKind::Sum:
        case TermKind::Nonzero:
        case TermKind::MutualityMin:
        case TermKind::WaypointFlow:
          break;
        case TermKind::Origin:
        case TermKind::Destination:
        case TermKind::AbsDissimilarity:
        case TermKind::SignDirection:
        case TermKind::Difference:
          b.node_cov = &nodes.numeric(term.covariate);
          break;
        case TermKind::DyadCovariate:
          b.dyad_cov = &dyads.column(term.covariate);
          if (b.dyad_cov->n() != nodes.size())
            throw std::invalid_argument("dyad covariate '" + term.covariate +
                                        "' sized for different node set");
          break;
        case TermKind::RegionFixedEffect: {
          const std::string col = term.covariate.empty() ? "region" : term.covariate;
          const auto& labels = nodes.categorical(col);
          b.level_mask.resize(labels.size());
          bool any = false;
          for (std::size_t i = 0; i < labels.size(); ++i) {
            b.level_mask[i] = labels[i] == term.level;
            any |= b.level_mask[i] != 0;
          }
          if (!any)
            throw std::invalid_argument("region level '" + term.level +
                                        "' matches no node in column '" + col + "'");
          break;
        }
      }
      bound_.push_back(std::move(b));
    }
  }

  const ModelSpec& spec() const { return spec_; }
  int n_terms() const { return static_cast<int>(spec_.terms.size()); }
  const TermSpec& term(int t) const { return spec_.terms[static_cast<std::size_t>(t)]; }
  const NodeTable& nodes() const { return *nodes_; }

  bool is_linear(int t) const { return !spec_.terms[static_cast<std::size_t>(t)].is_structural() ||
                                       spec_.terms[static_cast<std::size_t>(t)].kind == TermKind::Sum; }

  /// f_t(X_ij) for edge-linear terms (Sum counts as linear with f = 1).
  double linear_form(int t, NodeIndex i, NodeIndex j) const {
    const TermSpec& term = spec_.terms[static_cast<std::size_t>(t)];
    const Bound& b = bound_[static_cast<std::size_t>(t)];
    switch (term.kind) {
      case TermKind::Sum: return 1.0;
      case TermKind::Origin: return (*b.node_cov)[static_cast<std::size_t>(i)];
      case TermKind::Destination: return (*b.node_cov)[static_cast<std::size_t>(j)];
      case TermKind::AbsDissimilarity:
        return std::abs((*b.node_cov)[static_cast<std::size_t>(i)] -
                        (*b.node_cov)[static_cast<std::size_t>(j)]);
      case TermKind::SignDirection: {
        const double xi = (*b.node_cov)[static_cast<std::size_t>(i)];
        const double xj = (*b.node_cov)[static_cast<std::size_t>(j)];
        return xj > xi ? 1.0 : (xj < xi ? -1.0 : 0.0);
      }
      case TermKind::Difference:
        return (*b.node_cov)[static_cast<std::size_t>(j)] -
               (*b.node_cov)[static_cast<std::size_t>(i)];
      case TermKind::DyadCovariate: return b.dyad_cov->value(i, j);
      case TermKind::RegionFixedEffect: {
        const NodeIndex node = term.role == EndpointRole::Origin ? i : j;
        return b.level_mask[static_cast<std::size_t>(node)] ? 1.0 : 0.0;
      }
      default:
        throw std::logic_error("linear_form on structural term");
    }
  }

  /// Exact value of g_t(y, X).
  double global_stat(int t, const CountNetwork& net) const {
    const TermSpec& term = spec_.terms[static_cast<std::size_t>(t)];
    switch (term.kind) {
      case TermKind::Sum:
        return static_cast<double>(net.total_count());
      case TermKind::Nonzero:
        return static_cast<double>(net.nonzero_dyads());
      case TermKind::MutualityMin: {
        Count total = 0;
        net.for_each_edge([&](NodeIndex i, NodeIndex j, Count v) {
          if (i < j) total += std::min(v, net.edge(j, i));
        });
        return static_cast<double>(total);
      }
      case TermKind::WaypointFlow: {
        Count total = 0;
        for (NodeIndex i = 0; i < net.n_nodes(); ++i)
          total += std::min(net.in_total(i), net.out_total(i));
        return static_cast<double>(total);
      }
      default: {
        double total = 0;
        net.for_each_edge([&](NodeIndex i, NodeIndex j, Count v) {
          total += linear_form(t, i, j) * static_cast<double>(v);
        });
        return total;
      }
    }
  }

  std::vector<double> global_stats(const CountNetwork& net) const {
    std::vector<double> values(static_cast<std::size_t>(n_terms()));
    for (int t = 0; t < n_terms(); ++t) values[static_cast<std::size_t>(t)] = global_stat(t, net);
    return values;
  }

  /// g_t(y with y_ij = k_new) - g_t(y with y_ij = k_old), without mutating
  /// the network. The network must currently hold y_ij = k_old.
  double change_stat(int t, const CountNetwork& net, NodeIndex i, NodeIndex j, Count k_old,
                     Count k_new) const {
    if (i == j) throw std::invalid_argument("change_stat on self-loop");
    if (net.edge(i, j) != k_old)
      throw std::invalid_argument("change_stat: stored value " +
                                  std::to_string(net.edge(i, j)) + " does not match k_old " +
                                  std::to_string(k_old));
    return change_stat_unchecked(t, net, i, j, k_old, k_new);
  }

  double change_stat_unchecked(int t, const CountNetwork& net, NodeIndex i, NodeIndex j,
                               Count k_old, Count k_new) const {
    const TermSpec& term = spec_.terms[static_cast<std::size_t>(t)];
    switch (term.kind) {
      case TermKind::Sum:
        return static_cast<double>(k_new - k_old);
      case TermKind::Nonzero:
        return (k_new > 0 ? 1.0 : 0.0) - (k_old > 0 ? 1.0 : 0.0);
      case TermKind::MutualityMin: {
        const Count reverse = net.edge(j, i);
        return static_cast<double>(std::min(k_new, reverse) - std::min(k_old, reverse));
      }
      case TermKind::WaypointFlow: {
        // Marginals with the focal edge removed; valid for any claimed k_old,
        // and identical to min(in, out + k_new - k_old) - min(in, out) when
        // the stored value is k_old.
        const Count stored = net.edge(i, j);
        const Count in_i = net.in_total(i), out_i0 = net.out_total(i) - stored;
        const Count in_j0 = net.in_total(j) - stored, out_j = net.out_total(j);
        return static_cast<double>(
            std::min(in_i, out_i0 + k_new) - std::min(in_i, out_i0 + k_old) +
            std::min(in_j0 + k_new, out_j) - std::min(in_j0 + k_old, out_j));
      }
      default:
        return linear_form(t, i, j) * static_cast<double>(k_new - k_old);
    }
  }

 private:
  struct Bound {
    const std::vector<double>* node_cov = nullptr;
    const DyadColumn* dyad_cov = nullptr;
    std::vector<char> level_mask;
  };

  ModelSpec spec_;
  const NodeTable* nodes_;
  std::vector<Bound> bound_;
};

/// Single-term conveniences mirroring the per-operation contracts; tests and
/// small tools use these, hot paths go through CompiledModel.
inline double global_stat(const TermSpec& term, const CountNetwork& net, const NodeTable& nodes,
                          const DyadTable& dyads) {
  ModelSpec one{.terms = {term}};
  return CompiledModel(one, nodes, dyads).global_stat(0, net);
}

inline double change_stat(const TermSpec& term, const CountNetwork& net, const NodeTable& nodes,
                          const DyadTable& dyads, NodeIndex i, NodeIndex j, Count k_old,
                          Count k_new) {
  ModelSpec one{.terms = {term}};
  return CompiledModel(one, nodes, dyads).change_stat(0, net, i, j, k_old, k_new);
}

}  // namespace vergm
