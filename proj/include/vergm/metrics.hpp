#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vergm/network.hpp"
#include "vergm/node_table.hpp"

namespace vergm {

/// Node-to-group assignment with group populations, built from a categorical
/// column (e.g. state).
struct Grouping {
  std::vector<std::string> group_names;
  std::vector<std::int32_t> node_group;   // per node
  std::vector<double> group_population;

  std::int32_t n_groups() const { return static_cast<std::int32_t>(group_names.size()); }

  std::int32_t group_index(const std::string& name) const {
    for (std::size_t g = 0; g < group_names.size(); ++g)
      if (group_names[g] == name) return static_cast<std::int32_t>(g);
    throw std::invalid_argument("unknown group '" + name + "'");
  }
};

inline Grouping make_grouping(const NodeTable& nodes, const std::string& column) {
  const auto& labels = nodes.categorical(column);
  Grouping grouping;
  grouping.node_group.resize(labels.size());
  std::map<std::string, std::int32_t> index;  // ordered: group ids sort lexically
  for (const auto& label : labels) index.emplace(label, 0);
  std::int32_t next = 0;
  for (auto& [label, idx] : index) idx = next++;
  grouping.group_names.resize(index.size());
  grouping.group_population.assign(index.size(), 0.0);
  for (auto& [label, idx] : index) grouping.group_names[static_cast<std::size_t>(idx)] = label;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::int32_t g = index.at(labels[i]);
    grouping.node_group[i] = g;
    grouping.group_population[static_cast<std::size_t>(g)] +=
        nodes.population(static_cast<NodeIndex>(i));
  }
  return grouping;
}

struct GroupMetrics {
  std::string group;
  double population = 0.0;
  double in_migrants = 0.0;    // inter-group inflow only
  double out_migrants = 0.0;   // inter-group outflow only
  double net_count = 0.0;      // in - out
  double net_rate = 0.0;       // net / population
  std::optional<double> mii;   // net / (in + out); missing when turnover is 0
};

struct MetricReport {
  std::vector<GroupMetrics> groups;
  double total_migrants = 0.0;   // sum of all edge values, within-group included
  double dyad_asymmetry = 0.0;   // A_d = sum over unordered pairs |y_ij - y_ji|
  double node_asymmetry = 0.0;   // A_n = sum over nodes |in - out| / 2
};

enum class Metric { NetCount, NetRate, Mii };

inline std::string metric_name(Metric m) {
  switch (m) {
    case Metric::NetCount: return "net_count";
    case Metric::NetRate: return "net_rate";
    case Metric::Mii: return "mii";
  }
  return "?";
}

inline Metric metric_from_name(const std::string& name) {
  for (Metric m : {Metric::NetCount, Metric::NetRate, Metric::Mii})
    if (metric_name(m) == name) return m;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

/// Group-level migration metrics plus the network asymmetry scalars.
/// Within-group flows are excluded from a group's in/out-migrant counts:
/// the group metrics measure cross-border redistribution.
inline MetricReport compute_metrics(const CountNetwork& net, const Grouping& grouping) {
  const NodeIndex n = net.n_nodes();
  if (static_cast<std::size_t>(n) != grouping.node_group.size())
    throw std::invalid_argument("grouping does not cover the network's nodes");
  for (double pop : grouping.group_population)
    if (!(pop > 0)) throw std::invalid_argument("group populations must be positive");

  MetricReport report;
  const std::int32_t n_groups = grouping.n_groups();
  report.groups.resize(static_cast<std::size_t>(n_groups));
  for (std::int32_t g = 0; g < n_groups; ++g) {
    report.groups[static_cast<std::size_t>(g)].group =
        grouping.group_names[static_cast<std::size_t>(g)];
    report.groups[static_cast<std::size_t>(g)].population =
        grouping.group_population[static_cast<std::size_t>(g)];
  }

  Count dyad_abs = 0;
  net.for_each_edge([&](NodeIndex i, NodeIndex j, Count v) {
    report.total_migrants += static_cast<double>(v);
    const std::int32_t gi = grouping.node_group[static_cast<std::size_t>(i)];
    const std::int32_t gj = grouping.node_group[static_cast<std::size_t>(j)];
    if (gi != gj) {
      report.groups[static_cast<std::size_t>(gi)].out_migrants += static_cast<double>(v);
      report.groups[static_cast<std::size_t>(gj)].in_migrants += static_cast<double>(v);
    }
    if (i < j) dyad_abs += std::abs(v - net.edge(j, i));
    else if (net.edge(j, i) == 0) dyad_abs += v;  // pair visited once when reverse is absent
  });
  report.dyad_asymmetry = static_cast<double>(dyad_abs);

  Count node_abs = 0;
  for (NodeIndex i = 0; i < n; ++i) node_abs += std::abs(net.in_total(i) - net.out_total(i));
  report.node_asymmetry = static_cast<double>(node_abs) / 2.0;

  for (auto& g : report.groups) {
    g.net_count = g.in_migrants - g.out_migrants;
    g.net_rate = g.net_count / g.population;
    const double turnover = g.in_migrants + g.out_migrants;
    if (turnover > 0) g.mii = g.net_count / turnover;
  }
  return report;
}

inline double metric_value(const GroupMetrics& g, Metric metric) {
  switch (metric) {
    case Metric::NetCount: return g.net_count;
    case Metric::NetRate: return g.net_rate;
    case Metric::Mii:
      // Missing MII ranks last: below every defined value.
      return g.mii ? *g.mii : -std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

/// Rank 1 = largest metric value (least net loss at the top); ties receive
/// the average of the positions they span.
inline std::vector<double> rank_groups(const MetricReport& report, Metric metric) {
  const std::size_t n = report.groups.size();
  std::vector<std::size_t> order(n);
  for (std::size_t g = 0; g < n; ++g) order[g] = g;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return metric_value(report.groups[a], metric) > metric_value(report.groups[b], metric);
  });
  std::vector<double> ranks(n, 0.0);
  std::size_t pos = 0;
  while (pos < n) {
    std::size_t tie_end = pos + 1;
    const double v = metric_value(report.groups[order[pos]], metric);
    while (tie_end < n && metric_value(report.groups[order[tie_end]], metric) == v) ++tie_end;
    const double avg_rank = (static_cast<double>(pos + 1) + static_cast<double>(tie_end)) / 2.0;
    for (std::size_t k = pos; k < tie_end; ++k) ranks[order[k]] = avg_rank;
    pos = tie_end;
  }
  return ranks;
}

/// Quantile position of each subset node's covariate value within the
/// all-node empirical distribution: q(v) = #{x <= v} / n, so the maximum
/// sits at 1.0 and a full subset is uniform on (0, 1]. The subset aggregate
/// is its population-weighted mean, located in the same distribution.
struct CovariateQuantiles {
  std::string covariate;
  std::vector<std::pair<std::string, double>> node_quantiles;  // (node id, quantile)
  double aggregate_value = 0.0;
  double aggregate_quantile = 0.0;
};

inline std::vector<CovariateQuantiles> attribute_quantiles(const NodeTable& nodes,
                                                           const std::vector<NodeIndex>& subset) {
  if (subset.empty()) throw std::invalid_argument("attribute_quantiles: empty subset");
  const double n = static_cast<double>(nodes.size());
  std::vector<CovariateQuantiles> out;
  for (const auto& name : nodes.numeric_names()) {
    const auto& values = nodes.numeric(name);
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    auto quantile_of = [&](double v) {
      const auto upper = std::upper_bound(sorted.begin(), sorted.end(), v);
      return static_cast<double>(upper - sorted.begin()) / n;
    };
    CovariateQuantiles cq;
    cq.covariate = name;
    double weighted = 0.0, weight = 0.0;
    for (NodeIndex i : subset) {
      const double v = values[static_cast<std::size_t>(i)];
      cq.node_quantiles.emplace_back(nodes.id(i), quantile_of(v));
      weighted += nodes.population(i) * v;
      weight += nodes.population(i);
    }
    if (weight <= 0) throw std::invalid_argument("attribute_quantiles: subset has zero weight");
    cq.aggregate_value = weighted / weight;
    cq.aggregate_quantile = quantile_of(cq.aggregate_value);
    out.push_back(std::move(cq));
  }
  return out;
}

}  // namespace vergm
