#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "vergm/node_table.hpp"
#include "vergm/terms.hpp"

namespace vergm {

/// A fitted functional-form group: terms sharing one node covariate (origin,
/// destination, dissimilarity, sign-direction, difference forms) together
/// with their coefficients.
struct TermGroup {
  std::string name;
  std::string covariate;
  std::vector<TermSpec> terms;       // node-form terms, coefficients present
  std::vector<double> coefficients;
};

/// Collects the node-form terms labeled with `group` from a fitted model and
/// checks they share a single covariate.
inline TermGroup extract_term_group(const ModelSpec& fitted, const std::string& group) {
  TermGroup out;
  out.name = group;
  for (const auto& term : fitted.terms) {
    if (term.group != group) continue;
    if (!term.is_node_form())
      throw std::invalid_argument("term '" + term.name() +
                                  "' in group '" + group + "' has no origin/destination functional form");
    if (!term.coefficient)
      throw std::invalid_argument("term '" + term.name() + "' has no coefficient");
    if (out.terms.empty()) {
      out.covariate = term.covariate;
    } else if (term.covariate != out.covariate) {
      throw std::invalid_argument("group '" + group + "' mixes covariates '" + out.covariate +
                                  "' and '" + term.covariate + "'");
    }
    out.terms.push_back(term);
    out.coefficients.push_back(*term.coefficient);
  }
  if (out.terms.empty()) throw std::invalid_argument("no terms labeled with group '" + group + "'");
  return out;
}

/// How the X0 normalizer is chosen: population-weighted mean for shares,
/// (optionally weighted) median for log-priced covariates, or an explicit
/// value.
enum class NormalizerKind { PopulationWeightedMean, Median, WeightedMedian, Fixed };

inline NormalizerKind normalizer_from_name(const std::string& name) {
  if (name == "pw-mean") return NormalizerKind::PopulationWeightedMean;
  if (name == "median") return NormalizerKind::Median;
  if (name == "weighted-median") return NormalizerKind::WeightedMedian;
  if (name == "fixed") return NormalizerKind::Fixed;
  throw std::invalid_argument("unknown normalizer '" + name + "'");
}

inline double normalizer_value(const NodeTable& nodes, const std::string& covariate,
                               NormalizerKind kind, double fixed_value = 0.0) {
  const auto& values = nodes.numeric(covariate);
  switch (kind) {
    case NormalizerKind::PopulationWeightedMean: {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        num += nodes.population(static_cast<NodeIndex>(i)) * values[i];
        den += nodes.population(static_cast<NodeIndex>(i));
      }
      if (!(den > 0)) throw std::invalid_argument("normalizer: population sums to zero");
      return num / den;
    }
    case NormalizerKind::Median: {
      std::vector<double> sorted(values);
      std::sort(sorted.begin(), sorted.end());
      const std::size_t n = sorted.size();
      return n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
    }
    case NormalizerKind::WeightedMedian: {
      std::vector<std::pair<double, double>> vw(values.size());
      for (std::size_t i = 0; i < vw.size(); ++i)
        vw[i] = {values[i], nodes.population(static_cast<NodeIndex>(i))};
      std::sort(vw.begin(), vw.end());
      double total = 0.0;
      for (const auto& [v, w] : vw) total += w;
      double cum = 0.0;
      for (const auto& [v, w] : vw) {
        cum += w;
        if (cum >= total / 2.0) return v;
      }
      return vw.back().first;
    }
    case NormalizerKind::Fixed:
      return fixed_value;
  }
  return fixed_value;
}

struct GridSpec {
  int resolution = 101;
  double min_value = 0.0;
  double max_value = 1.0;

  std::vector<double> points() const {
    if (resolution < 2) throw std::invalid_argument("grid resolution must be at least 2");
    std::vector<double> pts(static_cast<std::size_t>(resolution));
    const double step = (max_value - min_value) / static_cast<double>(resolution - 1);
    for (int g = 0; g < resolution; ++g)
      pts[static_cast<std::size_t>(g)] = min_value + step * static_cast<double>(g);
    return pts;
  }
};

inline GridSpec grid_over_observed_range(const NodeTable& nodes, const std::string& covariate,
                                         int resolution = 101) {
  const auto& values = nodes.numeric(covariate);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {resolution, *lo, *hi};
}

/// Expected-flow ratio surface: cell (x_i, x_j) holds
///   exp(sum_k theta_k * [f_k(x_i, x_j) - f_k(X0, X0)]),
/// the predicted flow relative to a dyad where both endpoints sit at the
/// normalizer value X0.
struct FFGrid {
  std::string label;
  std::vector<double> origin_values;
  std::vector<double> dest_values;
  std::vector<double> ratio;  // row-major: origin index * n_dest + dest index

  double at(std::size_t oi, std::size_t di) const {
    return ratio[oi * dest_values.size() + di];
  }
};

inline double ffgrid_log_ratio(const TermGroup& group, double x_i, double x_j, double x0) {
  double log_ratio = 0.0;
  for (std::size_t k = 0; k < group.terms.size(); ++k)
    log_ratio += group.coefficients[k] *
                 (covariate_form(group.terms[k], x_i, x_j) - covariate_form(group.terms[k], x0, x0));
  return log_ratio;
}

inline FFGrid ffgrid(const TermGroup& group, const GridSpec& grid, double x0,
                     const std::string& label = "") {
  FFGrid out;
  out.label = label.empty() ? group.name : label;
  out.origin_values = grid.points();
  out.dest_values = grid.points();
  out.ratio.resize(out.origin_values.size() * out.dest_values.size());
  for (std::size_t oi = 0; oi < out.origin_values.size(); ++oi)
    for (std::size_t di = 0; di < out.dest_values.size(); ++di)
      out.ratio[oi * out.dest_values.size() + di] =
          std::exp(ffgrid_log_ratio(group, out.origin_values[oi], out.dest_values[di], x0));
  return out;
}

/// Single-term grid; composite group grids equal the entrywise product of
/// these.
inline FFGrid ffgrid_single(const TermSpec& term, double theta, const GridSpec& grid, double x0) {
  TermGroup one;
  one.name = term.name();
  one.covariate = term.covariate;
  one.terms = {term};
  one.coefficients = {theta};
  return ffgrid(one, grid, x0, term.name());
}

/// Focal-node curves: r_in(x) is the expected-flow ratio from an origin at
/// covariate level x into the focal value x_F; r_out(x) the reverse. The
/// histogram column carries population mass per grid cell, so the juxtaposed
/// sign of net(x) shows where mass sits relative to net gain/loss.
struct FocalCurves {
  std::vector<double> x;
  std::vector<double> r_in;
  std::vector<double> r_out;
  std::vector<double> net;       // r_in - r_out
  std::vector<double> pop_mass;
};

inline FocalCurves focal_curves(const TermGroup& group, double focal_value, const GridSpec& grid,
                                double x0, const NodeTable& nodes) {
  FocalCurves out;
  out.x = grid.points();
  const std::size_t n = out.x.size();
  out.r_in.resize(n);
  out.r_out.resize(n);
  out.net.resize(n);
  out.pop_mass.assign(n, 0.0);
  for (std::size_t g = 0; g < n; ++g) {
    out.r_in[g] = std::exp(ffgrid_log_ratio(group, out.x[g], focal_value, x0));
    out.r_out[g] = std::exp(ffgrid_log_ratio(group, focal_value, out.x[g], x0));
    out.net[g] = out.r_in[g] - out.r_out[g];
  }
  // Population histogram on the grid cells: node mass lands in the nearest
  // grid point's cell; values outside the range clamp to the end cells.
  const auto& values = nodes.numeric(group.covariate);
  const double lo = grid.min_value;
  const double span = grid.max_value - grid.min_value;
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::size_t cell;
    if (span <= 0) {
      cell = 0;
    } else {
      const double t = (values[i] - lo) / span * static_cast<double>(n - 1);
      const double clamped = std::clamp(t, 0.0, static_cast<double>(n - 1));
      cell = static_cast<std::size_t>(std::llround(clamped));
    }
    out.pop_mass[cell] += nodes.population(static_cast<NodeIndex>(i));
  }
  return out;
}

}  // namespace vergm
