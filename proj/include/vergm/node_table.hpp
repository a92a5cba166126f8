#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "vergm/common.hpp"

namespace vergm {

/// IUGG mean Earth radius, km.
inline constexpr double kEarthRadiusKm = 6371.0088;

/// Counties never truly coincide; coincident coordinates get a 1 km floor
/// before the log so log_distance stays finite and non-negative.
inline constexpr double kMinDistanceKm = 1.0;

/// Great-circle distance in km (haversine).
inline double great_circle_km(double lat1, double lon1, double lat2, double lon2) {
  const double rad = std::numbers::pi / 180.0;
  const double phi1 = lat1 * rad;
  const double phi2 = lat2 * rad;
  const double dphi = (lat2 - lat1) * rad;
  const double dlambda = (lon2 - lon1) * rad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

/// Per-node covariates and metadata. Node ids are opaque strings mapped to
/// dense indices at load time; all network/dyad structures use the indices.
class NodeTable {
 public:
  NodeIndex size() const { return static_cast<NodeIndex>(ids_.size()); }

  NodeIndex add_node(const std::string& id, double lat, double lon, double population) {
    if (index_.count(id)) throw std::invalid_argument("duplicate node id '" + id + "'");
    const NodeIndex idx = size();
    index_.emplace(id, idx);
    ids_.push_back(id);
    lat_.push_back(lat);
    lon_.push_back(lon);
    population_.push_back(population);
    for (auto& [name, values] : numeric_) values.resize(ids_.size(), 0.0);
    for (auto& [name, values] : categorical_) values.resize(ids_.size());
    return idx;
  }

  std::optional<NodeIndex> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  NodeIndex index_of(const std::string& id) const {
    auto idx = find(id);
    if (!idx) throw std::invalid_argument("unknown node id '" + id + "'");
    return *idx;
  }

  const std::string& id(NodeIndex i) const { return ids_[static_cast<std::size_t>(i)]; }
  double lat(NodeIndex i) const { return lat_[static_cast<std::size_t>(i)]; }
  double lon(NodeIndex i) const { return lon_[static_cast<std::size_t>(i)]; }
  double population(NodeIndex i) const { return population_[static_cast<std::size_t>(i)]; }
  void set_population(NodeIndex i, double p) { population_[static_cast<std::size_t>(i)] = p; }

  double total_population() const {
    double total = 0;
    for (double p : population_) total += p;
    return total;
  }

  void add_numeric(const std::string& name, std::vector<double> values) {
    if (values.size() != ids_.size())
      throw std::invalid_argument("covariate '" + name + "' has wrong length");
    if (!numeric_.emplace(name, std::move(values)).second)
      throw std::invalid_argument("duplicate covariate '" + name + "'");
    numeric_order_.push_back(name);
  }

  void add_categorical(const std::string& name, std::vector<std::string> values) {
    if (values.size() != ids_.size())
      throw std::invalid_argument("categorical '" + name + "' has wrong length");
    categorical_.emplace(name, std::move(values));
  }

  bool has_numeric(const std::string& name) const { return numeric_.count(name) > 0; }
  bool has_categorical(const std::string& name) const { return categorical_.count(name) > 0; }

  const std::vector<double>& numeric(const std::string& name) const {
    auto it = numeric_.find(name);
    if (it == numeric_.end()) throw std::invalid_argument("unknown covariate '" + name + "'");
    return it->second;
  }

  std::vector<double>& numeric_mutable(const std::string& name) {
    auto it = numeric_.find(name);
    if (it == numeric_.end()) throw std::invalid_argument("unknown covariate '" + name + "'");
    return it->second;
  }

  const std::vector<std::string>& categorical(const std::string& name) const {
    auto it = categorical_.find(name);
    if (it == categorical_.end())
      throw std::invalid_argument("unknown categorical column '" + name + "'");
    return it->second;
  }

  /// Numeric covariate names in input-file order.
  const std::vector<std::string>& numeric_names() const { return numeric_order_; }

  /// Covariates named p_* are shares and must lie in [0, 1].
  static bool is_share_covariate(const std::string& name) { return name.rfind("p_", 0) == 0; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::vector<double> lat_, lon_, population_;
  std::map<std::string, std::vector<double>> numeric_;
  std::map<std::string, std::vector<std::string>> categorical_;
  std::vector<std::string> numeric_order_;
};

/// One per-dyad real covariate. Storage adapts to how the column is defined:
/// dense matrices for arbitrary values, category-equality indicators, sparse
/// maps with a default, or a single constant (the form knockouts produce).
class DyadColumn {
 public:
  static DyadColumn dense(NodeIndex n, std::vector<double> values) {
    if (values.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
      throw std::invalid_argument("dense dyad column has wrong size");
    DyadColumn c;
    c.n_ = n;
    c.storage_ = Storage::Dense;
    c.dense_ = std::move(values);
    return c;
  }

  static DyadColumn constant(NodeIndex n, double value) {
    DyadColumn c;
    c.n_ = n;
    c.storage_ = Storage::Constant;
    c.constant_ = value;
    return c;
  }

  static DyadColumn same_category(std::vector<std::int32_t> codes) {
    DyadColumn c;
    c.n_ = static_cast<NodeIndex>(codes.size());
    c.storage_ = Storage::SameCategory;
    c.codes_ = std::move(codes);
    return c;
  }

  static DyadColumn sparse(NodeIndex n, std::unordered_map<std::uint64_t, double> values,
                           double default_value) {
    DyadColumn c;
    c.n_ = n;
    c.storage_ = Storage::Sparse;
    c.sparse_ = std::move(values);
    c.constant_ = default_value;
    return c;
  }

  NodeIndex n() const { return n_; }

  double value(NodeIndex i, NodeIndex j) const {
    switch (storage_) {
      case Storage::Dense:
        return dense_[flat(i, j)];
      case Storage::Constant:
        return constant_;
      case Storage::SameCategory:
        return codes_[static_cast<std::size_t>(i)] == codes_[static_cast<std::size_t>(j)] ? 1.0
                                                                                          : 0.0;
      case Storage::Sparse: {
        auto it = sparse_.find(key(i, j));
        return it == sparse_.end() ? constant_ : it->second;
      }
    }
    return 0.0;
  }

  /// Mean over all ordered dyads i != j.
  double mean_over_dyads() const {
    if (storage_ == Storage::Constant) return constant_;
    const std::int64_t dyads = static_cast<std::int64_t>(n_) * (n_ - 1);
    if (dyads <= 0) throw std::invalid_argument("dyad mean undefined for n < 2");
    double sum = 0;
    for (NodeIndex i = 0; i < n_; ++i)
      for (NodeIndex j = 0; j < n_; ++j)
        if (i != j) sum += value(i, j);
    return sum / static_cast<double>(dyads);
  }

  void fill_constant(double v) {
    storage_ = Storage::Constant;
    constant_ = v;
    dense_.clear();
    codes_.clear();
    sparse_.clear();
  }

 private:
  enum class Storage { Dense, Constant, SameCategory, Sparse };

  std::size_t flat(NodeIndex i, NodeIndex j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(j);
  }

  static std::uint64_t key(NodeIndex i, NodeIndex j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
           static_cast<std::uint32_t>(j);
  }

  NodeIndex n_ = 0;
  Storage storage_ = Storage::Constant;
  double constant_ = 0.0;
  std::vector<double> dense_;
  std::vector<std::int32_t> codes_;
  std::unordered_map<std::uint64_t, double> sparse_;
};

struct DyadTable {
  std::map<std::string, DyadColumn> columns;

  bool has(const std::string& name) const { return columns.count(name) > 0; }

  const DyadColumn& column(const std::string& name) const {
    auto it = columns.find(name);
    if (it == columns.end())
      throw std::invalid_argument("unknown dyad covariate '" + name + "'");
    return it->second;
  }
};

/// log of great-circle distance in km between every node pair; symmetric by
/// construction, with the 1 km floor applied before the log.
inline DyadColumn pairwise_log_distance(const NodeTable& nodes) {
  const NodeIndex n = nodes.size();
  std::vector<double> values(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  for (NodeIndex i = 0; i < n; ++i) {
    for (NodeIndex j = i + 1; j < n; ++j) {
      const double d =
          great_circle_km(nodes.lat(i), nodes.lon(i), nodes.lat(j), nodes.lon(j));
      const double v = std::log(std::max(d, kMinDistanceKm));
      values[static_cast<std::size_t>(i) * n + j] = v;
      values[static_cast<std::size_t>(j) * n + i] = v;
    }
  }
  return DyadColumn::dense(n, std::move(values));
}

/// 1 when both endpoints share the given categorical label (e.g. state).
inline DyadColumn same_category_column(const NodeTable& nodes, const std::string& column) {
  const auto& labels = nodes.categorical(column);
  std::unordered_map<std::string, std::int32_t> code_of;
  std::vector<std::int32_t> codes(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = code_of.emplace(labels[i], static_cast<std::int32_t>(code_of.size()));
    codes[i] = it->second;
  }
  return DyadColumn::same_category(std::move(codes));
}

/// log(1 + past count); zero-flow dyads default to log1p(0) = 0.
inline DyadColumn log_past_flow_column(NodeIndex n, const std::vector<EdgeTriple>& past_edges) {
  std::unordered_map<std::uint64_t, double> values;
  values.reserve(past_edges.size());
  for (const auto& e : past_edges) {
    const std::uint64_t key =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(e.origin)) << 32) |
        static_cast<std::uint32_t>(e.dest);
    values[key] = std::log1p(static_cast<double>(e.count));
  }
  return DyadColumn::sparse(n, std::move(values), 0.0);
}

}  // namespace vergm
