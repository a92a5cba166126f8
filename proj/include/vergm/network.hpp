#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "vergm/common.hpp"

namespace vergm {

/// Directed network with non-negative integer edge values over a fixed node
/// set. Storage is sparse (zero-valued dyads are absent) with both in- and
/// out-adjacency kept, plus cached marginal totals so that node-level change
/// statistics are O(1).
///
/// Thread contract: many concurrent readers OR one writer. The estimator
/// reads a frozen network from parallel workers; each sampler chain owns a
/// private copy.
class CountNetwork {
 public:
  explicit CountNetwork(NodeIndex n_nodes)
      : n_(n_nodes),
        out_adj_(static_cast<std::size_t>(n_nodes)),
        in_adj_(static_cast<std::size_t>(n_nodes)),
        out_total_(static_cast<std::size_t>(n_nodes), 0),
        in_total_(static_cast<std::size_t>(n_nodes), 0) {
    if (n_nodes < 0) throw std::invalid_argument("negative node count");
  }

  NodeIndex n_nodes() const { return n_; }

  Count edge(NodeIndex i, NodeIndex j) const {
    const auto& row = out_adj_[static_cast<std::size_t>(i)];
    auto it = row.find(j);
    return it == row.end() ? 0 : it->second;
  }

  /// Sets y_ij = k. Setting 0 removes storage; totals update incrementally.
  void set_edge(NodeIndex i, NodeIndex j, Count k) {
    check_dyad(i, j);
    if (k < 0) throw std::invalid_argument("negative edge count");
    auto& row = out_adj_[static_cast<std::size_t>(i)];
    auto it = row.find(j);
    const Count old = it == row.end() ? 0 : it->second;
    if (old == k) return;
    const Count delta = k - old;
    if (k == 0) {
      row.erase(it);
      in_adj_[static_cast<std::size_t>(j)].erase(i);
      --stored_;
    } else {
      if (old == 0) {
        row.emplace(j, k);
        in_adj_[static_cast<std::size_t>(j)].emplace(i, k);
        ++stored_;
      } else {
        it->second = k;
        in_adj_[static_cast<std::size_t>(j)][i] = k;
      }
    }
    out_total_[static_cast<std::size_t>(i)] += delta;
    in_total_[static_cast<std::size_t>(j)] += delta;
    total_ += delta;
  }

  Count out_total(NodeIndex i) const { return out_total_[static_cast<std::size_t>(i)]; }
  Count in_total(NodeIndex j) const { return in_total_[static_cast<std::size_t>(j)]; }

  /// Sum of all edge values.
  Count total_count() const { return total_; }

  /// Number of stored (strictly positive) dyads.
  std::int64_t nonzero_dyads() const { return stored_; }

  const std::unordered_map<NodeIndex, Count>& out_edges(NodeIndex i) const {
    return out_adj_[static_cast<std::size_t>(i)];
  }
  const std::unordered_map<NodeIndex, Count>& in_edges(NodeIndex j) const {
    return in_adj_[static_cast<std::size_t>(j)];
  }

  /// Largest stored count on row i or column j (0 when both empty).
  Count row_col_max(NodeIndex i, NodeIndex j) const {
    Count m = 0;
    for (const auto& [k, v] : out_adj_[static_cast<std::size_t>(i)]) m = std::max(m, v);
    for (const auto& [k, v] : in_adj_[static_cast<std::size_t>(j)]) m = std::max(m, v);
    return m;
  }

  /// Visits every stored edge as fn(i, j, count). Order is unspecified.
  template <typename Fn>
  void for_each_edge(Fn&& fn) const {
    for (NodeIndex i = 0; i < n_; ++i)
      for (const auto& [j, v] : out_adj_[static_cast<std::size_t>(i)]) fn(i, j, v);
  }

  /// Stored edges sorted by (origin, dest); the canonical export order.
  std::vector<EdgeTriple> sorted_edges() const {
    std::vector<EdgeTriple> edges;
    edges.reserve(static_cast<std::size_t>(stored_));
    for_each_edge([&](NodeIndex i, NodeIndex j, Count v) { edges.push_back({i, j, v}); });
    std::sort(edges.begin(), edges.end(), [](const EdgeTriple& a, const EdgeTriple& b) {
      return a.origin != b.origin ? a.origin < b.origin : a.dest < b.dest;
    });
    return edges;
  }

  CountNetwork transposed() const {
    CountNetwork t(n_);
    for_each_edge([&](NodeIndex i, NodeIndex j, Count v) { t.set_edge(j, i, v); });
    return t;
  }

  friend bool operator==(const CountNetwork& a, const CountNetwork& b) {
    return a.n_ == b.n_ && a.out_adj_ == b.out_adj_;
  }

 private:
  void check_dyad(NodeIndex i, NodeIndex j) const {
    if (i == j) throw std::invalid_argument("self-loop at node " + std::to_string(i));
    if (i < 0 || j < 0 || i >= n_ || j >= n_)
      throw std::out_of_range("node index out of range");
  }

  NodeIndex n_;
  std::vector<std::unordered_map<NodeIndex, Count>> out_adj_;
  std::vector<std::unordered_map<NodeIndex, Count>> in_adj_;
  std::vector<Count> out_total_;
  std::vector<Count> in_total_;
  Count total_ = 0;
  std::int64_t stored_ = 0;
};

/// Builds a network from index triples. Duplicate dyads are an error;
/// zero-count rows are accepted and store nothing.
inline CountNetwork build_network(NodeIndex n_nodes, const std::vector<EdgeTriple>& edges) {
  CountNetwork net(n_nodes);
  for (const auto& e : edges) {
    if (e.count < 0)
      throw std::invalid_argument("negative count on dyad (" + std::to_string(e.origin) +
                                  ", " + std::to_string(e.dest) + ")");
    if (e.origin == e.dest)
      throw std::invalid_argument("self-loop at node " + std::to_string(e.origin));
    if (net.edge(e.origin, e.dest) != 0)
      throw std::invalid_argument("duplicate dyad (" + std::to_string(e.origin) + ", " +
                                  std::to_string(e.dest) + ")");
    if (e.count > 0) net.set_edge(e.origin, e.dest, e.count);
  }
  return net;
}

/// Total number of ordered dyads on n nodes.
inline std::int64_t ordered_dyad_count(NodeIndex n) {
  return static_cast<std::int64_t>(n) * (n - 1);
}

/// Maps a flat index in [0, n(n-1)) to the ordered dyad (i, j), i != j.
inline std::pair<NodeIndex, NodeIndex> dyad_from_flat(NodeIndex n, std::int64_t flat) {
  const NodeIndex i = static_cast<NodeIndex>(flat / (n - 1));
  const NodeIndex r = static_cast<NodeIndex>(flat % (n - 1));
  return {i, r + (r >= i ? 1 : 0)};
}

}  // namespace vergm
