#pragma once

// Fixtures and independent oracles shared by the test suites. The oracles
// deliberately avoid the library's sparse/incremental code paths: statistics
// are recomputed from dense matrices, GLM fits via textbook IRLS, and exact
// distributions via full state-space enumeration.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vergm/csv.hpp"
#include "vergm/network.hpp"
#include "vergm/node_table.hpp"
#include "vergm/rng.hpp"
#include "vergm/terms.hpp"

namespace testsupport {

// ---------------------------------------------------------------- dense net

struct DenseNet {
  int n = 0;
  std::vector<long long> y;  // n*n, row-major, diagonal unused

  explicit DenseNet(int nodes) : n(nodes), y(static_cast<std::size_t>(nodes) * nodes, 0) {}

  long long& at(int i, int j) { return y[static_cast<std::size_t>(i) * n + j]; }
  long long at(int i, int j) const { return y[static_cast<std::size_t>(i) * n + j]; }
};

inline DenseNet to_dense(const vergm::CountNetwork& net) {
  DenseNet dense(net.n_nodes());
  net.for_each_edge([&](vergm::NodeIndex i, vergm::NodeIndex j, vergm::Count v) {
    dense.at(i, j) = v;
  });
  return dense;
}

inline double oracle_sum(const DenseNet& net) {
  long long total = 0;
  for (int i = 0; i < net.n; ++i)
    for (int j = 0; j < net.n; ++j)
      if (i != j) total += net.at(i, j);
  return static_cast<double>(total);
}

inline double oracle_nonzero(const DenseNet& net) {
  long long total = 0;
  for (int i = 0; i < net.n; ++i)
    for (int j = 0; j < net.n; ++j)
      if (i != j && net.at(i, j) > 0) ++total;
  return static_cast<double>(total);
}

inline double oracle_mutuality(const DenseNet& net) {
  long long total = 0;
  for (int i = 0; i < net.n; ++i)
    for (int j = i + 1; j < net.n; ++j) total += std::min(net.at(i, j), net.at(j, i));
  return static_cast<double>(total);
}

inline double oracle_waypoint(const DenseNet& net) {
  long long total = 0;
  for (int i = 0; i < net.n; ++i) {
    long long in = 0, out = 0;
    for (int j = 0; j < net.n; ++j)
      if (i != j) {
        out += net.at(i, j);
        in += net.at(j, i);
      }
    total += std::min(in, out);
  }
  return static_cast<double>(total);
}

template <typename FormFn>
double oracle_linear(const DenseNet& net, FormFn&& form) {
  double total = 0;
  for (int i = 0; i < net.n; ++i)
    for (int j = 0; j < net.n; ++j)
      if (i != j) total += form(i, j) * static_cast<double>(net.at(i, j));
  return total;
}

// ------------------------------------------------------------------ tables

/// Node table with deterministic pseudo-random covariates:
///   p_democrat, p_rural in [0,1]; log_housing_cost around log(1000);
///   log_population = log(population). States cycle A.., two regions.
inline vergm::NodeTable make_nodes(int n, std::uint64_t seed, int n_states = 4) {
  vergm::Rng rng(seed);
  vergm::NodeTable nodes;
  std::vector<double> p_democrat, p_rural, log_cost, log_pop;
  std::vector<std::string> states, regions;
  for (int i = 0; i < n; ++i) {
    const double lat = -60.0 + 120.0 * vergm::uniform01(rng);
    const double lon = -180.0 + 360.0 * vergm::uniform01(rng);
    const double population = 1000.0 + 99000.0 * vergm::uniform01(rng);
    nodes.add_node("N" + std::to_string(i), lat, lon, population);
    p_democrat.push_back(vergm::uniform01(rng));
    p_rural.push_back(vergm::uniform01(rng));
    log_cost.push_back(std::log(1000.0) + (vergm::uniform01(rng) - 0.5));
    log_pop.push_back(std::log(population));
    states.push_back(std::string(1, static_cast<char>('A' + i % n_states)));
    regions.push_back(i % 2 == 0 ? "East" : "West");
  }
  nodes.add_categorical("state", std::move(states));
  nodes.add_categorical("region", std::move(regions));
  nodes.add_numeric("p_democrat", std::move(p_democrat));
  nodes.add_numeric("p_rural", std::move(p_rural));
  nodes.add_numeric("log_housing_cost", std::move(log_cost));
  nodes.add_numeric("log_population", std::move(log_pop));
  return nodes;
}

inline vergm::DyadTable make_dyads(const vergm::NodeTable& nodes) {
  vergm::DyadTable dyads;
  dyads.columns.emplace("log_distance", vergm::pairwise_log_distance(nodes));
  dyads.columns.emplace("same_state", vergm::same_category_column(nodes, "state"));
  return dyads;
}

/// Random sparse network: each dyad is present with probability `density`
/// and gets a count uniform on 1..max_count.
inline vergm::CountNetwork random_network(int n, std::uint64_t seed, double density = 0.4,
                                          vergm::Count max_count = 5) {
  vergm::Rng rng(seed);
  vergm::CountNetwork net(static_cast<vergm::NodeIndex>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && vergm::uniform01(rng) < density)
        net.set_edge(i, j, 1 + static_cast<vergm::Count>(vergm::uniform_below(
                               rng, static_cast<std::uint64_t>(max_count))));
  return net;
}

// ---------------------------------------------------------------- GLM IRLS

/// Textbook Poisson-GLM maximum likelihood via iteratively reweighted least
/// squares on an explicit design matrix (log link).
inline Eigen::VectorXd irls_poisson(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                    int max_iter = 200, double tol = 1e-12) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(design.cols());
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd mu = (design * beta).array().exp();
    const Eigen::VectorXd score = design.transpose() * (y - mu);
    const Eigen::MatrixXd info =
        design.transpose() * mu.asDiagonal() * design;
    const Eigen::VectorXd step = info.ldlt().solve(score);
    beta += step;
    if (score.lpNorm<Eigen::Infinity>() < tol) break;
  }
  return beta;
}

// ------------------------------------------------------------- enumeration

/// Exact model distribution over every network with edge values in 0..cap:
///   p(y) ∝ exp(theta' g(y)) * prod 1/y_ij!
/// with g computed by the dense oracles above. States are coded base (cap+1)
/// over the flat dyad order.
struct EnumeratedDistribution {
  int n = 0;
  vergm::Count cap = 0;
  std::vector<double> prob;  // one per state code

  std::size_t n_states() const { return prob.size(); }

  std::size_t encode(const DenseNet& net) const {
    std::size_t code = 0;
    std::size_t base = 1;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) {
          code += static_cast<std::size_t>(net.at(i, j)) * base;
          base *= static_cast<std::size_t>(cap) + 1;
        }
    return code;
  }

  DenseNet decode(std::size_t code) const {
    DenseNet net(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) {
          net.at(i, j) = static_cast<long long>(code % (static_cast<std::size_t>(cap) + 1));
          code /= static_cast<std::size_t>(cap) + 1;
        }
    return net;
  }
};

/// theta_fn(dense) must return theta' g(y) for the model under test.
inline EnumeratedDistribution enumerate_distribution(
    int n, vergm::Count cap, const std::function<double(const DenseNet&)>& log_weight_fn) {
  EnumeratedDistribution dist;
  dist.n = n;
  dist.cap = cap;
  const int dyads = n * (n - 1);
  std::size_t states = 1;
  for (int d = 0; d < dyads; ++d) states *= static_cast<std::size_t>(cap) + 1;
  std::vector<double> log_w(states);
  double max_w = -1e300;
  for (std::size_t code = 0; code < states; ++code) {
    const DenseNet net = dist.decode(code);
    double lw = log_weight_fn(net);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) lw -= std::lgamma(static_cast<double>(net.at(i, j)) + 1.0);
    log_w[code] = lw;
    max_w = std::max(max_w, lw);
  }
  double total = 0;
  for (double lw : log_w) total += std::exp(lw - max_w);
  dist.prob.resize(states);
  for (std::size_t code = 0; code < states; ++code)
    dist.prob[code] = std::exp(log_w[code] - max_w) / total;
  return dist;
}

// ----------------------------------------------------------------- helpers

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double tv = 0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return tv / 2.0;
}

struct MeanVar {
  double mean = 0, var = 0;
  std::size_t count = 0;
};

inline MeanVar mean_var(const std::vector<double>& xs) {
  MeanVar mv;
  mv.count = xs.size();
  for (double x : xs) mv.mean += x;
  mv.mean /= static_cast<double>(xs.size());
  for (double x : xs) mv.var += (x - mv.mean) * (x - mv.mean);
  mv.var /= static_cast<double>(xs.size() > 1 ? xs.size() - 1 : 1);
  return mv;
}

/// Welch two-sample z statistic for equal means.
inline double welch_z(const std::vector<double>& a, const std::vector<double>& b) {
  const MeanVar ma = mean_var(a), mb = mean_var(b);
  const double se =
      std::sqrt(ma.var / static_cast<double>(ma.count) + mb.var / static_cast<double>(mb.count));
  return se == 0 ? 0.0 : (ma.mean - mb.mean) / se;
}

/// Fresh scratch directory under the build tree's temp space.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "vergm_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Writes a node table in the CLI's CSV schema.
inline void write_nodes_csv(const std::filesystem::path& path, const vergm::NodeTable& nodes) {
  vergm::CsvWriter w;
  std::vector<std::string> header = {"node_id", "lat", "lon", "population", "state", "region"};
  for (const auto& name : nodes.numeric_names()) header.push_back(name);
  w.row(header);
  for (vergm::NodeIndex i = 0; i < nodes.size(); ++i) {
    std::vector<std::string> row = {
        nodes.id(i), vergm::format_double(nodes.lat(i)), vergm::format_double(nodes.lon(i)),
        vergm::format_double(nodes.population(i)), nodes.categorical("state")[static_cast<std::size_t>(i)],
        nodes.categorical("region")[static_cast<std::size_t>(i)]};
    for (const auto& name : nodes.numeric_names())
      row.push_back(vergm::format_double(nodes.numeric(name)[static_cast<std::size_t>(i)]));
    w.row(row);
  }
  vergm::atomic_write_file(path, w.str());
}

inline void write_edges_csv(const std::filesystem::path& path, const vergm::CountNetwork& net,
                            const vergm::NodeTable& nodes) {
  vergm::CsvWriter w;
  w.row({"origin", "dest", "count"});
  for (const auto& e : net.sorted_edges())
    w.row({nodes.id(e.origin), nodes.id(e.dest), vergm::format_int(e.count)});
  vergm::atomic_write_file(path, w.str());
}

}  // namespace testsupport
