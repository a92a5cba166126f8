#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vergm/likelihood.hpp"
#include "vergm/network.hpp"
#include "vergm/rng.hpp"
#include "vergm/terms.hpp"

namespace vergm {

struct SamplerConfig {
  std::int64_t burn_in_sweeps = 200;
  std::int64_t thin_sweeps = 20;
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;

  enum class Init { Observed, Empty, IndependenceDraw };
  Init init = Init::Observed;

  /// Optional hard truncation of each conditional's support; used when the
  /// chain must live on a finite state space (exact-enumeration validation).
  std::optional<Count> max_count;

  void validate() const {
    if (burn_in_sweeps < 0 || thin_sweeps <= 0 || n_samples < 0)
      throw std::invalid_argument("sampler config: counts must be positive");
  }
};

inline SamplerConfig::Init sampler_init_from_name(const std::string& name) {
  if (name == "observed") return SamplerConfig::Init::Observed;
  if (name == "empty") return SamplerConfig::Init::Empty;
  if (name == "independence") return SamplerConfig::Init::IndependenceDraw;
  throw std::invalid_argument("unknown sampler init '" + name + "'");
}

namespace detail {

/// One Gibbs sweep with caller-provided workspaces.
inline void gibbs_sweep_impl(const ConditionalEvaluator& evaluator, std::span<const double> theta,
                             CountNetwork& net, Rng& rng, std::vector<std::int64_t>& order,
                             ConditionalPMF& pmf, std::optional<Count> cap) {
  const NodeIndex n = net.n_nodes();
  const std::int64_t dyads = ordered_dyad_count(n);
  if (static_cast<std::int64_t>(order.size()) != dyads) {
    order.resize(static_cast<std::size_t>(dyads));
    std::iota(order.begin(), order.end(), std::int64_t(0));
  }
  shuffle_in_place(order, rng);
  for (std::int64_t flat : order) {
    const auto [i, j] = dyad_from_flat(n, flat);
    evaluator.build(net, theta, i, j, pmf, cap);
    const Count k = pmf.quantile(uniform01(rng));
    net.set_edge(i, j, k);
  }
}

}  // namespace detail

/// Visits every ordered dyad once in a seeded random permutation and
/// resamples it exactly from its conditional (inverse-CDF on the truncated
/// support); an exact Gibbs sweep.
inline void gibbs_sweep(const CompiledModel& model, std::span<const double> theta,
                        CountNetwork& net, Rng& rng,
                        std::optional<Count> cap = std::nullopt) {
  const ConditionalEvaluator evaluator(model);
  std::vector<std::int64_t> order;
  ConditionalPMF pmf;
  detail::gibbs_sweep_impl(evaluator, theta, net, rng, order, pmf, cap);
}

/// Independent draw of every dyad from its conditional against an all-zero
/// network (for edge-local terms this is the exact model; dependence terms
/// contribute nothing at zero). Used as a sampler init mode.
inline CountNetwork independence_draw(const CompiledModel& model, std::span<const double> theta,
                                      NodeIndex n, Rng& rng,
                                      std::optional<Count> cap = std::nullopt) {
  CountNetwork zero(n);
  CountNetwork out(n);
  const ConditionalEvaluator evaluator(model);
  ConditionalPMF pmf;
  const std::int64_t dyads = ordered_dyad_count(n);
  for (std::int64_t flat = 0; flat < dyads; ++flat) {
    const auto [i, j] = dyad_from_flat(n, flat);
    evaluator.build(zero, theta, i, j, pmf, cap);
    const Count k = pmf.quantile(uniform01(rng));
    if (k > 0) out.set_edge(i, j, k);
  }
  return out;
}

struct SampleRun {
  std::vector<CountNetwork> networks;
  std::vector<std::string> stat_names;      // one per model term
  std::vector<std::vector<double>> trace;   // per retained sample: term global stats
  std::vector<std::int64_t> sweep_index;    // sweep at which each sample was taken
};

/// Runs the chain: burn-in sweeps discarded, then one network captured every
/// thin_sweeps until n_samples are retained. With n_samples = 0 the burn-in
/// still runs (the trace machinery stays exercised for diagnostics).
inline SampleRun sample_networks(const CompiledModel& model, std::span<const double> theta,
                                 const CountNetwork& initial, const SamplerConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const NodeIndex n = initial.n_nodes();

  CountNetwork net(n);
  switch (config.init) {
    case SamplerConfig::Init::Observed: net = initial; break;
    case SamplerConfig::Init::Empty: break;
    case SamplerConfig::Init::IndependenceDraw:
      net = independence_draw(model, theta, n, rng, config.max_count);
      break;
  }

  const ConditionalEvaluator evaluator(model);
  std::vector<std::int64_t> order;
  ConditionalPMF pmf;

  SampleRun run;
  run.stat_names = model.spec().term_names();

  std::int64_t sweep = 0;
  for (std::int64_t b = 0; b < config.burn_in_sweeps; ++b, ++sweep)
    detail::gibbs_sweep_impl(evaluator, theta, net, rng, order, pmf, config.max_count);

  for (std::int64_t s = 0; s < config.n_samples; ++s) {
    for (std::int64_t t = 0; t < config.thin_sweeps; ++t, ++sweep)
      detail::gibbs_sweep_impl(evaluator, theta, net, rng, order, pmf, config.max_count);
    run.networks.push_back(net);
    run.trace.push_back(model.global_stats(net));
    run.sweep_index.push_back(sweep);
  }
  return run;
}

inline SampleRun sample_networks(const CompiledModel& model, const CountNetwork& initial,
                                 const SamplerConfig& config) {
  const std::vector<double> theta = model.spec().coefficients();
  return sample_networks(model, theta, initial, config);
}

}  // namespace vergm
