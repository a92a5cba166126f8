#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vergm/network.hpp"
#include "vergm/parallel.hpp"
#include "vergm/terms.hpp"

namespace vergm {

/// Conditional distribution of one edge value given the rest of the network:
///   p(y_ij = k | y_-ij) ∝ exp(theta' * Δg(0→k)) / k!
/// stored on a finite support 0..k_max chosen so that the truncated tail
/// carries less than 1e-12 of the mass (unless an explicit cap is requested,
/// in which case the support is the conditional truncated to 0..cap).
struct ConditionalPMF {
  std::int64_t k_max = 0;
  double log_normalizer = 0.0;
  std::vector<double> log_weight;  // w_k = theta' Δg(0→k) - log k!, k = 0..k_max

  /// Combined coefficient on k from the edge-linear terms.
  double eta = 0.0;

  /// Δg(0→k) profiles of the structural, non-linear terms present in the
  /// model (nonzero / mutuality / waypoint), by model term index.
  struct Profile {
    int term = -1;
    std::vector<double> delta;
  };
  std::vector<Profile> nonlinear;

  double log_prob(std::int64_t k) const {
    return log_weight[static_cast<std::size_t>(k)] - log_normalizer;
  }
  double prob(std::int64_t k) const { return std::exp(log_prob(k)); }

  double mean() const {
    double m = 0;
    for (std::int64_t k = 1; k <= k_max; ++k) m += static_cast<double>(k) * prob(k);
    return m;
  }

  /// Inverse CDF at u in [0, 1); the last support point absorbs rounding.
  std::int64_t quantile(double u) const {
    double cum = 0;
    for (std::int64_t k = 0; k <= k_max; ++k) {
      cum += prob(k);
      if (u < cum) return k;
    }
    return k_max;
  }

  /// |sum_k p_k - 1|; normalization sanity check.
  double mass_error() const {
    double total = 0;
    for (std::int64_t k = 0; k <= k_max; ++k) total += prob(k);
    return std::abs(total - 1.0);
  }
};

/// Builds conditional pmfs for a fixed compiled model. Reuses the output
/// object's buffers, so hot loops keep one ConditionalPMF alive.
class ConditionalEvaluator {
 public:
  explicit ConditionalEvaluator(const CompiledModel& model) : model_(&model) {
    for (int t = 0; t < model.n_terms(); ++t) {
      switch (model.term(t).kind) {
        case TermKind::Nonzero: nonzero_ = t; break;
        case TermKind::MutualityMin: mutuality_ = t; break;
        case TermKind::WaypointFlow: waypoint_ = t; break;
        default: linear_.push_back(t); break;
      }
    }
  }

  const CompiledModel& model() const { return *model_; }
  const std::vector<int>& linear_terms() const { return linear_; }

  void build(const CountNetwork& net, std::span<const double> theta, NodeIndex i, NodeIndex j,
             ConditionalPMF& out, std::optional<Count> cap = std::nullopt) const {
    const Count k_cur = net.edge(i, j);

    double eta = 0.0;
    for (int t : linear_) eta += theta[static_cast<std::size_t>(t)] * model_->linear_form(t, i, j);
    if (!std::isfinite(eta))
      throw std::runtime_error("non-finite linear predictor on dyad (" +
                               model_->nodes().id(i) + ", " + model_->nodes().id(j) + ")");
    out.eta = eta;

    const double theta_nonzero = nonzero_ >= 0 ? theta[static_cast<std::size_t>(nonzero_)] : 0.0;
    const double theta_mutual = mutuality_ >= 0 ? theta[static_cast<std::size_t>(mutuality_)] : 0.0;
    const double theta_waypoint = waypoint_ >= 0 ? theta[static_cast<std::size_t>(waypoint_)] : 0.0;

    // Reverse edge and marginal totals with the focal edge removed; the
    // structural profiles below are Δg(0→k) on the conditioning network.
    const Count reverse = mutuality_ >= 0 ? net.edge(j, i) : 0;
    const Count in_i = net.in_total(i);
    const Count out_i0 = net.out_total(i) - k_cur;
    const Count in_j0 = net.in_total(j) - k_cur;
    const Count out_j = net.out_total(j);
    const Count wp_base_i = std::min(in_i, out_i0);
    const Count wp_base_j = std::min(in_j0, out_j);

    // Per-step increase of theta' Δg is bounded by B: one unit of k moves
    // nonzero by at most 1 (first step only), mutuality by at most 1 and
    // waypoint by at most 2, and only positive coefficients can push the
    // weights up. Once log(k+1) >= eta + B + log 2, weight ratios are below
    // 1/2, so the geometric tail beyond k is under its last mass.
    const double step_bound = std::max(theta_nonzero, 0.0) + std::max(theta_mutual, 0.0) +
                              2.0 * std::max(theta_waypoint, 0.0);

    std::int64_t k_max;
    bool truncated = false;
    if (cap) {
      k_max = *cap;
      truncated = true;
    } else {
      k_max = std::max<std::int64_t>(2 * net.row_col_max(i, j), 50);
    }

    for (;;) {
      out.k_max = k_max;
      auto& w = out.log_weight;
      w.resize(static_cast<std::size_t>(k_max) + 1);
      double log_factorial = 0.0;
      for (std::int64_t k = 0; k <= k_max; ++k) {
        if (k > 0) log_factorial += std::log(static_cast<double>(k));
        double wk = eta * static_cast<double>(k) - log_factorial;
        if (k > 0 && nonzero_ >= 0) wk += theta_nonzero;
        if (mutuality_ >= 0) wk += theta_mutual * static_cast<double>(std::min(k, reverse));
        if (waypoint_ >= 0) {
          const Count d = std::min(in_i, out_i0 + k) - wp_base_i +
                          std::min(in_j0 + k, out_j) - wp_base_j;
          wk += theta_waypoint * static_cast<double>(d);
        }
        w[static_cast<std::size_t>(k)] = wk;
      }

      double max_w = w[0];
      for (double v : w) max_w = std::max(max_w, v);
      if (!std::isfinite(max_w))
        throw std::runtime_error("non-finite conditional weight on dyad (" +
                                 model_->nodes().id(i) + ", " + model_->nodes().id(j) + ")");
      double sum = 0.0;
      for (double v : w) sum += std::exp(v - max_w);
      out.log_normalizer = max_w + std::log(sum);

      if (truncated) break;
      const bool ratio_ok =
          std::log(static_cast<double>(k_max) + 1.0) >= eta + step_bound + std::log(2.0);
      const bool tail_ok = w[static_cast<std::size_t>(k_max)] - out.log_normalizer <
                           std::log(1e-13);
      if (ratio_ok && tail_ok) break;
      if (k_max > (std::int64_t(1) << 24))
        throw std::runtime_error("conditional support exceeds 2^24 on dyad (" +
                                 model_->nodes().id(i) + ", " + model_->nodes().id(j) +
                                 "); linear predictor " + std::to_string(eta));
      k_max *= 2;
    }

    // Structural profiles, for moment computation downstream.
    out.nonlinear.clear();
    auto add_profile = [&](int term, auto&& delta_fn) {
      ConditionalPMF::Profile p;
      p.term = term;
      p.delta.resize(static_cast<std::size_t>(out.k_max) + 1);
      for (std::int64_t k = 0; k <= out.k_max; ++k)
        p.delta[static_cast<std::size_t>(k)] = delta_fn(k);
      out.nonlinear.push_back(std::move(p));
    };
    if (nonzero_ >= 0)
      add_profile(nonzero_, [](std::int64_t k) { return k > 0 ? 1.0 : 0.0; });
    if (mutuality_ >= 0)
      add_profile(mutuality_, [&](std::int64_t k) {
        return static_cast<double>(std::min<Count>(k, reverse));
      });
    if (waypoint_ >= 0)
      add_profile(waypoint_, [&](std::int64_t k) {
        return static_cast<double>(std::min(in_i, out_i0 + k) - wp_base_i +
                                   std::min(in_j0 + k, out_j) - wp_base_j);
      });
  }

 private:
  const CompiledModel* model_;
  std::vector<int> linear_;
  int nonzero_ = -1;
  int mutuality_ = -1;
  int waypoint_ = -1;
};

inline ConditionalPMF conditional_pmf(const CompiledModel& model, std::span<const double> theta,
                                      const CountNetwork& net, NodeIndex i, NodeIndex j,
                                      std::optional<Count> cap = std::nullopt) {
  ConditionalPMF pmf;
  ConditionalEvaluator(model).build(net, theta, i, j, pmf, cap);
  return pmf;
}

/// conditional_pmf evaluated with coefficients taken from the model spec.
inline ConditionalPMF conditional_pmf(const CompiledModel& model, const CountNetwork& net,
                                      NodeIndex i, NodeIndex j,
                                      std::optional<Count> cap = std::nullopt) {
  const std::vector<double> theta = model.spec().coefficients();
  return conditional_pmf(model, theta, net, i, j, cap);
}

struct PseudoLikelihoodValue {
  double value = 0.0;                 // -sum over ordered dyads of log p(y_ij | rest)
  Eigen::VectorXd gradient;           // d value / d theta
  Eigen::MatrixXd hessian;            // sum of per-dyad covariance of Δg; PSD
};

namespace detail {

struct DyadAccumulator {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  std::vector<double> form;  // scratch: linear form values per term

  explicit DyadAccumulator(int p) : grad(Eigen::VectorXd::Zero(p)), hess(Eigen::MatrixXd::Zero(p, p)),
                                    form(static_cast<std::size_t>(p), 0.0) {}

  void add_dyad(const ConditionalEvaluator& ev, const ConditionalPMF& pmf,
                const CountNetwork& net, NodeIndex i, NodeIndex j) {
    const Count k_obs = net.edge(i, j);
    value -= pmf.log_prob(k_obs);

    // First and second moments of Δg(0→k) under the conditional. Linear
    // terms factor through (E[k], E[k^2]); structural profiles are handled
    // individually (there are at most three).
    const std::size_t n_nl = pmf.nonlinear.size();
    double ek = 0.0, ek2 = 0.0;
    double e_nl[3] = {0, 0, 0};
    double ek_nl[3] = {0, 0, 0};
    double e_nlnl[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    for (std::int64_t k = 0; k <= pmf.k_max; ++k) {
      const double p = pmf.prob(k);
      const double kd = static_cast<double>(k);
      ek += p * kd;
      ek2 += p * kd * kd;
      for (std::size_t a = 0; a < n_nl; ++a) {
        const double da = pmf.nonlinear[a].delta[static_cast<std::size_t>(k)];
        e_nl[a] += p * da;
        ek_nl[a] += p * kd * da;
        for (std::size_t b = 0; b <= a; ++b)
          e_nlnl[a][b] += p * da * pmf.nonlinear[b].delta[static_cast<std::size_t>(k)];
      }
    }
    const double var_k = ek2 - ek * ek;
    const double k_obs_d = static_cast<double>(k_obs);

    const auto& linear = ev.linear_terms();
    for (int t : linear) form[static_cast<std::size_t>(t)] = ev.model().linear_form(t, i, j);

    for (int t : linear) {
      const double c = form[static_cast<std::size_t>(t)];
      grad(t) += c * (ek - k_obs_d);
      for (int s : linear) {
        if (s > t) break;  // linear_terms() is ascending; fill lower triangle
        hess(t, s) += c * form[static_cast<std::size_t>(s)] * var_k;
      }
    }
    for (std::size_t a = 0; a < n_nl; ++a) {
      const int ta = pmf.nonlinear[a].term;
      const double obs_a = pmf.nonlinear[a].delta[static_cast<std::size_t>(k_obs)];
      grad(ta) += e_nl[a] - obs_a;
      for (int s : linear) {
        const double cov = form[static_cast<std::size_t>(s)] * (ek_nl[a] - ek * e_nl[a]);
        if (ta >= s) hess(ta, s) += cov; else hess(s, ta) += cov;
      }
      for (std::size_t b = 0; b <= a; ++b) {
        const int tb = pmf.nonlinear[b].term;
        const double cov = e_nlnl[a][b] - e_nl[a] * e_nl[b];
        if (ta >= tb) hess(ta, tb) += cov; else hess(tb, ta) += cov;
      }
    }
  }
};

}  // namespace detail

/// Negative log pseudolikelihood with analytic gradient and Hessian, summed
/// over all ordered dyads. Dyads are processed in fixed-size blocks whose
/// layout is independent of the worker count, and per-block results are
/// reduced in block order, so results are bitwise identical for any number
/// of workers.
inline PseudoLikelihoodValue neg_log_pseudolikelihood(const CompiledModel& model,
                                                      std::span<const double> theta,
                                                      const CountNetwork& net, int workers = 0,
                                                      std::int64_t block_size = 2048) {
  const int p = model.n_terms();
  if (static_cast<int>(theta.size()) != p)
    throw std::invalid_argument("theta length does not match term count");
  const NodeIndex n = net.n_nodes();
  const BlockPartition partition{ordered_dyad_count(n), block_size};
  const std::int64_t n_blocks = partition.n_blocks();

  std::vector<detail::DyadAccumulator> slots(static_cast<std::size_t>(n_blocks),
                                             detail::DyadAccumulator(p));
  const ConditionalEvaluator evaluator(model);
  run_jobs(n_blocks, workers, [&](std::int64_t block) {
    auto& acc = slots[static_cast<std::size_t>(block)];
    ConditionalPMF pmf;
    for (std::int64_t flat = partition.begin(block); flat < partition.end(block); ++flat) {
      const auto [i, j] = dyad_from_flat(n, flat);
      evaluator.build(net, theta, i, j, pmf);
      acc.add_dyad(evaluator, pmf, net, i, j);
    }
  });

  PseudoLikelihoodValue result;
  result.gradient = Eigen::VectorXd::Zero(p);
  result.hessian = Eigen::MatrixXd::Zero(p, p);
  for (const auto& acc : slots) {
    result.value += acc.value;
    result.gradient += acc.grad;
    result.hessian += acc.hess;
  }
  for (int t = 0; t < p; ++t)
    for (int s = t + 1; s < p; ++s) result.hessian(t, s) = result.hessian(s, t);
  return result;
}

struct FitOptions {
  double tol = 1e-8;        // relative gradient tolerance
  int max_iter = 100;
  int workers = 0;          // 0: VERGM_WORKERS env or hardware concurrency
  std::int64_t block_size = 2048;
};

struct IterationRecord {
  int iteration;
  double neg_log_pl;
  double grad_norm;
  double step;
};

struct FitResult {
  std::vector<double> theta;
  std::vector<double> std_err;
  double neg_log_pl = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> trace;
};

namespace detail {

inline void check_hessian_rank(const Eigen::MatrixXd& hessian, const ModelSpec& spec) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(hessian);
  qr.setThreshold(1e-10);
  const int p = static_cast<int>(hessian.rows());
  const int rank = static_cast<int>(qr.rank());
  if (rank >= p) return;
  std::vector<std::string> offending;
  const auto perm = qr.colsPermutation().indices();
  for (int c = rank; c < p; ++c)
    offending.push_back(spec.terms[static_cast<std::size_t>(perm(c))].name());
  throw CollinearityError(
      "singular pseudolikelihood Hessian; collinear terms: " + join(offending, ", "),
      offending);
}

}  // namespace detail

/// Newton iterations with step-halving on the negative log pseudolikelihood.
/// Convergence: ||gradient||_inf <= tol * max(1, |value|). Standard errors
/// are sqrt(diag(H^-1)) at the optimum -- naive pseudolikelihood errors.
inline FitResult fit_mple(const CompiledModel& model, const CountNetwork& net,
                          const FitOptions& options = {}) {
  const int p = model.n_terms();
  const std::int64_t dyads = ordered_dyad_count(net.n_nodes());
  if (dyads <= 0) throw std::invalid_argument("network has no dyads to fit");

  // theta0: zero except the sum term, started at log(mean positive count)
  // to keep the first normalizers small.
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  for (int t = 0; t < p; ++t) {
    if (model.term(t).kind == TermKind::Sum) {
      const std::int64_t nz = net.nonzero_dyads();
      const double mean_positive =
          nz == 0 ? 0.0 : static_cast<double>(net.total_count()) / static_cast<double>(nz);
      theta(t) = std::log(mean_positive + 1e-9);
    }
  }

  FitResult fit;
  auto current = neg_log_pseudolikelihood(
      model, std::span<const double>(theta.data(), static_cast<std::size_t>(p)), net,
      options.workers, options.block_size);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    const double grad_norm = current.gradient.lpNorm<Eigen::Infinity>();
    fit.trace.push_back({iter, current.value, grad_norm, iter == 0 ? 0.0 : fit.trace.back().step});
    if (grad_norm <= options.tol * std::max(1.0, std::abs(current.value))) {
      fit.converged = true;
      fit.iterations = iter;
      break;
    }

    detail::check_hessian_rank(current.hessian, model.spec());
    const Eigen::VectorXd direction = current.hessian.ldlt().solve(current.gradient);

    double step = 1.0;
    bool accepted = false;
    PseudoLikelihoodValue trial;
    Eigen::VectorXd theta_trial;
    for (int halving = 0; halving < 40; ++halving) {
      theta_trial = theta - step * direction;
      trial = neg_log_pseudolikelihood(
          model, std::span<const double>(theta_trial.data(), static_cast<std::size_t>(p)), net,
          options.workers, options.block_size);
      if (std::isfinite(trial.value) && trial.value <= current.value) {
        accepted = true;
        break;
      }
      step /= 2.0;
    }
    if (!accepted) {
      fit.iterations = iter;
      break;  // converged stays false; caller sees the diagnostics
    }
    fit.trace.back().step = step;
    theta = theta_trial;
    current = std::move(trial);
    fit.iterations = iter + 1;
  }
  if (!fit.converged && fit.iterations == options.max_iter) {
    const double grad_norm = current.gradient.lpNorm<Eigen::Infinity>();
    if (grad_norm <= options.tol * std::max(1.0, std::abs(current.value))) fit.converged = true;
  }

  fit.neg_log_pl = current.value;
  fit.grad_norm = current.gradient.lpNorm<Eigen::Infinity>();

  detail::check_hessian_rank(current.hessian, model.spec());
  const Eigen::MatrixXd covariance =
      current.hessian.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.theta.assign(theta.data(), theta.data() + p);
  fit.std_err.resize(static_cast<std::size_t>(p));
  for (int t = 0; t < p; ++t)
    fit.std_err[static_cast<std::size_t>(t)] = std::sqrt(std::max(0.0, covariance(t, t)));
  return fit;
}

/// Two-tailed normal p-value from a naive pseudolikelihood z-score. These are
/// anti-conservative under dependence; reported for parity with standard
/// valued-ERGM output, flagged as naive in the artifacts.
inline double two_tailed_p(double estimate, double std_err) {
  if (std_err <= 0) return std::numeric_limits<double>::quiet_NaN();
  const double z = std::abs(estimate / std_err);
  return std::erfc(z / std::sqrt(2.0));
}

}  // namespace vergm
