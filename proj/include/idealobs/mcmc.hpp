#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "idealobs/errors.hpp"
#include "idealobs/random.hpp"

namespace idealobs {

using Vector = Eigen::VectorXd;

struct ChainConfig {
  std::size_t n_iter = 100000;
  std::size_t burn_in = 1000;
  std::size_t thinning = 1;
  /// Standard deviation per latent coordinate of the RWMH proposal (K = step^2 I).
  double rwmh_step = 0.1;
  /// When set, latent chains use MALA with this step instead of RWMH.
  std::optional<double> mala_step;
  /// Batches used for the batch-means standard error.
  std::size_t n_batches = 100;
  /// Latent chains only: probability of redrawing one aligned block of coordinates from p_z
  /// instead of taking a local step.
  double latent_refresh = 0.0;
  /// Latent RWMH moves one aligned block of this many coordinates per step; 0 moves all.
  std::size_t rwmh_block = 0;
  std::size_t latent_refresh_block = 2;

  void validate() const;
  std::size_t kept_count() const { return (n_iter - burn_in) / thinning; }
};

struct ChainResult {
  /// log of the post-burn-in mean of exp(integrand).
  double log_lr_estimate = 0.0;
  /// Batch-means standard error of log_lr_estimate (delta method).
  double std_err = 0.0;
  double acceptance_rate = 0.0;
  std::size_t n_proposed = 0;
  std::size_t n_accepted = 0;
  std::size_t n_kept = 0;
};

template <typename State>
struct Proposal {
  State candidate;
  double log_q_fwd = 0.0;
  double log_q_rev = 0.0;
};

/// min[1, exp((log_target_cand + log_q_rev) - (log_target_cur + log_q_fwd))].
/// Throws Error(ChainStart) when the current state is outside the support.
double accept_probability(double log_target_cand, double log_target_cur, double log_q_rev, double log_q_fwd);

/// Streaming log-sum-exp. Never exponentiates an unshifted value.
class LogMeanAccumulator {
 public:
  void add(double log_value);
  double log_sum() const;
  double log_mean() const;
  std::size_t count() const { return count_; }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double scaled_sum_ = 0.0;
  std::size_t count_ = 0;
};

/// Log-mean of exp(values) plus a batch-means standard error of that log-mean.
class BatchMeans {
 public:
  BatchMeans(std::size_t expected_count, std::size_t n_batches);

  void add(double log_value);
  double log_mean() const { return total_.log_mean(); }
  std::size_t count() const { return total_.count(); }
  double std_err() const;

 private:
  std::size_t expected_;
  std::vector<LogMeanAccumulator> batches_;
  LogMeanAccumulator total_;
};

template <typename State>
struct ChainStep {
  std::size_t iteration;
  bool accepted;
  double log_target;
  std::optional<double> log_integrand;
  const State& state;
};

struct NoObserver {
  template <typename State>
  void operator()(const ChainStep<State>&) const {}
};

/// Chain-trace dump: CSV rows (iteration, accepted, log_target, log_integrand).
class ChainTraceWriter {
 public:
  explicit ChainTraceWriter(std::ostream& out);

  template <typename State>
  void operator()(const ChainStep<State>& step) {
    write(step.iteration, step.accepted, step.log_target, step.log_integrand);
  }

 private:
  void write(std::size_t iteration, bool accepted, double log_target, std::optional<double> log_integrand);
  std::ostream& out_;
};

namespace detail {
[[noreturn]] void rethrow_at_iteration(std::size_t iteration, const char* stage);
}

/// Metropolis-Hastings chain.
///
/// `target(state)` returns the log unnormalized density (finite or -infinity).
/// `proposal(state, rng)` returns a Proposal<State> with its forward/reverse log densities.
/// `integrand(state, rng)` is evaluated on the current state after every kept iteration
/// (iterations burn_in + thinning, burn_in + 2 thinning, ...) and averaged in log space.
/// `observer` sees every iteration.
template <typename State, typename Target, typename Kernel, typename Integrand, typename Observer = NoObserver>
ChainResult run_chain(State init, Target&& target, Kernel&& proposal, Integrand&& integrand, const ChainConfig& cfg,
                      Rng& rng, Observer&& observer = {}) {
  cfg.validate();
  State current = std::move(init);
  double current_log_target = 0.0;
  try {
    current_log_target = target(current);
  } catch (...) {
    detail::rethrow_at_iteration(0, "target");
  }
  if (!std::isfinite(current_log_target)) {
    throw Error(ErrorKind::ChainStart, "initial state has non-finite log target");
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  BatchMeans accumulator(cfg.kept_count(), cfg.n_batches);
  ChainResult result;

  for (std::size_t it = 1; it <= cfg.n_iter; ++it) {
    bool accepted = false;
    {
      std::optional<Proposal<State>> prop;
      try {
        prop.emplace(proposal(current, rng));
      } catch (...) {
        detail::rethrow_at_iteration(it, "proposal");
      }
      double cand_log_target = 0.0;
      try {
        cand_log_target = target(prop->candidate);
      } catch (...) {
        detail::rethrow_at_iteration(it, "target");
      }
      if (std::isnan(cand_log_target)) {
        throw Error(ErrorKind::Evaluation, "iteration " + std::to_string(it) + ": target returned NaN");
      }
      const double a = accept_probability(cand_log_target, current_log_target, prop->log_q_rev, prop->log_q_fwd);
      accepted = a >= 1.0 || (a > 0.0 && unit(rng) < a);
      ++result.n_proposed;
      if (accepted) {
        ++result.n_accepted;
        current = std::move(prop->candidate);
        current_log_target = cand_log_target;
      }
    }

    std::optional<double> ell;
    if (it > cfg.burn_in && (it - cfg.burn_in) % cfg.thinning == 0) {
      try {
        ell = integrand(current, rng);
      } catch (...) {
        detail::rethrow_at_iteration(it, "integrand");
      }
      if (std::isnan(*ell)) {
        throw Error(ErrorKind::Evaluation, "iteration " + std::to_string(it) + ": integrand returned NaN");
      }
      accumulator.add(*ell);
    }
    observer(ChainStep<State>{it, accepted, current_log_target, ell, current});
  }

  result.n_kept = accumulator.count();
  result.log_lr_estimate = accumulator.log_mean();
  result.std_err = accumulator.std_err();
  result.acceptance_rate =
      result.n_proposed ? static_cast<double>(result.n_accepted) / static_cast<double>(result.n_proposed) : 0.0;
  return result;
}

/// log N(x; mean, step^2 I) including the normalizer.
double isotropic_gaussian_log_density(const Vector& x, const Vector& mean, double step);

/// Random-walk proposal: candidate = state + step * N(0, I). Symmetric. With block > 0 only one
/// uniformly chosen aligned block of that many coordinates moves.
class RwmhKernel {
 public:
  RwmhKernel(double step, std::size_t dim, std::size_t block = 0);

  Proposal<Vector> operator()(const Vector& state, Rng& rng) const;
  double step() const { return step_; }

 private:
  double step_;
  std::size_t dim_;
  std::size_t block_;
};

/// Langevin proposal: candidate ~ N(state + (step^2 / 2) grad(state), step^2 I), with the
/// exact asymmetric forward/reverse densities.
class MalaKernel {
 public:
  using Gradient = std::function<Vector(const Vector&)>;

  MalaKernel(double step, Gradient grad);

  Proposal<Vector> operator()(const Vector& state, Rng& rng) const;
  double step() const { return step_; }

 private:
  Vector drift(const Vector& x) const;

  double step_;
  Gradient grad_;
};

RwmhKernel rwmh_kernel(double step, std::size_t dim, std::size_t block = 0);
MalaKernel mala_kernel(double step, MalaKernel::Gradient grad);

}  // namespace idealobs
