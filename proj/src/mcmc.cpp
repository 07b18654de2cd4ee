#include "idealobs/mcmc.hpp"

#include <algorithm>
#include <numbers>

namespace idealobs {

void ChainConfig::validate() const {
  if (n_iter == 0 || burn_in >= n_iter) throw Error(ErrorKind::InvalidArgument, "chain needs burn_in < n_iter");
  if (thinning == 0) throw Error(ErrorKind::InvalidArgument, "thinning must be >= 1");
  if (kept_count() == 0) throw Error(ErrorKind::InvalidArgument, "chain keeps no samples (thinning too large)");
  if (!(rwmh_step > 0.0)) throw Error(ErrorKind::InvalidArgument, "rwmh_step must be positive");
  if (mala_step && !(*mala_step > 0.0)) throw Error(ErrorKind::InvalidArgument, "mala_step must be positive");
  if (n_batches == 0) throw Error(ErrorKind::InvalidArgument, "n_batches must be >= 1");
  if (!(latent_refresh >= 0.0 && latent_refresh <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "latent_refresh must be in [0, 1]");
  }
  if (latent_refresh_block == 0) throw Error(ErrorKind::InvalidArgument, "latent_refresh_block must be >= 1");
}

double accept_probability(double log_target_cand, double log_target_cur, double log_q_rev, double log_q_fwd) {
  if (!std::isfinite(log_target_cur)) {
    throw Error(ErrorKind::ChainStart, "current state has non-finite log target");
  }
  if (log_target_cand == -std::numeric_limits<double>::infinity() ||
      log_q_rev == -std::numeric_limits<double>::infinity()) {
    return 0.0;
  }
  const double log_ratio = (log_target_cand + log_q_rev) - (log_target_cur + log_q_fwd);
  if (std::isnan(log_ratio)) return 0.0;
  if (log_ratio >= 0.0) return 1.0;
  return std::exp(log_ratio);
}

void LogMeanAccumulator::add(double log_value) {
  ++count_;
  if (log_value == -std::numeric_limits<double>::infinity()) return;
  if (log_value > max_) {
    scaled_sum_ = scaled_sum_ * std::exp(max_ - log_value) + 1.0;
    max_ = log_value;
  } else {
    scaled_sum_ += std::exp(log_value - max_);
  }
}

double LogMeanAccumulator::log_sum() const {
  if (scaled_sum_ == 0.0) return -std::numeric_limits<double>::infinity();
  return max_ + std::log(scaled_sum_);
}

double LogMeanAccumulator::log_mean() const {
  if (count_ == 0) return std::numeric_limits<double>::quiet_NaN();
  return log_sum() - std::log(static_cast<double>(count_));
}

BatchMeans::BatchMeans(std::size_t expected_count, std::size_t n_batches)
    : expected_(std::max<std::size_t>(expected_count, 1)),
      batches_(std::min(std::max<std::size_t>(n_batches, 1), expected_)) {}

void BatchMeans::add(double log_value) {
  const std::size_t k = total_.count();
  std::size_t b = k < expected_ ? k * batches_.size() / expected_ : batches_.size() - 1;
  batches_[b].add(log_value);
  total_.add(log_value);
}

double BatchMeans::std_err() const {
  std::vector<double> ratios;
  const double overall = log_mean();
  if (!std::isfinite(overall)) return std::numeric_limits<double>::quiet_NaN();
  for (const auto& b : batches_) {
    if (b.count() > 0) ratios.push_back(std::exp(b.log_mean() - overall));
  }
  if (ratios.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double r : ratios) mean += r;
  mean /= static_cast<double>(ratios.size());
  double ss = 0.0;
  for (double r : ratios) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / static_cast<double>(ratios.size() - 1));
  return sd / std::sqrt(static_cast<double>(ratios.size()));
}

ChainTraceWriter::ChainTraceWriter(std::ostream& out) : out_(out) {
  out_ << "iteration,accepted,log_target,log_integrand\n";
  out_.precision(17);
}

void ChainTraceWriter::write(std::size_t iteration, bool accepted, double log_target,
                             std::optional<double> log_integrand) {
  out_ << iteration << ',' << (accepted ? 1 : 0) << ',' << log_target << ',';
  if (log_integrand) out_ << *log_integrand;
  out_ << '\n';
}

namespace detail {

void rethrow_at_iteration(std::size_t iteration, const char* stage) {
  const std::string prefix = "iteration " + std::to_string(iteration) + " (" + stage + "): ";
  try {
    throw;
  } catch (const Error& e) {
    throw Error(e.kind(), prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Evaluation, prefix + e.what());
  }
}

}  // namespace detail

double isotropic_gaussian_log_density(const Vector& x, const Vector& mean, double step) {
  const double d = static_cast<double>(x.size());
  return -0.5 * (x - mean).squaredNorm() / (step * step) - d * std::log(step * std::sqrt(2.0 * std::numbers::pi));
}

RwmhKernel::RwmhKernel(double step, std::size_t dim, std::size_t block)
    : step_(step), dim_(dim), block_(block == 0 || block > dim ? dim : block) {
  if (!(step > 0.0)) throw Error(ErrorKind::InvalidArgument, "rwmh step must be positive");
}

Proposal<Vector> RwmhKernel::operator()(const Vector& state, Rng& rng) const {
  if (static_cast<std::size_t>(state.size()) != dim_) {
    throw Error(ErrorKind::DimensionMismatch, "rwmh kernel dimension does not match state");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Proposal<Vector> p;
  p.candidate = state;
  std::size_t lo = 0;
  if (block_ < dim_) {
    std::uniform_int_distribution<std::size_t> pick(0, (dim_ + block_ - 1) / block_ - 1);
    lo = pick(rng) * block_;
  }
  const std::size_t hi = std::min(lo + block_, dim_);
  for (std::size_t k = lo; k < hi; ++k) p.candidate[static_cast<Eigen::Index>(k)] += step_ * normal(rng);
  p.log_q_fwd = block_ < dim_ ? 0.0 : isotropic_gaussian_log_density(p.candidate, state, step_);
  p.log_q_rev = p.log_q_fwd;
  return p;
}

MalaKernel::MalaKernel(double step, Gradient grad) : step_(step), grad_(std::move(grad)) {
  if (!(step > 0.0)) throw Error(ErrorKind::InvalidArgument, "mala step must be positive");
  if (!grad_) throw Error(ErrorKind::InvalidArgument, "mala kernel needs a gradient");
}

Vector MalaKernel::drift(const Vector& x) const {
  Vector g = grad_(x);
  if (g.size() != x.size()) throw Error(ErrorKind::DimensionMismatch, "gradient dimension does not match state");
  if (!g.allFinite()) throw Error(ErrorKind::NonFinite, "mala: non-finite gradient");
  return x + 0.5 * step_ * step_ * g;
}

Proposal<Vector> MalaKernel::operator()(const Vector& state, Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vector forward_mean = drift(state);
  Proposal<Vector> p;
  p.candidate = forward_mean;
  for (Eigen::Index k = 0; k < state.size(); ++k) p.candidate[k] += step_ * normal(rng);
  p.log_q_fwd = isotropic_gaussian_log_density(p.candidate, forward_mean, step_);
  p.log_q_rev = isotropic_gaussian_log_density(state, drift(p.candidate), step_);
  return p;
}

RwmhKernel rwmh_kernel(double step, std::size_t dim, std::size_t block) { return RwmhKernel(step, dim, block); }
MalaKernel mala_kernel(double step, MalaKernel::Gradient grad) { return MalaKernel(step, std::move(grad)); }

}  // namespace idealobs
