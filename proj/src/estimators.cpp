#include "idealobs/estimators.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "idealobs/errors.hpp"

namespace idealobs {

std::string to_string(TaskMode mode) { return mode == TaskMode::Ske ? "ske" : "sks"; }

TaskMode task_mode_from_string(std::string_view name) {
  if (name == "ske" || name == "SKE") return TaskMode::Ske;
  if (name == "sks" || name == "SKS") return TaskMode::Sks;
  throw Error(ErrorKind::InvalidArgument, "unknown task mode '" + std::string(name) + "'");
}

void DetectionTask::validate() const {
  if (!grid.valid()) throw Error(ErrorKind::InvalidArgument, "task grid must be nonempty");
  psf.validate();
  noise.validate();
  if (mode == TaskMode::Ske) {
    ske.validate();
  } else {
    sks.validate(grid);
  }
}

double log_lambda_bke(std::span<const double> g, std::span<const double> b, std::span<const double> s,
                      const GaussianNoise& noise) {
  double cross = 0.0;
  double energy = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    cross += s[m] * (g[m] - b[m]);
    energy += s[m] * s[m];
  }
  return (cross - 0.5 * energy) / (noise.sigma * noise.sigma);
}

double log_lambda_bke(const Image& g, const Image& b, const Image& s, const GaussianNoise& noise) {
  require_same_grid(g.grid(), b.grid(), "log_lambda_bke");
  require_same_grid(g.grid(), s.grid(), "log_lambda_bke");
  noise.validate();
  return log_lambda_bke(g.pixels(), b.pixels(), s.pixels(), noise);
}

LrIntegrand::LrIntegrand(const Image& g, const DetectionTask& task)
    : g_(g), task_(task), signal_(task.grid.size(), 0.0) {
  task_.validate();
  require_same_grid(g.grid(), task.grid, "likelihood-ratio integrand");
  if (task_.mode == TaskMode::Ske) {
    const Image s = measured_signal_ske(task_.ske, task_.psf, task_.grid);
    std::copy(s.pixels().begin(), s.pixels().end(), signal_.begin());
    ske_sg_ = dot(signal_, g.pixels());
    ske_ss_ = dot(signal_, signal_);
  }
}

double LrIntegrand::operator()(std::span<const double> background, Rng& rng) {
  const double var = task_.noise.sigma * task_.noise.sigma;
  if (task_.mode == TaskMode::Ske) {
    return (ske_sg_ - dot(signal_, background) - 0.5 * ske_ss_) / var;
  }
  const SignalParams alpha = sample_signal_params(task_.sks, rng);
  fill_measured_signal_sks(signal_, alpha, task_.sks.amplitude, task_.psf, task_.grid);
  return log_lambda_bke(g_.pixels(), background, signal_, task_.noise);
}

ChainResult estimate_log_lr_conventional(const Image& g, const DetectionTask& task, const LumpyModel& lumpy,
                                         const ChainConfig& cfg, Rng& rng, const EstimatorOptions& options) {
  task.validate();
  lumpy.prior.validate();
  lumpy.proposal.validate();
  require_same_grid(g.grid(), task.grid, "conventional estimator");

  LumpyParams init = options.lumpy_init ? *options.lumpy_init : sample_lumpy(lumpy.prior, task.grid, rng);
  LumpyBackground start(std::move(init), lumpy.prior, task.psf, task.grid);

  const auto target = [&](const LumpyBackground& state) {
    const double lp = log_prior(state.params(), lumpy.prior, task.grid);
    if (lp == -std::numeric_limits<double>::infinity()) return lp;
    return lp + log_likelihood(g.pixels(), state.image().pixels(), task.noise);
  };
  const auto proposal = [&](const LumpyBackground& state, Rng& r) {
    LumpyProposal p = propose_lumpy(state.params(), lumpy.proposal, task.grid, r);
    return Proposal<LumpyBackground>{state.with(p), p.log_q_fwd, p.log_q_rev};
  };
  LrIntegrand lr(g, task);
  const auto integrand = [&](const LumpyBackground& state, Rng& r) { return lr(state.image().pixels(), r); };

  if (options.trace) {
    return run_chain(std::move(start), target, proposal, integrand, cfg, rng, ChainTraceWriter(*options.trace));
  }
  return run_chain(std::move(start), target, proposal, integrand, cfg, rng);
}

namespace {

struct LatentState {
  Vector z;
  std::vector<double> image;
};

}  // namespace

ChainResult estimate_log_lr_gan(const Image& g, const DetectionTask& task, const Generator& gen,
                                const ChainConfig& cfg, Rng& rng, const EstimatorOptions& options) {
  task.validate();
  require_same_grid(g.grid(), task.grid, "latent estimator");
  require_same_grid(gen.grid(), task.grid, "latent estimator generator output");
  const LatentPrior& prior = gen.latent();
  const Eigen::Index dim = static_cast<Eigen::Index>(prior.dim);

  LatentState start;
  start.z = options.latent_init ? *options.latent_init : Vector::Zero(dim);
  if (start.z.size() != dim) throw Error(ErrorKind::DimensionMismatch, "latent init has the wrong dimension");
  start.image.assign(task.grid.size(), 0.0);
  gen.forward_into(start.z, start.image);

  const double var = task.noise.sigma * task.noise.sigma;
  const auto materialize = [&](Vector z) {
    LatentState s{std::move(z), std::vector<double>(task.grid.size())};
    gen.forward_into(s.z, s.image);
    for (double v : s.image) {
      if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "generator produced non-finite pixels");
    }
    return s;
  };
  const auto target = [&](const LatentState& s) {
    const double lp = prior.log_density(s.z);
    if (lp == -std::numeric_limits<double>::infinity()) return lp;
    return lp + log_likelihood(g.pixels(), s.image, task.noise);
  };
  LrIntegrand lr(g, task);
  const auto integrand = [&](const LatentState& s, Rng& r) { return lr(s.image, r); };

  const std::size_t block = std::min<std::size_t>(cfg.latent_refresh_block, prior.dim);
  const std::size_t n_blocks = (prior.dim + block - 1) / block;
  // Independence move on one block; the untouched coordinates cancel in the density ratio.
  const auto refresh = [&](const Vector& z, Rng& r) {
    std::uniform_int_distribution<std::size_t> pick(0, n_blocks - 1);
    const std::size_t lo = pick(r) * block;
    const std::size_t hi = std::min(lo + block, prior.dim);
    const Vector draw = prior.sample(r);
    Proposal<Vector> p{z, prior.log_density(z), prior.log_density(z)};
    for (std::size_t i = lo; i < hi; ++i) p.candidate[static_cast<Eigen::Index>(i)] = draw[static_cast<Eigen::Index>(i)];
    p.log_q_fwd = prior.log_density(p.candidate);
    return p;
  };

  auto run = [&](auto&& kernel) {
    const auto proposal = [&](const LatentState& s, Rng& r) {
      const bool redraw = cfg.latent_refresh > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(r) < cfg.latent_refresh;
      Proposal<Vector> p = redraw ? refresh(s.z, r) : kernel(s.z, r);
      return Proposal<LatentState>{materialize(std::move(p.candidate)), p.log_q_fwd, p.log_q_rev};
    };
    if (options.trace) {
      return run_chain(std::move(start), target, proposal, integrand, cfg, rng, ChainTraceWriter(*options.trace));
    }
    return run_chain(std::move(start), target, proposal, integrand, cfg, rng);
  };

  if (cfg.mala_step) {
    if (!gen.has_vjp()) throw Error(ErrorKind::InvalidArgument, "MALA requires a generator with gradients");
    const auto grad = [&](const Vector& z) -> Vector {
      std::vector<double> image(task.grid.size());
      gen.forward_into(z, image);
      for (std::size_t m = 0; m < image.size(); ++m) image[m] = (g[m] - image[m]) / var;
      return gen.vjp_unchecked(z, image) + prior.grad_log_density(z);
    };
    return run(mala_kernel(*cfg.mala_step, grad));
  }
  return run(rwmh_kernel(cfg.rwmh_step, prior.dim, cfg.rwmh_block));
}

}  // namespace idealobs
