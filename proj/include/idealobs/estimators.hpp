#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "idealobs/generator.hpp"
#include "idealobs/image.hpp"
#include "idealobs/imaging.hpp"
#include "idealobs/lumpy.hpp"
#include "idealobs/mcmc.hpp"
#include "idealobs/signal.hpp"

namespace idealobs {

enum class TaskMode { Ske, Sks };

std::string to_string(TaskMode mode);
TaskMode task_mode_from_string(std::string_view name);

struct DetectionTask {
  TaskMode mode = TaskMode::Ske;
  SkeSignalCfg ske;
  SksPrior sks;
  GaussianNoise noise;
  PsfParams psf;
  Grid grid;

  void validate() const;
};

/// ln[p(g | b, s, H1) / p(g | b, H0)] for Gaussian noise: [s^T (g - b) - |s|^2 / 2] / sigma^2.
double log_lambda_bke(const Image& g, const Image& b, const Image& s, const GaussianNoise& noise);
double log_lambda_bke(std::span<const double> g, std::span<const double> b, std::span<const double> s,
                      const GaussianNoise& noise);

/// Per-sample log integrand for one measured image: log Lambda_BKE for SKE tasks, and
/// log Lambda_BSKE with a fresh alpha ~ p(alpha) per call for SKS tasks.
class LrIntegrand {
 public:
  LrIntegrand(const Image& g, const DetectionTask& task);

  double operator()(std::span<const double> background, Rng& rng);

 private:
  const Image& g_;
  DetectionTask task_;
  std::vector<double> signal_;
  double ske_sg_ = 0.0;
  double ske_ss_ = 0.0;
};

struct LumpyModel {
  LumpyPrior prior;
  LumpyProposalCfg proposal;
};

struct EstimatorOptions {
  /// Conventional chains start from a prior draw unless this is set.
  std::optional<LumpyParams> lumpy_init;
  /// Latent chains start from z = 0 unless this is set.
  std::optional<Vector> latent_init;
  /// Optional per-iteration chain trace (CSV).
  std::ostream* trace = nullptr;
};

/// Chain over lumpy parameters theta with target log p(g | b(theta), H0) + log p(theta).
ChainResult estimate_log_lr_conventional(const Image& g, const DetectionTask& task, const LumpyModel& lumpy,
                                         const ChainConfig& cfg, Rng& rng, const EstimatorOptions& options = {});

/// Chain over latent vectors z with target log p(g | G(z), H0) + log p_z(z). RWMH unless
/// cfg.mala_step is set (which requires generator gradients).
ChainResult estimate_log_lr_gan(const Image& g, const DetectionTask& task, const Generator& gen,
                                const ChainConfig& cfg, Rng& rng, const EstimatorOptions& options = {});

}  // namespace idealobs
