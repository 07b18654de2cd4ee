#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "idealobs/image.hpp"
#include "idealobs/imaging.hpp"
#include "idealobs/lumpy.hpp"
#include "idealobs/mcmc.hpp"
#include "idealobs/random.hpp"

namespace idealobs {

enum class LatentKind { StandardNormal, Uniform };

std::string to_string(LatentKind kind);
LatentKind latent_kind_from_string(std::string_view name);

/// Latent law p_z: N(0, I_k) or uniform on (-1, 1)^k.
struct LatentPrior {
  LatentKind kind = LatentKind::StandardNormal;
  std::size_t dim = 1;

  void validate() const;
  double log_density(const Vector& z) const;
  /// Gradient of log p_z; zero for the uniform law (inside and outside its support).
  Vector grad_log_density(const Vector& z) const;
  Vector sample(Rng& rng) const;
};

/// Deterministic map G(z) from latent vectors to images, optionally with vector-Jacobian products.
class Generator {
 public:
  virtual ~Generator() = default;

  virtual const LatentPrior& latent() const = 0;
  virtual const Grid& grid() const = 0;
  virtual std::string provenance() const = 0;
  virtual bool has_vjp() const { return false; }

  /// Writes G(z) into `out` (grid().size() values). No argument checks.
  virtual void forward_into(const Vector& z, std::span<double> out) const = 0;
  /// J(z)^T u for a cotangent image u. No argument checks.
  virtual Vector vjp_unchecked(const Vector& z, std::span<const double> cotangent) const;

  /// Checked forward pass; throws on dimension mismatch or non-finite output.
  Image forward(const Vector& z) const;
  Vector vjp(const Vector& z, const Image& cotangent) const;

 protected:
  void check_latent(const Vector& z) const;
};

Image generator_forward(const Generator& gen, const Vector& z);
Vector generator_vjp(const Generator& gen, const Vector& z, const Image& cotangent);

/// Standard normal CDF, 0.5 erfc(-x / sqrt 2).
double standard_normal_cdf(double x);
double standard_normal_pdf(double x);

enum class Activation { Identity, Relu, LeakyRelu, Tanh, Sigmoid };

std::string to_string(Activation act);
/// Throws Error(UnsupportedActivation) for unknown names.
Activation activation_from_string(std::string_view name);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::Identity;
};

/// Fully connected generator: a_{l+1} = act_l(W_l a_l + b_l), G(z) = scale * a_L + offset.
class DenseNetwork final : public Generator {
 public:
  DenseNetwork(LatentPrior latent, Grid grid, std::vector<DenseLayer> layers, double output_scale = 1.0,
               double output_offset = 0.0);

  const LatentPrior& latent() const override { return latent_; }
  const Grid& grid() const override { return grid_; }
  std::string provenance() const override { return provenance_; }
  bool has_vjp() const override { return true; }

  void forward_into(const Vector& z, std::span<double> out) const override;
  Vector vjp_unchecked(const Vector& z, std::span<const double> cotangent) const override;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  double output_scale() const { return output_scale_; }
  double output_offset() const { return output_offset_; }
  void set_provenance(std::string tag) { provenance_ = std::move(tag); }

 private:
  LatentPrior latent_;
  Grid grid_;
  std::vector<DenseLayer> layers_;
  double output_scale_;
  double output_offset_;
  std::string provenance_ = "network";
};

/// Fixed-count lumpy model written as a generator over z ~ N(0, I_{2K}):
/// lump i sits at (nx * Phi(z_{2i}), ny * Phi(z_{2i+1})). Its pushforward is exactly the
/// fixed-K lumpy prior.
class AnalyticLumpyGenerator final : public Generator {
 public:
  AnalyticLumpyGenerator(int lump_count, const LumpyPrior& prior, const PsfParams& psf, const Grid& grid);

  const LatentPrior& latent() const override { return latent_; }
  const Grid& grid() const override { return grid_; }
  std::string provenance() const override { return "analytic"; }
  bool has_vjp() const override { return true; }

  void forward_into(const Vector& z, std::span<double> out) const override;
  Vector vjp_unchecked(const Vector& z, std::span<const double> cotangent) const override;

  LumpyParams centers(const Vector& z) const;

 private:
  int count_;
  LumpyPrior prior_;
  PsfParams psf_;
  Grid grid_;
  LatentPrior latent_;
};

/// G(z) = b0 for every z.
class ConstantGenerator final : public Generator {
 public:
  ConstantGenerator(Image background, LatentPrior latent);

  const LatentPrior& latent() const override { return latent_; }
  const Grid& grid() const override { return background_.grid(); }
  std::string provenance() const override { return "analytic"; }
  bool has_vjp() const override { return true; }

  void forward_into(const Vector& z, std::span<double> out) const override;
  Vector vjp_unchecked(const Vector& z, std::span<const double> cotangent) const override;

 private:
  Image background_;
  LatentPrior latent_;
};

std::shared_ptr<const Generator> analytic_lumpy_generator(int lump_count, const LumpyPrior& prior,
                                                          const PsfParams& psf, const Grid& grid);

inline constexpr int kNetworkFormatVersion = 1;

/// Writes the JSON header at `header_path` and the binary payload next to it (same stem, ".bin").
void save_network(const DenseNetwork& net, const std::filesystem::path& header_path);

/// Loads a network file. Distinct error kinds for version mismatch, size mismatch and
/// unsupported activations/layers.
std::shared_ptr<const DenseNetwork> load_generator(const std::filesystem::path& header_path);

}  // namespace idealobs

namespace idealobs {

struct GradientCheckReport {
  std::size_t cases = 0;
  /// Largest per-coordinate |vjp - fd| / max(|fd|, 1e-3 max|fd|, 1e-12).
  double max_rel_err = 0.0;
};

/// Compares vjp against central finite differences of u^T G(z) on random (z, u) pairs.
GradientCheckReport check_vjp(const Generator& gen, std::size_t cases, Rng& rng, double h = 1e-4);

/// Forward-check vectors shared with external implementations: CSV with a header line, then
/// one row per vector holding k latent values followed by nx*ny outputs.
struct ForwardCheck {
  Vector z;
  std::vector<double> expected;
};

std::vector<ForwardCheck> read_forward_checks(const std::filesystem::path& path, std::size_t latent_dim,
                                              std::size_t output_size);
void write_forward_checks(const std::vector<ForwardCheck>& checks, const std::filesystem::path& path);
/// Largest absolute difference between gen.forward(z) and the expected outputs.
double max_forward_diff(const Generator& gen, const std::vector<ForwardCheck>& checks);

}  // namespace idealobs
