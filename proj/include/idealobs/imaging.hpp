#pragma once

#include <span>

#include "idealobs/image.hpp"
#include "idealobs/random.hpp"

namespace idealobs {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Symmetric 2x2 covariance [[xx, xy], [xy, yy]] in pixels^2.
struct Cov2 {
  double xx = 1.0;
  double xy = 0.0;
  double yy = 1.0;

  static Cov2 isotropic(double std_dev) { return {std_dev * std_dev, 0.0, std_dev * std_dev}; }
  /// R(phi) diag(w1^2, w2^2) R(phi)^T.
  static Cov2 from_axes(double w1, double w2, double phi);

  double det() const { return xx * yy - xy * xy; }
  bool is_spd() const { return xx > 0.0 && yy > 0.0 && det() > 0.0; }
};

/// Gaussian point response h_m(r) = A exp(-|r - r_m|^2 / (2 w^2)), A = h / (2 pi w^2).
struct PsfParams {
  double width = 0.5;
  double height = 40.0;

  double amplitude() const;
  void validate() const;
};

/// a * exp(-0.5 (r - c)^T Sigma^{-1} (r - c)) in object space.
struct GaussBlob {
  Vec2 center;
  Cov2 cov;
  double amplitude = 1.0;
};

struct GaussianNoise {
  double sigma = 20.0;

  void validate() const;
};

/// Noiseless measurement of a blob: pixel m receives the integral of h_m(r) * blob(r),
/// which is a * h * sqrt(det Sigma / det(Sigma + w^2 I)) * exp(-0.5 d^T (Sigma + w^2 I)^{-1} d).
Image measured_blob(const GaussBlob& blob, const PsfParams& psf, const Grid& grid);

/// out += scale * measured_blob(blob). `out` must hold grid.size() values.
void add_measured_blob(std::span<double> out, const GaussBlob& blob, const PsfParams& psf, const Grid& grid,
                       double scale = 1.0);

/// Isotropic fast path: out += scale * measured image of a lump with std `std_dev`.
void add_measured_lump(std::span<double> out, Vec2 center, double std_dev, double amplitude, const PsfParams& psf,
                       const Grid& grid, double scale = 1.0);

/// ln N(g; mean, sigma^2 I).
double log_likelihood(const Image& g, const Image& mean, const GaussianNoise& noise);
double log_likelihood(std::span<const double> g, std::span<const double> mean, const GaussianNoise& noise);

/// Sum of squared differences.
double squared_distance(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);

/// mean + i.i.d. N(0, sigma^2) per pixel, drawn in pixel order.
Image sample_measurement(const Image& mean, const GaussianNoise& noise, Rng& rng);

}  // namespace idealobs
