#include "idealobs/imaging.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "idealobs/detail/gauss_kernel.hpp"
#include "idealobs/errors.hpp"

namespace idealobs {

Cov2 Cov2::from_axes(double w1, double w2, double phi) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const double v1 = w1 * w1;
  const double v2 = w2 * w2;
  return {c * c * v1 + s * s * v2, c * s * (v1 - v2), s * s * v1 + c * c * v2};
}

double PsfParams::amplitude() const { return height / (2.0 * std::numbers::pi * width * width); }

void PsfParams::validate() const {
  if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) || !std::isfinite(height)) {
    throw Error(ErrorKind::InvalidArgument, "psf width and height must be positive");
  }
}

void GaussianNoise::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorKind::InvalidArgument, "noise sigma must be positive");
}

void add_measured_blob(std::span<double> out, const GaussBlob& blob, const PsfParams& psf, const Grid& grid,
                       double scale) {
  psf.validate();
  if (out.size() != grid.size()) throw Error(ErrorKind::DimensionMismatch, "measured_blob: output size != grid size");
  if (!blob.cov.is_spd()) throw Error(ErrorKind::InvalidArgument, "blob covariance must be symmetric positive-definite");
  const double w2 = psf.width * psf.width;
  const Cov2 total{blob.cov.xx + w2, blob.cov.xy, blob.cov.yy + w2};
  const double det_total = total.det();
  if (!(det_total > 0.0) || !std::isfinite(det_total)) {
    throw Error(ErrorKind::InvalidArgument, "measured_blob: Sigma + w^2 I is singular");
  }
  const double peak = scale * blob.amplitude * psf.height * std::sqrt(blob.cov.det() / det_total);
  if (peak == 0.0) return;
  if (total.xy == 0.0) {
    detail::add_axis_aligned_gaussian(out, grid.nx, grid.ny, blob.center.x, blob.center.y, total.xx, total.yy, peak);
    return;
  }
  detail::add_gaussian(out, grid.nx, grid.ny, blob.center.x, blob.center.y, total.yy / det_total,
                       -total.xy / det_total, total.xx / det_total, peak);
}

Image measured_blob(const GaussBlob& blob, const PsfParams& psf, const Grid& grid) {
  Image img(grid);
  add_measured_blob(img.pixels(), blob, psf, grid);
  return img;
}

void add_measured_lump(std::span<double> out, Vec2 center, double std_dev, double amplitude, const PsfParams& psf,
                       const Grid& grid, double scale) {
  const double v = std_dev * std_dev;
  const double total = v + psf.width * psf.width;
  const double peak = scale * amplitude * psf.height * v / total;
  if (peak == 0.0) return;
  detail::add_axis_aligned_gaussian(out, grid.nx, grid.ny, center.x, center.y, total, total, peak);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) {
    const double d = a[m] - b[m];
    acc += d * d;
  }
  return acc;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) acc += a[m] * b[m];
  return acc;
}

double log_likelihood(std::span<const double> g, std::span<const double> mean, const GaussianNoise& noise) {
  if (g.size() != mean.size()) throw Error(ErrorKind::DimensionMismatch, "log_likelihood: size mismatch");
  const double var = noise.sigma * noise.sigma;
  const double normalizer = -0.5 * static_cast<double>(g.size()) * std::log(2.0 * std::numbers::pi * var);
  return normalizer - squared_distance(g, mean) / (2.0 * var);
}

double log_likelihood(const Image& g, const Image& mean, const GaussianNoise& noise) {
  require_same_grid(g.grid(), mean.grid(), "log_likelihood");
  noise.validate();
  return log_likelihood(g.pixels(), mean.pixels(), noise);
}

Image sample_measurement(const Image& mean, const GaussianNoise& noise, Rng& rng) {
  noise.validate();
  std::normal_distribution<double> normal(0.0, noise.sigma);
  Image g = mean;
  for (double& v : g.pixels()) v += normal(rng);
  return g;
}

}  // namespace idealobs
