#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "idealobs/image.hpp"
#include "idealobs/imaging.hpp"
#include "idealobs/random.hpp"

namespace idealobs {

/// Deterministic (SKE) signal: isotropic Gaussian, centered on the grid unless overridden.
struct SkeSignalCfg {
  std::optional<Vec2> center;
  double amplitude = 0.2;
  double width = 3.0;

  Vec2 center_on(const Grid& grid) const { return center.value_or(Vec2{grid.nx / 2.0, grid.ny / 2.0}); }
  void validate() const;
};

/// Random (SKS) signal parameters: center, principal stds and rotation in [0, pi).
struct SignalParams {
  double cx = 32.0;
  double cy = 32.0;
  double w1 = 3.0;
  double w2 = 3.0;
  double phi = 0.0;

  Cov2 covariance() const { return Cov2::from_axes(w1, w2, phi); }
  friend bool operator==(const SignalParams&, const SignalParams&) = default;
};

struct UniformRange {
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v < hi; }
};

/// Independent uniform laws on every signal parameter; amplitude fixed.
struct SksPrior {
  UniformRange cx{16.0, 48.0};
  UniformRange cy{16.0, 48.0};
  UniformRange w1{1.0, 5.0};
  UniformRange w2{1.0, 5.0};
  UniformRange phi{0.0, 3.14159265358979323846};
  double amplitude = 0.2;

  void validate(const Grid& grid) const;
};

Image measured_signal_ske(const SkeSignalCfg& cfg, const PsfParams& psf, const Grid& grid);

SignalParams sample_signal_params(const SksPrior& prior, Rng& rng);
/// -sum ln(range width) inside the support, -infinity outside.
double log_signal_prior(const SignalParams& alpha, const SksPrior& prior);

Image measured_signal_sks(const SignalParams& alpha, double amplitude, const PsfParams& psf, const Grid& grid);
/// out = measured_signal_sks(...) written into an existing buffer.
void fill_measured_signal_sks(std::span<double> out, const SignalParams& alpha, double amplitude,
                              const PsfParams& psf, const Grid& grid);

std::string to_csv_row(const SignalParams& alpha);
SignalParams signal_from_csv_row(std::string_view row);

}  // namespace idealobs
