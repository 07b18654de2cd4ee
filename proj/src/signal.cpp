#include "idealobs/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "idealobs/errors.hpp"

namespace idealobs {

void SkeSignalCfg::validate() const {
  if (!(amplitude >= 0.0) || !(width > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "SKE signal needs amplitude >= 0 and width > 0");
  }
}

void SksPrior::validate(const Grid& grid) const {
  for (const UniformRange* r : {&cx, &cy, &w1, &w2, &phi}) {
    if (!(r->hi > r->lo)) throw Error(ErrorKind::InvalidArgument, "SKS prior ranges must be nonempty");
  }
  if (!(w1.lo > 0.0) || !(w2.lo > 0.0)) throw Error(ErrorKind::InvalidArgument, "SKS widths must be positive");
  if (cx.lo < 0.0 || cx.hi > grid.nx || cy.lo < 0.0 || cy.hi > grid.ny) {
    throw Error(ErrorKind::InvalidArgument, "SKS center range must lie inside the field of view");
  }
}

Image measured_signal_ske(const SkeSignalCfg& cfg, const PsfParams& psf, const Grid& grid) {
  cfg.validate();
  Image img(grid);
  add_measured_lump(img.pixels(), cfg.center_on(grid), cfg.width, cfg.amplitude, psf, grid);
  return img;
}

SignalParams sample_signal_params(const SksPrior& prior, Rng& rng) {
  auto draw = [&rng](const UniformRange& r) {
    std::uniform_real_distribution<double> u(r.lo, r.hi);
    return std::min(u(rng), std::nextafter(r.hi, r.lo));
  };
  SignalParams alpha;
  alpha.cx = draw(prior.cx);
  alpha.cy = draw(prior.cy);
  alpha.w1 = draw(prior.w1);
  alpha.w2 = draw(prior.w2);
  alpha.phi = draw(prior.phi);
  return alpha;
}

double log_signal_prior(const SignalParams& alpha, const SksPrior& prior) {
  if (!prior.cx.contains(alpha.cx) || !prior.cy.contains(alpha.cy) || !prior.w1.contains(alpha.w1) ||
      !prior.w2.contains(alpha.w2) || !prior.phi.contains(alpha.phi)) {
    return -std::numeric_limits<double>::infinity();
  }
  return -(std::log(prior.cx.width()) + std::log(prior.cy.width()) + std::log(prior.w1.width()) +
           std::log(prior.w2.width()) + std::log(prior.phi.width()));
}

void fill_measured_signal_sks(std::span<double> out, const SignalParams& alpha, double amplitude,
                              const PsfParams& psf, const Grid& grid) {
  std::fill(out.begin(), out.end(), 0.0);
  add_measured_blob(out, GaussBlob{{alpha.cx, alpha.cy}, alpha.covariance(), amplitude}, psf, grid);
}

Image measured_signal_sks(const SignalParams& alpha, double amplitude, const PsfParams& psf, const Grid& grid) {
  Image img(grid);
  fill_measured_signal_sks(img.pixels(), alpha, amplitude, psf, grid);
  return img;
}

std::string to_csv_row(const SignalParams& alpha) {
  std::ostringstream out;
  out.precision(17);
  out << alpha.cx << ',' << alpha.cy << ',' << alpha.w1 << ',' << alpha.w2 << ',' << alpha.phi;
  return out.str();
}

SignalParams signal_from_csv_row(std::string_view row) {
  std::vector<double> v;
  std::istringstream in{std::string(row)};
  std::string field;
  while (std::getline(in, field, ',')) {
    try {
      v.push_back(std::stod(field));
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "bad signal CSV field '" + field + "'");
    }
  }
  if (v.size() != 5) throw Error(ErrorKind::InvalidArgument, "signal CSV row needs 5 fields");
  return {v[0], v[1], v[2], v[3], v[4]};
}

}  // namespace idealobs
