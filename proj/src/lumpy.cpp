#include "idealobs/lumpy.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "idealobs/errors.hpp"

namespace idealobs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double uniform_coordinate(int extent, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, static_cast<double>(extent));
  double v = u(rng);
  if (v >= extent) v = std::nextafter(static_cast<double>(extent), 0.0);
  return v;
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

}  // namespace

void LumpyPrior::validate() const {
  if (!(mean_lumps > 0.0) || amplitude == 0.0 || !std::isfinite(amplitude) || !(width > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "lumpy prior needs mean_lumps > 0, amplitude != 0, width > 0");
  }
  if (fixed_count && *fixed_count < 0) throw Error(ErrorKind::InvalidArgument, "fixed lump count must be >= 0");
}

void LumpyProposalCfg::validate() const {
  if (p_move < 0.0 || p_add < 0.0 || p_remove < 0.0 || p_relocate < 0.0 ||
      std::abs(p_move + p_add + p_remove + p_relocate - 1.0) > 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "lumpy proposal probabilities must be nonnegative and sum to 1");
  }
  if (!(move_step > 0.0)) throw Error(ErrorKind::InvalidArgument, "lumpy move step must be positive");
}

LumpyParams sample_lumpy(const LumpyPrior& prior, const Grid& grid, Rng& rng) {
  prior.validate();
  std::size_t n = 0;
  if (prior.fixed_count) {
    n = static_cast<std::size_t>(*prior.fixed_count);
  } else {
    std::poisson_distribution<int> poisson(prior.mean_lumps);
    n = static_cast<std::size_t>(poisson(rng));
  }
  LumpyParams params;
  params.centers.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = uniform_coordinate(grid.nx, rng);
    const double y = uniform_coordinate(grid.ny, rng);
    params.centers.push_back({x, y});
  }
  return params;
}

double log_prior(const LumpyParams& params, const LumpyPrior& prior, const Grid& grid) {
  for (const auto& c : params.centers) {
    if (!grid.contains(c.x, c.y)) return kNegInf;
  }
  const double n = static_cast<double>(params.count());
  const double position_term = -n * std::log(grid.area());
  if (prior.fixed_count) {
    return static_cast<int>(params.count()) == *prior.fixed_count ? position_term : kNegInf;
  }
  const double lambda = prior.mean_lumps;
  return -lambda + n * std::log(lambda) - std::lgamma(n + 1.0) + position_term;
}

Image measured_background(const LumpyParams& params, const LumpyPrior& prior, const PsfParams& psf,
                          const Grid& grid) {
  psf.validate();
  Image img(grid);
  for (const auto& c : params.centers) add_measured_lump(img.pixels(), c, prior.width, prior.amplitude, psf, grid);
  return img;
}

LumpyProposal propose_lumpy(const LumpyParams& params, const LumpyProposalCfg& cfg, const Grid& grid, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = params.count();

  LumpyMoveKind kind = LumpyMoveKind::Relocate;
  const double u = unit(rng);
  if (u < cfg.p_move) {
    kind = LumpyMoveKind::Move;
  } else if (u < cfg.p_move + cfg.p_add) {
    kind = LumpyMoveKind::Add;
  } else if (u < cfg.p_move + cfg.p_add + cfg.p_remove) {
    kind = LumpyMoveKind::Remove;
  }
  // From an empty configuration every draw becomes an add, so P(add | N = 0) = 1.
  if (n == 0) kind = LumpyMoveKind::Add;
  auto p_add_given = [&](std::size_t count) { return count == 0 ? 1.0 : cfg.p_add; };
  const double log_area = std::log(grid.area());

  LumpyProposal out;
  out.candidate = params;
  out.kind = kind;
  switch (kind) {
    case LumpyMoveKind::Move: {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      std::normal_distribution<double> step(0.0, cfg.move_step);
      out.index = pick(rng);
      const double dx = step(rng);
      const double dy = step(rng);
      out.candidate.centers[out.index].x += dx;
      out.candidate.centers[out.index].y += dy;
      // The Gaussian step density is the same in both directions and is left out.
      out.log_q_fwd = safe_log(cfg.p_move) - std::log(static_cast<double>(n));
      out.log_q_rev = out.log_q_fwd;
      break;
    }
    case LumpyMoveKind::Add: {
      const double x = uniform_coordinate(grid.nx, rng);
      const double y = uniform_coordinate(grid.ny, rng);
      // Insert at a uniform slot so that every removal has an exact reverse.
      std::uniform_int_distribution<std::size_t> slot(0, n);
      out.index = slot(rng);
      out.candidate.centers.insert(out.candidate.centers.begin() + static_cast<std::ptrdiff_t>(out.index), {x, y});
      out.log_q_fwd = safe_log(p_add_given(n)) - log_area - std::log(static_cast<double>(n + 1));
      out.log_q_rev = safe_log(cfg.p_remove) - std::log(static_cast<double>(n + 1));
      break;
    }
    case LumpyMoveKind::Remove: {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      out.index = pick(rng);
      out.candidate.centers.erase(out.candidate.centers.begin() + static_cast<std::ptrdiff_t>(out.index));
      out.log_q_fwd = safe_log(cfg.p_remove) - std::log(static_cast<double>(n));
      out.log_q_rev = safe_log(p_add_given(n - 1)) - log_area - std::log(static_cast<double>(n));
      break;
    }
    case LumpyMoveKind::Relocate: {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      out.index = pick(rng);
      const double x = uniform_coordinate(grid.nx, rng);
      const double y = uniform_coordinate(grid.ny, rng);
      out.candidate.centers[out.index] = {x, y};
      out.log_q_fwd = safe_log(cfg.p_relocate) - std::log(static_cast<double>(n)) - log_area;
      out.log_q_rev = out.log_q_fwd;
      break;
    }
  }
  return out;
}

LumpyBackground::LumpyBackground(LumpyParams params, const LumpyPrior& prior, const PsfParams& psf, const Grid& grid)
    : params_(std::move(params)),
      image_(measured_background(params_, prior, psf, grid)),
      amplitude_(prior.amplitude),
      width_(prior.width),
      psf_(psf) {}

void LumpyBackground::add_lump(Vec2 center, double scale) {
  add_measured_lump(image_.pixels(), center, width_, amplitude_, psf_, image_.grid(), scale);
}

void LumpyBackground::apply(const LumpyProposal& proposal) {
  switch (proposal.kind) {
    case LumpyMoveKind::Move:
    case LumpyMoveKind::Relocate:
      add_lump(params_.centers[proposal.index], -1.0);
      add_lump(proposal.candidate.centers[proposal.index], 1.0);
      break;
    case LumpyMoveKind::Add:
      add_lump(proposal.candidate.centers[proposal.index], 1.0);
      break;
    case LumpyMoveKind::Remove:
      add_lump(params_.centers[proposal.index], -1.0);
      break;
  }
  params_ = proposal.candidate;
}

LumpyBackground LumpyBackground::with(const LumpyProposal& proposal) const {
  LumpyBackground next = *this;
  next.apply(proposal);
  return next;
}

std::string to_csv_row(const LumpyParams& params) {
  std::ostringstream out;
  out.precision(17);
  out << params.count();
  for (const auto& c : params.centers) out << ',' << c.x << ',' << c.y;
  return out.str();
}

LumpyParams lumpy_from_csv_row(std::string_view row) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= row.size()) {
    std::size_t end = row.find(',', start);
    if (end == std::string_view::npos) end = row.size();
    const std::string field(row.substr(start, end - start));
    try {
      std::size_t used = 0;
      values.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "bad lumpy CSV field '" + field + "'");
    }
    start = end + 1;
  }
  if (values.empty() || values[0] < 0 || values[0] != std::floor(values[0]) ||
      values.size() != 1 + 2 * static_cast<std::size_t>(values[0])) {
    throw Error(ErrorKind::InvalidArgument, "lumpy CSV row length does not match its count");
  }
  LumpyParams params;
  for (std::size_t k = 1; k < values.size(); k += 2) params.centers.push_back({values[k], values[k + 1]});
  return params;
}

}  // namespace idealobs
