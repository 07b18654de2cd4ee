#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "idealobs/image.hpp"
#include "idealobs/imaging.hpp"
#include "idealobs/random.hpp"

namespace idealobs {

/// Lumpy background prior: N ~ Poisson(mean_lumps) (or N fixed), centers uniform over the
/// field of view, every lump an isotropic Gaussian with the given amplitude and std.
struct LumpyPrior {
  double mean_lumps = 5.0;
  double amplitude = 1.0;
  double width = 7.0;
  /// When set, N is fixed at this value instead of Poisson distributed.
  std::optional<int> fixed_count;

  void validate() const;
};

struct LumpyParams {
  std::vector<Vec2> centers;

  std::size_t count() const { return centers.size(); }
  friend bool operator==(const LumpyParams&, const LumpyParams&) = default;
};

/// Move/add/remove mixture for the trans-dimensional chain, plus an optional relocate move that
/// sends one lump to a uniform new position.
struct LumpyProposalCfg {
  double p_move = 0.8;
  double p_add = 0.1;
  double p_remove = 0.1;
  double move_step = 1.0;
  double p_relocate = 0.0;

  /// Fixed-count proposal: local moves, optionally mixed with relocations.
  static LumpyProposalCfg move_only(double step, double relocate = 0.0) {
    return {1.0 - relocate, 0.0, 0.0, step, relocate};
  }
  void validate() const;
};

enum class LumpyMoveKind { Move, Add, Remove, Relocate };

struct LumpyProposal {
  LumpyParams candidate;
  double log_q_fwd = 0.0;
  double log_q_rev = 0.0;
  LumpyMoveKind kind = LumpyMoveKind::Move;
  /// Index of the lump that moved, relocated or was removed; for Add, the insertion slot.
  std::size_t index = 0;
};

LumpyParams sample_lumpy(const LumpyPrior& prior, const Grid& grid, Rng& rng);

/// ln Poisson(N; lambda) + N ln(1/Area) on the ordered representation, or -infinity when a
/// center leaves the field of view (or N differs from a fixed count).
double log_prior(const LumpyParams& params, const LumpyPrior& prior, const Grid& grid);

Image measured_background(const LumpyParams& params, const LumpyPrior& prior, const PsfParams& psf, const Grid& grid);

LumpyProposal propose_lumpy(const LumpyParams& params, const LumpyProposalCfg& cfg, const Grid& grid, Rng& rng);

/// Lump configuration together with its measured background. Applying a proposal touches only
/// the lump that changed: its image is recomputed and subtracted/added.
class LumpyBackground {
 public:
  LumpyBackground(LumpyParams params, const LumpyPrior& prior, const PsfParams& psf, const Grid& grid);

  /// Returns the background after `proposal`; `this` is unchanged.
  LumpyBackground with(const LumpyProposal& proposal) const;
  void apply(const LumpyProposal& proposal);

  const LumpyParams& params() const { return params_; }
  const Image& image() const { return image_; }

 private:
  void add_lump(Vec2 center, double scale);

  LumpyParams params_;
  Image image_;
  double amplitude_;
  double width_;
  PsfParams psf_;
};

/// CSV row: N followed by x,y pairs.
std::string to_csv_row(const LumpyParams& params);
LumpyParams lumpy_from_csv_row(std::string_view row);

}  // namespace idealobs
