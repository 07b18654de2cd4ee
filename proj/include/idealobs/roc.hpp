#pragma once

#include <utility>
#include <vector>

#include "idealobs/random.hpp"

namespace idealobs {

/// Test statistics for signal-present (h1) and signal-absent (h0) images.
struct ScoreSet {
  std::vector<double> scores_h1;
  std::vector<double> scores_h0;

  void validate() const;
};

struct RocPoint {
  double fpf = 0.0;
  double tpf = 0.0;
};

/// Mann-Whitney AUC: mean over all (h1, h0) pairs of 1 if h1 > h0, 1/2 on ties, else 0.
double empirical_auc(const ScoreSet& s);

/// Empirical operating points with thresholds at every distinct score, from (0,0) to (1,1).
std::vector<RocPoint> roc_points(const ScoreSet& s);

/// Trapezoidal area under a polyline of operating points.
double trapezoid_area(const std::vector<RocPoint>& points);

struct AucInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile bootstrap interval for the AUC; both classes are resampled with replacement.
AucInterval bootstrap_auc_ci(const ScoreSet& s, int n_boot, double level, Rng& rng);

}  // namespace idealobs
