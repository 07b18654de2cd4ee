#include "idealobs/roc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "idealobs/errors.hpp"

namespace idealobs {

void ScoreSet::validate() const {
  if (scores_h1.empty() || scores_h0.empty()) throw Error(ErrorKind::InvalidArgument, "ROC needs scores for both classes");
  for (const auto* v : {&scores_h1, &scores_h0}) {
    for (double x : *v) {
      if (!std::isfinite(x)) throw Error(ErrorKind::NonFinite, "ROC scores must be finite");
    }
  }
}

namespace {

// Sweeps tie groups in ascending order:
// wins = sum over h1 of (#h0 strictly below) + 0.5 (#h0 tied).
double auc_from_sorted_ranks(std::vector<std::pair<double, int>>& labelled, std::size_t n1, std::size_t n0) {
  std::sort(labelled.begin(), labelled.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double wins = 0.0;
  std::size_t h0_below = 0;
  std::size_t i = 0;
  while (i < labelled.size()) {
    std::size_t j = i;
    std::size_t g1 = 0;
    std::size_t g0 = 0;
    while (j < labelled.size() && labelled[j].first == labelled[i].first) {
      (labelled[j].second ? g1 : g0) += 1;
      ++j;
    }
    wins += static_cast<double>(g1) * (static_cast<double>(h0_below) + 0.5 * static_cast<double>(g0));
    h0_below += g0;
    i = j;
  }
  return wins / (static_cast<double>(n1) * static_cast<double>(n0));
}

}  // namespace

double empirical_auc(const ScoreSet& s) {
  s.validate();
  std::vector<std::pair<double, int>> labelled;
  labelled.reserve(s.scores_h1.size() + s.scores_h0.size());
  for (double x : s.scores_h1) labelled.emplace_back(x, 1);
  for (double x : s.scores_h0) labelled.emplace_back(x, 0);
  return auc_from_sorted_ranks(labelled, s.scores_h1.size(), s.scores_h0.size());
}

std::vector<RocPoint> roc_points(const ScoreSet& s) {
  s.validate();
  std::vector<std::pair<double, int>> labelled;
  for (double x : s.scores_h1) labelled.emplace_back(x, 1);
  for (double x : s.scores_h0) labelled.emplace_back(x, 0);
  std::sort(labelled.begin(), labelled.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  const double n1 = static_cast<double>(s.scores_h1.size());
  const double n0 = static_cast<double>(s.scores_h0.size());

  std::vector<RocPoint> points{{0.0, 0.0}};
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  // Threshold at each distinct score: call positive when score >= threshold.
  while (i < labelled.size()) {
    const double threshold = labelled[i].first;
    while (i < labelled.size() && labelled[i].first == threshold) {
      (labelled[i].second ? tp : fp) += 1;
      ++i;
    }
    points.push_back({static_cast<double>(fp) / n0, static_cast<double>(tp) / n1});
  }
  return points;
}

double trapezoid_area(const std::vector<RocPoint>& points) {
  double area = 0.0;
  for (std::size_t k = 1; k < points.size(); ++k) {
    area += (points[k].fpf - points[k - 1].fpf) * (points[k].tpf + points[k - 1].tpf) * 0.5;
  }
  return area;
}

AucInterval bootstrap_auc_ci(const ScoreSet& s, int n_boot, double level, Rng& rng) {
  s.validate();
  if (n_boot < 100) throw Error(ErrorKind::InvalidArgument, "bootstrap needs at least 100 replicates");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::InvalidArgument, "confidence level must be in (0, 1)");

  std::uniform_int_distribution<std::size_t> pick1(0, s.scores_h1.size() - 1);
  std::uniform_int_distribution<std::size_t> pick0(0, s.scores_h0.size() - 1);
  std::vector<double> aucs;
  aucs.reserve(static_cast<std::size_t>(n_boot));
  ScoreSet resample;
  resample.scores_h1.resize(s.scores_h1.size());
  resample.scores_h0.resize(s.scores_h0.size());
  for (int b = 0; b < n_boot; ++b) {
    for (auto& x : resample.scores_h1) x = s.scores_h1[pick1(rng)];
    for (auto& x : resample.scores_h0) x = s.scores_h0[pick0(rng)];
    aucs.push_back(empirical_auc(resample));
  }
  std::sort(aucs.begin(), aucs.end());
  // Linear interpolation between order statistics.
  auto quantile = [&aucs](double q) {
    const double pos = q * static_cast<double>(aucs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, aucs.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return aucs[lo] + frac * (aucs[hi] - aucs[lo]);
  };
  const double tail = 0.5 * (1.0 - level);
  return {quantile(tail), quantile(1.0 - tail)};
}

}  // namespace idealobs
