#pragma once

// Discrete micro-model: 16x16 grid, one lump whose center is one of 16 known positions with a
// uniform prior. The exact likelihood ratio is a finite sum, so MCMC estimates can be checked
// against exhaustive enumeration.

#include <random>
#include <vector>

#include "idealobs/estimators.hpp"
#include "idealobs/imaging.hpp"
#include "idealobs/lumpy.hpp"
#include "idealobs/mcmc.hpp"
#include "idealobs/signal.hpp"
#include "oracles.hpp"

namespace oracle {

struct MicroModel {
  idealobs::Grid grid{16, 16};
  idealobs::PsfParams psf;
  idealobs::LumpyPrior lumpy;
  idealobs::GaussianNoise noise{20.0};
  std::vector<idealobs::Image> backgrounds;
  idealobs::Image signal{idealobs::Grid{16, 16}};

  MicroModel() {
    // 4x4 lattice with 0.5 px spacing: neighbouring positions have comparable likelihoods.
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        idealobs::LumpyParams p{{{6.75 + 0.5 * a, 6.75 + 0.5 * b}}};
        backgrounds.push_back(idealobs::measured_background(p, lumpy, psf, grid));
      }
    }
    idealobs::SkeSignalCfg s;
    s.center = idealobs::Vec2{8.0, 8.0};
    s.amplitude = 0.5;
    signal = idealobs::measured_signal_ske(s, psf, grid);
  }

  idealobs::Image draw(int hypothesis, idealobs::Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, backgrounds.size() - 1);
    idealobs::Image mean = backgrounds[pick(rng)];
    if (hypothesis == 1) mean += signal;
    return idealobs::sample_measurement(mean, noise, rng);
  }

  /// log of sum_k p(g|b_k,H1) / sum_k p(g|b_k,H0), computed independently of the BKE kernel.
  double exact_log_lr(const idealobs::Image& g) const {
    std::vector<double> l1, l0;
    for (const auto& b : backgrounds) {
      double r0 = 0.0, r1 = 0.0;
      for (std::size_t m = 0; m < g.size(); ++m) {
        const double d0 = g[m] - b[m];
        const double d1 = d0 - signal[m];
        r0 += d0 * d0;
        r1 += d1 * d1;
      }
      l0.push_back(-r0 / (2.0 * noise.sigma * noise.sigma));
      l1.push_back(-r1 / (2.0 * noise.sigma * noise.sigma));
    }
    return log_sum_exp(l1) - log_sum_exp(l0);
  }

  /// MCMC over the lattice index with a uniform independence proposal.
  idealobs::ChainResult mcmc_log_lr(const idealobs::Image& g, const idealobs::ChainConfig& cfg,
                                    idealobs::Rng& rng) const {
    const int n = static_cast<int>(backgrounds.size());
    const auto target = [&](int k) { return idealobs::log_likelihood(g, backgrounds[k], noise); };
    const auto proposal = [n](int, idealobs::Rng& r) {
      return idealobs::Proposal<int>{std::uniform_int_distribution<int>(0, n - 1)(r), 0.0, 0.0};
    };
    const auto integrand = [&](int k, idealobs::Rng&) {
      return idealobs::log_lambda_bke(g, backgrounds[k], signal, noise);
    };
    return idealobs::run_chain(0, target, proposal, integrand, cfg, rng);
  }
};

}  // namespace oracle
