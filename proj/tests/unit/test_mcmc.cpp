#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "gaussian_target.hpp"
#include "idealobs/errors.hpp"
#include "idealobs/mcmc.hpp"
#include "oracles.hpp"

using namespace idealobs;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("acceptance probability") {
  CHECK(accept_probability(-3.0, -3.0, 0.5, 0.5) == 1.0);
  CHECK(accept_probability(-kInf, -3.0, 0.0, 0.0) == 0.0);
  CHECK(accept_probability(-4.0, -3.0, 0.0, 0.0) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
  CHECK(accept_probability(-3.0, -3.0, -1.0, 0.0) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
  CHECK(accept_probability(10.0, -3.0, 0.0, 0.0) == 1.0);
  CHECK_THROWS_AS(accept_probability(0.0, -kInf, 0.0, 0.0), Error);
}

TEST_CASE("log-mean accumulator is stable for large magnitudes") {
  LogMeanAccumulator acc;
  std::vector<double> v{1e4, 1e4 - 1.0, -1e4, 1e4 - 50.0};
  for (double x : v) acc.add(x);
  CHECK(acc.log_mean() == doctest::Approx(oracle::log_sum_exp(v) - std::log(4.0)).epsilon(1e-14));

  LogMeanAccumulator neg;
  for (double x : {-1e4, -1e4 + 2.0}) neg.add(x);
  CHECK(std::isfinite(neg.log_mean()));
  CHECK(neg.log_mean() == doctest::Approx(-1e4 + std::log((1.0 + std::exp(2.0)) / 2.0)).epsilon(1e-14));
}

TEST_CASE("batch means error of i.i.d. samples") {
  // For i.i.d. l ~ N(0, 1): Var(exp l) = e^2 - e, so SE(log mean) ~ sqrt((e^2 - e) / n) / e^(1/2).
  Rng rng(12);
  std::normal_distribution<double> n01(0.0, 1.0);
  const std::size_t n = 200000;
  BatchMeans bm(n, 100);
  for (std::size_t k = 0; k < n; ++k) bm.add(n01(rng));
  const double expected = std::sqrt((std::exp(2.0) - std::exp(1.0)) / n) / std::exp(0.5);
  CHECK(bm.log_mean() == doctest::Approx(0.5).epsilon(0.02));
  CHECK(bm.std_err() == doctest::Approx(expected).epsilon(0.3));
}

TEST_CASE("a chain that never moves averages a constant exactly") {
  Rng rng(1);
  ChainConfig cfg;
  cfg.n_iter = 5000;
  cfg.burn_in = 100;
  const auto r = run_chain(
      0.0, [](double) { return 0.0; },
      [](double s, Rng&) { return Proposal<double>{s, 0.0, 0.0}; }, [](double, Rng&) { return -7.25; }, cfg, rng);
  CHECK(r.log_lr_estimate == -7.25);
  CHECK(r.n_kept == 4900);
  CHECK(r.acceptance_rate == 1.0);
}

TEST_CASE("burn-in and thinning select the kept iterations") {
  Rng rng(1);
  ChainConfig cfg;
  cfg.n_iter = 100;
  cfg.burn_in = 10;
  cfg.thinning = 3;
  std::vector<std::size_t> seen;
  std::size_t it = 0;
  run_chain(
      0, [](int) { return 0.0; }, [&](int s, Rng&) { ++it; return Proposal<int>{s, 0.0, 0.0}; },
      [&](int, Rng&) { seen.push_back(it); return 0.0; }, cfg, rng);
  REQUIRE(seen.size() == 30);
  CHECK(seen.front() == 13);
  CHECK(seen.back() == 100);
}

TEST_CASE("chain start and evaluation failures") {
  Rng rng(1);
  ChainConfig cfg;
  cfg.n_iter = 10;
  cfg.burn_in = 1;
  const auto never = [](double s, Rng&) { return Proposal<double>{s, 0.0, 0.0}; };
  const auto zero = [](double, Rng&) { return 0.0; };
  try {
    run_chain(0.0, [](double) { return -kInf; }, never, zero, cfg, rng);
    FAIL("expected a chain-start error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ChainStart);
  }
  int calls = 0;
  const auto flaky = [&](double) -> double {
    if (++calls == 5) throw std::runtime_error("boom");
    return 0.0;
  };
  try {
    run_chain(0.0, flaky, never, zero, cfg, rng);
    FAIL("expected an evaluation error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("iteration 4") != std::string::npos);
  }
  cfg.burn_in = 10;
  CHECK_THROWS_AS(run_chain(0.0, [](double) { return 0.0; }, never, zero, cfg, rng), Error);
}

TEST_CASE("identical seeds give identical results") {
  const oracle::GaussianTarget t{Eigen::Vector2d(0.0, 0.0), Eigen::Matrix2d::Identity()};
  ChainConfig cfg;
  cfg.n_iter = 20000;
  const auto target = [&](const Vector& x) { return t.log_density(x); };
  const auto integrand = [](const Vector& x, Rng&) { return x[0]; };
  Rng a(5), b(5);
  const auto ra = run_chain(Vector(t.mean), target, rwmh_kernel(1.0, 2), integrand, cfg, a);
  const auto rb = run_chain(Vector(t.mean), target, rwmh_kernel(1.0, 2), integrand, cfg, b);
  CHECK(ra.log_lr_estimate == rb.log_lr_estimate);
  CHECK(ra.std_err == rb.std_err);
  CHECK(ra.n_accepted == rb.n_accepted);
}

TEST_CASE("kernel densities") {
  Rng rng(3);
  const Vector x = Vector::Constant(4, 0.3);
  for (int k = 0; k < 10; ++k) {
    const auto p = rwmh_kernel(0.5, 4)(x, rng);
    CHECK(p.log_q_fwd - p.log_q_rev == 0.0);
  }
  const auto block = rwmh_kernel(0.5, 4, 2)(x, rng);
  int moved = 0;
  for (int i = 0; i < 4; ++i) moved += block.candidate[i] != x[i];
  CHECK(moved == 2);
  CHECK(block.log_q_fwd == block.log_q_rev);

  const MalaKernel flat = mala_kernel(0.5, [](const Vector& v) { return Vector(Vector::Zero(v.size())); });
  Rng r1(9), r2(9);
  const auto pm = flat(x, r1);
  const auto pr = rwmh_kernel(0.5, 4)(x, r2);
  CHECK(pm.candidate.isApprox(pr.candidate));
  CHECK(pm.log_q_fwd == doctest::Approx(isotropic_gaussian_log_density(pm.candidate, x, 0.5)));
  CHECK(pm.log_q_rev == doctest::Approx(pm.log_q_fwd));

  const MalaKernel bad = mala_kernel(0.5, [](const Vector& v) { return Vector(Vector::Constant(v.size(), NAN)); });
  CHECK_THROWS_AS(bad(x, rng), Error);
}

TEST_CASE("MALA on a 10-D standard normal") {
  const oracle::GaussianTarget t{Vector::Zero(10), Eigen::MatrixXd::Identity(10, 10)};
  Rng rng(31);
  const auto m = oracle::sample_moments(t, mala_kernel(0.9, [&](const Vector& x) { return t.grad(x); }), 100000, 5,
                                        rng);
  CHECK(m.mean.cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("RWMH and MALA reproduce a correlated 2-D Gaussian") {
  Eigen::Matrix2d cov;
  cov << 1.0, 0.6, 0.6, 2.0;
  const oracle::GaussianTarget t{Eigen::Vector2d(1.0, -2.0), cov};
  Rng rng(17);
  const auto check = [&](const oracle::Moments& m) {
    CHECK((m.mean - t.mean).cwiseAbs().maxCoeff() < 0.03);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) CHECK(std::abs(m.cov(i, j) / cov(i, j) - 1.0) < 0.05);
    }
  };
  check(oracle::sample_moments(t, rwmh_kernel(1.6, 2), 100000, 20, rng));
  check(oracle::sample_moments(t, mala_kernel(1.1, [&](const Vector& x) { return t.grad(x); }), 100000, 10, rng));
}

TEST_CASE("trace writer emits one row per iteration") {
  std::ostringstream out;
  Rng rng(1);
  ChainConfig cfg;
  cfg.n_iter = 5;
  cfg.burn_in = 2;
  run_chain(
      0.0, [](double) { return -1.5; }, [](double s, Rng&) { return Proposal<double>{s, 0.0, 0.0}; },
      [](double, Rng&) { return 0.25; }, cfg, rng, ChainTraceWriter(out));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "iteration,accepted,log_target,log_integrand");
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  REQUIRE(rows.size() == 5);
  CHECK(rows[1].back() == ',');
  CHECK(rows[2].find("0.25") != std::string::npos);
}
