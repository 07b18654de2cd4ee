#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "idealobs/errors.hpp"
#include "idealobs/generator.hpp"
#include "networks.hpp"
#include "oracles.hpp"

using namespace idealobs;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "idealobs_test_generator";
  fs::create_directories(dir);
  return dir;
}

std::vector<double> as_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

/// max relative error of vjp(z, u) against central differences of u^T G(z).
double vjp_error(const Generator& gen, Rng& rng) {
  const Vector z = gen.latent().kind == LatentKind::Uniform ? Vector(0.8 * gen.latent().sample(rng))
                                                            : gen.latent().sample(rng);
  std::normal_distribution<double> n(0.0, 1.0);
  Image u(gen.grid());
  for (double& v : u.pixels()) v = n(rng);
  const Vector grad = generator_vjp(gen, z, u);
  const auto f = [&](const std::vector<double>& zz) {
    const Image out = generator_forward(gen, Eigen::Map<const Vector>(zz.data(), static_cast<Eigen::Index>(zz.size())));
    double acc = 0.0;
    for (std::size_t m = 0; m < out.size(); ++m) acc += u[m] * out[m];
    return acc;
  };
  return oracle::fd_rel_err(f, as_std(z), as_std(grad));
}

}  // namespace

TEST_CASE("standard normal cdf") {
  CHECK(standard_normal_cdf(0.0) == 0.5);
  CHECK(standard_normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-15));
  CHECK(standard_normal_cdf(-8.0) == doctest::Approx(6.220960574271785e-16).epsilon(1e-12));
  CHECK(standard_normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
}

TEST_CASE("latent priors") {
  const LatentPrior normal{LatentKind::StandardNormal, 2};
  CHECK(normal.log_density(Vector::Zero(2)) == doctest::Approx(-std::log(2.0 * M_PI)).epsilon(1e-15));
  const LatentPrior uniform{LatentKind::Uniform, 3};
  CHECK(uniform.log_density(Vector::Zero(3)) == doctest::Approx(-3.0 * std::log(2.0)));
  CHECK(uniform.log_density(Vector::Constant(3, 1.0)) == -std::numeric_limits<double>::infinity());
  CHECK(uniform.grad_log_density(Vector::Constant(3, 0.5)).isZero());
  CHECK(latent_kind_from_string(to_string(LatentKind::Uniform)) == LatentKind::Uniform);
}

TEST_CASE("identity network reproduces its input") {
  const Grid grid{3, 2};
  DenseLayer l;
  l.weight = Eigen::MatrixXd::Identity(6, 6);
  l.bias = Eigen::VectorXd::Zero(6);
  const DenseNetwork net({LatentKind::StandardNormal, 6}, grid, {l});
  Vector z(6);
  z << 1, 2, 3, 4, 5, 6;
  const Image out = generator_forward(net, z);
  for (int m = 0; m < 6; ++m) CHECK(out[m] == z[m]);
}

TEST_CASE("linear network vjp is W^T u") {
  Rng rng(3);
  const Grid grid{4, 3};
  DenseLayer l = oracle::random_layer(5, 12, Activation::Identity, rng);
  const DenseNetwork net({LatentKind::StandardNormal, 5}, grid, {l});
  Image u(grid);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : u.pixels()) v = n(rng);
  const Vector expected = l.weight.transpose() * Eigen::Map<const Vector>(u.pixels().data(), 12);
  CHECK((generator_vjp(net, Vector::Random(5), u) - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(generator_vjp(net, Vector::Random(5), Image(grid)).isZero());
}

TEST_CASE("vjp matches central finite differences for every activation") {
  Rng rng(11);
  const Grid grid{6, 5};
  for (Activation act :
       {Activation::Identity, Activation::Relu, Activation::LeakyRelu, Activation::Tanh, Activation::Sigmoid}) {
    CAPTURE(to_string(act));
    const DenseNetwork net = oracle::random_network(4, 16, grid, act, Activation::Tanh, rng);
    for (int k = 0; k < 5; ++k) CHECK(vjp_error(net, rng) < 1e-4);
  }
  const DenseNetwork uni = oracle::random_network(3, 8, grid, Activation::Tanh, Activation::Sigmoid, rng,
                                                  LatentKind::Uniform);
  CHECK(vjp_error(uni, rng) < 1e-4);
}

TEST_CASE("analytic lumpy generator") {
  const LumpyPrior prior;
  const PsfParams psf;
  const Grid grid;
  const AnalyticLumpyGenerator gen(1, prior, psf, grid);
  const auto centers = gen.centers(Vector::Zero(2));
  REQUIRE(centers.count() == 1);
  CHECK(centers.centers[0] == Vec2{32.0, 32.0});
  const Image img = generator_forward(gen, Vector::Zero(2));
  CHECK(img == measured_background(centers, prior, psf, grid));

  Rng rng(12);
  const AnalyticLumpyGenerator five(5, prior, psf, grid);
  CHECK(five.latent().dim == 10);
  for (int k = 0; k < 3; ++k) CHECK(vjp_error(five, rng) < 1e-4);

  std::vector<double> xs, ys;
  for (int k = 0; k < 100000; ++k) {
    const auto c = gen.centers(gen.latent().sample(rng));
    xs.push_back(c.centers[0].x);
    ys.push_back(c.centers[0].y);
  }
  CHECK(oracle::ks_uniform_pvalue(xs, 0.0, 64.0) > 0.01);
  CHECK(oracle::ks_uniform_pvalue(ys, 0.0, 64.0) > 0.01);
}

TEST_CASE("network file round trip and reference forward pass") {
  Rng rng(21);
  const Grid grid{8, 6};
  const DenseNetwork net = oracle::random_network(5, 12, grid, Activation::LeakyRelu, Activation::Sigmoid, rng);
  const fs::path header = scratch_dir() / "roundtrip.json";
  save_network(net, header);
  const auto loaded = load_generator(header);
  CHECK(loaded->latent().dim == 5);
  CHECK(loaded->grid() == grid);
  for (int k = 0; k < 10; ++k) {
    const Vector z = net.latent().sample(rng);
    const Image a = generator_forward(net, z);
    const Image b = generator_forward(*loaded, z);
    CHECK(a == b);
    const auto ref = oracle::reference_forward_file(header, as_std(z));
    double worst = 0.0;
    for (std::size_t m = 0; m < ref.size(); ++m) worst = std::max(worst, std::abs(ref[m] - b[m]));
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("network file errors") {
  Rng rng(22);
  const Grid grid{4, 4};
  const DenseNetwork net = oracle::random_network(3, 5, grid, Activation::Relu, Activation::Identity, rng);
  const fs::path dir = scratch_dir();
  const fs::path header = dir / "errors.json";
  const auto kind_of = [](const fs::path& p) {
    try {
      load_generator(p);
    } catch (const Error& e) {
      return e.kind();
    }
    FAIL("load_generator accepted a broken file");
    return ErrorKind::Io;
  };
  const auto edit_header = [&](auto&& fn) {
    save_network(net, header);
    std::ifstream in(header);
    auto j = nlohmann::json::parse(in);
    in.close();
    fn(j);
    std::ofstream(header) << j.dump();
  };

  save_network(net, header);
  const fs::path payload = dir / "errors.bin";
  fs::resize_file(payload, fs::file_size(payload) - 4);
  CHECK(kind_of(header) == ErrorKind::SizeMismatch);

  edit_header([](auto& j) { j["format_version"] = 2; });
  CHECK(kind_of(header) == ErrorKind::VersionMismatch);

  edit_header([](auto& j) { j["layers"][1]["activation"] = "gelu"; });
  try {
    load_generator(header);
    FAIL("gelu accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedActivation);
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }

  edit_header([](auto& j) { j["layers"][0]["type"] = "conv2d"; });
  CHECK(kind_of(header) == ErrorKind::UnsupportedLayer);

  edit_header([](auto& j) { j["output_shape"] = {5, 4}; });
  CHECK(kind_of(header) != ErrorKind::Io);

  std::ofstream(header) << "{ not json";
  CHECK(kind_of(header) == ErrorKind::BadHeader);
}

TEST_CASE("forward checks: csv round trip and max difference") {
  Rng rng(23);
  const Grid grid{3, 3};
  const DenseNetwork net = oracle::random_network(2, 4, grid, Activation::Tanh, Activation::Identity, rng);
  std::vector<ForwardCheck> checks;
  for (int k = 0; k < 10; ++k) {
    const Vector z = net.latent().sample(rng);
    const Image out = generator_forward(net, z);
    checks.push_back({z, {out.pixels().begin(), out.pixels().end()}});
  }
  const fs::path path = scratch_dir() / "checks.csv";
  write_forward_checks(checks, path);
  const auto back = read_forward_checks(path, 2, 9);
  REQUIRE(back.size() == 10);
  CHECK(max_forward_diff(net, back) < 1e-12);
  CHECK_THROWS_AS(read_forward_checks(path, 3, 9), Error);

  GradientCheckReport rep = check_vjp(net, 10, rng);
  CHECK(rep.cases == 10);
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("dimension mismatches") {
  Rng rng(24);
  const DenseNetwork net = oracle::random_network(2, 4, Grid{3, 3}, Activation::Tanh, Activation::Identity, rng);
  CHECK_THROWS_AS(generator_forward(net, Vector::Zero(3)), Error);
  CHECK_THROWS_AS(generator_vjp(net, Vector::Zero(2), Image(Grid{2, 2})), Error);
  CHECK_THROWS_AS(DenseNetwork({LatentKind::StandardNormal, 3}, Grid{3, 3},
                               {oracle::random_layer(2, 9, Activation::Identity, rng)}),
                  Error);
}
