#include "idealobs/generator.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "idealobs/errors.hpp"

namespace idealobs {

using nlohmann::json;

std::string to_string(LatentKind kind) {
  return kind == LatentKind::StandardNormal ? "standard_normal" : "uniform";
}

LatentKind latent_kind_from_string(std::string_view name) {
  if (name == "standard_normal") return LatentKind::StandardNormal;
  if (name == "uniform") return LatentKind::Uniform;
  throw Error(ErrorKind::InvalidArgument, "unknown latent prior '" + std::string(name) + "'");
}

void LatentPrior::validate() const {
  if (dim < 1) throw Error(ErrorKind::InvalidArgument, "latent dimension must be >= 1");
}

double LatentPrior::log_density(const Vector& z) const {
  const double k = static_cast<double>(z.size());
  if (kind == LatentKind::StandardNormal) {
    return -0.5 * z.squaredNorm() - 0.5 * k * std::log(2.0 * std::numbers::pi);
  }
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (!(z[i] > -1.0 && z[i] < 1.0)) return -std::numeric_limits<double>::infinity();
  }
  return -k * std::numbers::ln2;
}

Vector LatentPrior::grad_log_density(const Vector& z) const {
  if (kind == LatentKind::StandardNormal) return -z;
  return Vector::Zero(z.size());
}

Vector LatentPrior::sample(Rng& rng) const {
  Vector z(static_cast<Eigen::Index>(dim));
  if (kind == LatentKind::StandardNormal) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  } else {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = u(rng);
  }
  return z;
}

Vector Generator::vjp_unchecked(const Vector&, std::span<const double>) const {
  throw Error(ErrorKind::UnsupportedLayer, "generator '" + provenance() + "' provides no gradients");
}

void Generator::check_latent(const Vector& z) const {
  if (static_cast<std::size_t>(z.size()) != latent().dim) {
    throw Error(ErrorKind::DimensionMismatch, "latent vector has " + std::to_string(z.size()) +
                                                  " entries, generator expects " + std::to_string(latent().dim));
  }
}

Image Generator::forward(const Vector& z) const {
  check_latent(z);
  Image out(grid());
  forward_into(z, out.pixels());
  if (!out.all_finite()) throw Error(ErrorKind::NonFinite, "generator produced non-finite pixels");
  return out;
}

Vector Generator::vjp(const Vector& z, const Image& cotangent) const {
  check_latent(z);
  require_same_grid(grid(), cotangent.grid(), "generator vjp");
  if (!has_vjp()) throw Error(ErrorKind::UnsupportedLayer, "generator provides no gradients");
  return vjp_unchecked(z, cotangent.pixels());
}

Image generator_forward(const Generator& gen, const Vector& z) { return gen.forward(z); }
Vector generator_vjp(const Generator& gen, const Vector& z, const Image& cotangent) {
  return gen.vjp(z, cotangent);
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

double standard_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Dense networks

std::string to_string(Activation act) {
  switch (act) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::Relu;
  if (name == "leaky_relu") return Activation::LeakyRelu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw Error(ErrorKind::UnsupportedActivation, "unsupported activation '" + std::string(name) + "'");
}

namespace {

constexpr double kLeakySlope = 0.2;

void activate(Activation act, Eigen::VectorXd& v) {
  switch (act) {
    case Activation::Identity: break;
    case Activation::Relu: v = v.cwiseMax(0.0); break;
    case Activation::LeakyRelu: v = v.unaryExpr([](double x) { return x > 0.0 ? x : kLeakySlope * x; }); break;
    case Activation::Tanh: v = v.array().tanh().matrix(); break;
    case Activation::Sigmoid: v = v.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); }); break;
  }
}

// Derivative of the activation, evaluated at the pre-activation.
Eigen::VectorXd activation_slope(Activation act, const Eigen::VectorXd& pre) {
  switch (act) {
    case Activation::Identity: return Eigen::VectorXd::Ones(pre.size());
    case Activation::Relu: return pre.unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; });
    case Activation::LeakyRelu: return pre.unaryExpr([](double x) { return x > 0.0 ? 1.0 : kLeakySlope; });
    case Activation::Tanh:
      return pre.unaryExpr([](double x) {
        const double t = std::tanh(x);
        return 1.0 - t * t;
      });
    case Activation::Sigmoid:
      return pre.unaryExpr([](double x) {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 - s);
      });
  }
  return Eigen::VectorXd::Ones(pre.size());
}

}  // namespace

DenseNetwork::DenseNetwork(LatentPrior latent, Grid grid, std::vector<DenseLayer> layers, double output_scale,
                           double output_offset)
    : latent_(latent), grid_(grid), layers_(std::move(layers)), output_scale_(output_scale),
      output_offset_(output_offset) {
  latent_.validate();
  if (layers_.empty()) throw Error(ErrorKind::SizeMismatch, "network has no layers");
  Eigen::Index width = static_cast<Eigen::Index>(latent_.dim);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weight.cols() != width || layer.bias.size() != layer.weight.rows()) {
      throw Error(ErrorKind::SizeMismatch, "layer " + std::to_string(l) + " shape does not chain with its input");
    }
    width = layer.weight.rows();
  }
  if (static_cast<std::size_t>(width) != grid_.size()) {
    throw Error(ErrorKind::SizeMismatch, "last layer produces " + std::to_string(width) + " values, grid needs " +
                                             std::to_string(grid_.size()));
  }
}

void DenseNetwork::forward_into(const Vector& z, std::span<double> out) const {
  Eigen::VectorXd a = z;
  for (const auto& layer : layers_) {
    Eigen::VectorXd pre = layer.weight * a + layer.bias;
    activate(layer.activation, pre);
    a = std::move(pre);
  }
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = output_scale_ * a[static_cast<Eigen::Index>(m)] + output_offset_;
}

Vector DenseNetwork::vjp_unchecked(const Vector& z, std::span<const double> cotangent) const {
  std::vector<Eigen::VectorXd> pre(layers_.size());
  Eigen::VectorXd a = z;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    pre[l] = layers_[l].weight * a + layers_[l].bias;
    a = pre[l];
    activate(layers_[l].activation, a);
  }
  Eigen::VectorXd delta =
      output_scale_ * Eigen::Map<const Eigen::VectorXd>(cotangent.data(), static_cast<Eigen::Index>(cotangent.size()));
  for (std::size_t l = layers_.size(); l-- > 0;) {
    delta = delta.cwiseProduct(activation_slope(layers_[l].activation, pre[l]));
    delta = layers_[l].weight.transpose() * delta;
  }
  return delta;
}

// ---------------------------------------------------------------------------
// Analytic generators

AnalyticLumpyGenerator::AnalyticLumpyGenerator(int lump_count, const LumpyPrior& prior, const PsfParams& psf,
                                               const Grid& grid)
    : count_(lump_count),
      prior_(prior),
      psf_(psf),
      grid_(grid),
      latent_{LatentKind::StandardNormal, 2 * static_cast<std::size_t>(std::max(lump_count, 0))} {
  if (lump_count < 1) throw Error(ErrorKind::InvalidArgument, "analytic lumpy generator needs K >= 1");
  prior_.validate();
  psf_.validate();
}

LumpyParams AnalyticLumpyGenerator::centers(const Vector& z) const {
  LumpyParams params;
  params.centers.reserve(static_cast<std::size_t>(count_));
  for (int i = 0; i < count_; ++i) {
    params.centers.push_back({grid_.nx * standard_normal_cdf(z[2 * i]), grid_.ny * standard_normal_cdf(z[2 * i + 1])});
  }
  return params;
}

void AnalyticLumpyGenerator::forward_into(const Vector& z, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& c : centers(z).centers) add_measured_lump(out, c, prior_.width, prior_.amplitude, psf_, grid_);
}

Vector AnalyticLumpyGenerator::vjp_unchecked(const Vector& z, std::span<const double> cotangent) const {
  const double v = prior_.width * prior_.width;
  const double total = v + psf_.width * psf_.width;
  const double peak = prior_.amplitude * psf_.height * v / total;
  const auto params = centers(z);
  std::vector<double> ex(static_cast<std::size_t>(grid_.nx));
  std::vector<double> ey(static_cast<std::size_t>(grid_.ny));
  Vector grad = Vector::Zero(z.size());
  for (int k = 0; k < count_; ++k) {
    const Vec2 c = params.centers[static_cast<std::size_t>(k)];
    for (int i = 0; i < grid_.nx; ++i) {
      const double dx = grid_.x_center(i) - c.x;
      ex[i] = std::exp(-0.5 * dx * dx / total);
    }
    for (int j = 0; j < grid_.ny; ++j) {
      const double dy = grid_.y_center(j) - c.y;
      ey[j] = std::exp(-0.5 * dy * dy / total);
    }
    // d lump(r_m) / d c = lump(r_m) * (r_m - c) / total
    double gx = 0.0;
    double gy = 0.0;
    for (int j = 0; j < grid_.ny; ++j) {
      const double dy = grid_.y_center(j) - c.y;
      double row_x = 0.0;
      double row = 0.0;
      for (int i = 0; i < grid_.nx; ++i) {
        const double w = cotangent[grid_.index(i, j)] * ex[i];
        row += w;
        row_x += w * (grid_.x_center(i) - c.x);
      }
      gx += ey[j] * row_x;
      gy += ey[j] * dy * row;
    }
    gx *= peak / total;
    gy *= peak / total;
    grad[2 * k] = gx * grid_.nx * standard_normal_pdf(z[2 * k]);
    grad[2 * k + 1] = gy * grid_.ny * standard_normal_pdf(z[2 * k + 1]);
  }
  return grad;
}

ConstantGenerator::ConstantGenerator(Image background, LatentPrior latent)
    : background_(std::move(background)), latent_(latent) {
  latent_.validate();
}

void ConstantGenerator::forward_into(const Vector&, std::span<double> out) const {
  std::copy(background_.pixels().begin(), background_.pixels().end(), out.begin());
}

Vector ConstantGenerator::vjp_unchecked(const Vector& z, std::span<const double>) const {
  return Vector::Zero(z.size());
}

std::shared_ptr<const Generator> analytic_lumpy_generator(int lump_count, const LumpyPrior& prior,
                                                          const PsfParams& psf, const Grid& grid) {
  return std::make_shared<AnalyticLumpyGenerator>(lump_count, prior, psf, grid);
}

// ---------------------------------------------------------------------------
// Network files

namespace {

std::filesystem::path payload_path_for(const std::filesystem::path& header_path) {
  auto p = header_path;
  p.replace_extension(".bin");
  return p;
}

void put_f32(std::vector<unsigned char>& out, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<unsigned char>((bits >> (8 * k)) & 0xffu));
}

double get_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(p[k]) << (8 * k);
  return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace

void save_network(const DenseNetwork& net, const std::filesystem::path& header_path) {
  const auto payload_path = payload_path_for(header_path);
  json header;
  header["format_version"] = kNetworkFormatVersion;
  header["latent_dim"] = net.latent().dim;
  header["latent_prior"] = to_string(net.latent().kind);
  header["output_shape"] = {net.grid().ny, net.grid().nx};
  header["output_scale"] = net.output_scale();
  header["output_offset"] = net.output_offset();
  header["payload"] = payload_path.filename().string();
  json layers = json::array();
  std::vector<unsigned char> payload;
  for (const auto& layer : net.layers()) {
    layers.push_back({{"type", "dense"},
                      {"in", layer.weight.cols()},
                      {"out", layer.weight.rows()},
                      {"activation", to_string(layer.activation)}});
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) put_f32(payload, layer.weight(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) put_f32(payload, layer.bias[r]);
  }
  header["layers"] = layers;

  std::ofstream h(header_path, std::ios::trunc);
  if (!h) throw Error(ErrorKind::Io, "cannot write " + header_path.string());
  h << header.dump(2) << '\n';
  std::ofstream b(payload_path, std::ios::binary | std::ios::trunc);
  if (!b) throw Error(ErrorKind::Io, "cannot write " + payload_path.string());
  b.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!h || !b) throw Error(ErrorKind::Io, "write failed for network " + header_path.string());
}

std::shared_ptr<const DenseNetwork> load_generator(const std::filesystem::path& header_path) {
  std::ifstream h(header_path);
  if (!h) throw Error(ErrorKind::Io, "cannot open " + header_path.string());
  json header;
  try {
    header = json::parse(h);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BadHeader, header_path.string() + ": " + e.what());
  }

  struct LayerShape {
    long long in;
    long long out;
    Activation act;
  };
  LatentPrior latent;
  Grid grid;
  std::vector<LayerShape> shapes;
  double scale = 1.0;
  double offset = 0.0;
  std::filesystem::path payload_path = payload_path_for(header_path);
  try {
    const int version = header.at("format_version").get<int>();
    if (version != kNetworkFormatVersion) {
      throw Error(ErrorKind::VersionMismatch, header_path.string() + ": format_version " + std::to_string(version) +
                                                  ", expected " + std::to_string(kNetworkFormatVersion));
    }
    latent.dim = header.at("latent_dim").get<std::size_t>();
    latent.kind = latent_kind_from_string(header.at("latent_prior").get<std::string>());
    const auto shape = header.at("output_shape");
    if (!shape.is_array() || shape.size() != 2) throw Error(ErrorKind::BadHeader, "output_shape must be [ny, nx]");
    grid.ny = shape[0].get<int>();
    grid.nx = shape[1].get<int>();
    if (!grid.valid()) throw Error(ErrorKind::BadHeader, "output_shape must be positive");
    scale = header.value("output_scale", 1.0);
    offset = header.value("output_offset", 0.0);
    if (header.contains("payload")) payload_path = header_path.parent_path() / header.at("payload").get<std::string>();
    const auto& layers = header.at("layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& layer = layers[l];
      const std::string type = layer.at("type").get<std::string>();
      if (type != "dense") {
        throw Error(ErrorKind::UnsupportedLayer, "layer " + std::to_string(l) + ": unsupported type '" + type + "'");
      }
      const std::string act_name = layer.at("activation").get<std::string>();
      Activation act;
      try {
        act = activation_from_string(act_name);
      } catch (const Error&) {
        throw Error(ErrorKind::UnsupportedActivation,
                    "layer " + std::to_string(l) + ": unsupported activation '" + act_name + "'");
      }
      const long long in = layer.at("in").get<long long>();
      const long long out = layer.at("out").get<long long>();
      if (in < 1 || out < 1) throw Error(ErrorKind::SizeMismatch, "layer " + std::to_string(l) + ": empty shape");
      shapes.push_back({in, out, act});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BadHeader, header_path.string() + ": " + e.what());
  }

  std::size_t expected_floats = 0;
  for (const auto& s : shapes) expected_floats += static_cast<std::size_t>(s.in * s.out + s.out);
  std::ifstream b(payload_path, std::ios::binary);
  if (!b) throw Error(ErrorKind::Io, "cannot open payload " + payload_path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  if (bytes.size() != 4 * expected_floats) {
    throw Error(ErrorKind::SizeMismatch, payload_path.string() + ": payload has " + std::to_string(bytes.size()) +
                                             " bytes, header declares " + std::to_string(4 * expected_floats));
  }

  std::vector<DenseLayer> layers;
  const unsigned char* p = bytes.data();
  for (const auto& s : shapes) {
    DenseLayer layer;
    layer.activation = s.act;
    layer.weight.resize(s.out, s.in);
    for (Eigen::Index r = 0; r < s.out; ++r) {
      for (Eigen::Index c = 0; c < s.in; ++c, p += 4) layer.weight(r, c) = get_f32(p);
    }
    layer.bias.resize(s.out);
    for (Eigen::Index r = 0; r < s.out; ++r, p += 4) layer.bias[r] = get_f32(p);
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw Error(ErrorKind::NonFinite, payload_path.string() + ": non-finite weights");
    }
    layers.push_back(std::move(layer));
  }
  auto net = std::make_shared<DenseNetwork>(latent, grid, std::move(layers), scale, offset);
  net->set_provenance("network:" + header_path.filename().string());
  return net;
}

}  // namespace idealobs

namespace idealobs {

GradientCheckReport check_vjp(const Generator& gen, std::size_t cases, Rng& rng, double h) {
  if (!gen.has_vjp()) throw Error(ErrorKind::UnsupportedLayer, "generator provides no gradients");
  std::normal_distribution<double> normal(0.0, 1.0);
  GradientCheckReport report;
  for (std::size_t c = 0; c < cases; ++c) {
    Vector z = gen.latent().sample(rng);
    if (gen.latent().kind == LatentKind::Uniform) z *= 0.9;
    Image u(gen.grid());
    for (double& v : u.pixels()) v = normal(rng);
    const Vector analytic = gen.vjp(z, u);
    Vector fd(z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      Vector zp = z;
      Vector zm = z;
      zp[k] += h;
      zm[k] -= h;
      fd[k] = (dot(u.pixels(), gen.forward(zp).pixels()) - dot(u.pixels(), gen.forward(zm).pixels())) / (2.0 * h);
    }
    const double floor = std::max(1e-3 * fd.cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      const double rel = std::abs(analytic[k] - fd[k]) / std::max(std::abs(fd[k]), floor);
      report.max_rel_err = std::max(report.max_rel_err, rel);
    }
    ++report.cases;
  }
  return report;
}

std::vector<ForwardCheck> read_forward_checks(const std::filesystem::path& path, std::size_t latent_dim,
                                              std::size_t output_size) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<ForwardCheck> checks;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t end = line.find(',', start);
      if (end == std::string::npos) end = line.size();
      try {
        values.push_back(std::stod(line.substr(start, end - start)));
      } catch (const std::exception&) {
        throw Error(ErrorKind::BadHeader, path.string() + ": non-numeric field");
      }
      start = end + 1;
    }
    if (values.size() != latent_dim + output_size) {
      throw Error(ErrorKind::SizeMismatch, path.string() + ": row has " + std::to_string(values.size()) +
                                               " values, expected " + std::to_string(latent_dim + output_size));
    }
    ForwardCheck c;
    c.z = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(latent_dim));
    c.expected.assign(values.begin() + static_cast<std::ptrdiff_t>(latent_dim), values.end());
    checks.push_back(std::move(c));
  }
  return checks;
}

void write_forward_checks(const std::vector<ForwardCheck>& checks, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.precision(17);
  if (!checks.empty()) {
    for (Eigen::Index k = 0; k < checks[0].z.size(); ++k) out << (k ? "," : "") << "z_" << k;
    for (std::size_t m = 0; m < checks[0].expected.size(); ++m) out << ",g_" << m;
    out << '\n';
  }
  for (const auto& c : checks) {
    for (Eigen::Index k = 0; k < c.z.size(); ++k) out << (k ? "," : "") << c.z[k];
    for (double v : c.expected) out << ',' << v;
    out << '\n';
  }
}

double max_forward_diff(const Generator& gen, const std::vector<ForwardCheck>& checks) {
  double worst = 0.0;
  for (const auto& c : checks) {
    const Image out = gen.forward(c.z);
    if (out.size() != c.expected.size()) throw Error(ErrorKind::SizeMismatch, "forward check output size mismatch");
    for (std::size_t m = 0; m < out.size(); ++m) worst = std::max(worst, std::abs(out[m] - c.expected[m]));
  }
  return worst;
}

}  // namespace idealobs
