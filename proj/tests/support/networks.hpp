#pragma once

// Random dense networks for generator tests; weights are float-representable so that a saved
// and reloaded network is bit-identical to the in-memory one.

#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include <json.hpp>

#include "idealobs/generator.hpp"
#include "oracles.hpp"

namespace oracle {

inline idealobs::DenseLayer random_layer(int in, int out, idealobs::Activation act, idealobs::Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
  idealobs::DenseLayer l;
  l.weight.resize(out, in);
  l.bias.resize(out);
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < in; ++c) l.weight(r, c) = static_cast<float>(n(rng));
    l.bias[r] = static_cast<float>(0.1 * n(rng));
  }
  l.activation = act;
  return l;
}

/// k -> hidden (act) -> nx*ny (out_act).
inline idealobs::DenseNetwork random_network(int k, int hidden, idealobs::Grid grid, idealobs::Activation act,
                                             idealobs::Activation out_act, idealobs::Rng& rng,
                                             idealobs::LatentKind kind = idealobs::LatentKind::StandardNormal) {
  std::vector<idealobs::DenseLayer> layers{random_layer(k, hidden, act, rng),
                                           random_layer(hidden, static_cast<int>(grid.size()), out_act, rng)};
  return idealobs::DenseNetwork({kind, static_cast<std::size_t>(k)}, grid, std::move(layers), 2.5, -0.5);
}

/// Smallest |pre-activation| over all units at z; finite differences are only meaningful for
/// piecewise-linear activations when this exceeds the step's effect.
inline double kink_margin(const idealobs::DenseNetwork& net, const std::vector<double>& z) {
  std::vector<long double> a(z.begin(), z.end());
  long double margin = 1e300L;
  for (const auto& l : net.layers()) {
    std::vector<long double> next(static_cast<std::size_t>(l.weight.rows()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      long double acc = l.bias[r];
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) acc += static_cast<long double>(l.weight(r, c)) * a[c];
      margin = std::min(margin, std::abs(acc));
      next[static_cast<std::size_t>(r)] = ref_activate(to_string(l.activation), acc);
    }
    a = std::move(next);
  }
  return static_cast<double>(margin);
}

/// Reference forward pass of a saved network, parsing the header with nlohmann::json.
inline std::vector<double> reference_forward_file(const std::filesystem::path& header, const std::vector<double>& z) {
  std::ifstream f(header);
  const auto h = nlohmann::json::parse(f);
  std::vector<RefLayer> layers;
  for (const auto& l : h.at("layers")) {
    layers.push_back({l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(), l.at("activation")});
  }
  const auto payload = read_f32_payload(header.parent_path() / h.at("payload").get<std::string>());
  return reference_forward(layers, payload, z, h.value("output_scale", 1.0), h.value("output_offset", 0.0));
}

}  // namespace oracle
