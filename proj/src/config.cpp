#include "idealobs/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "idealobs/errors.hpp"

namespace idealobs {

std::string to_string(SamplerKind kind) { return kind == SamplerKind::Conventional ? "conventional" : "gan"; }
std::string to_string(GeneratorSource source) {
  return source == GeneratorSource::File ? "file" : "analytic_lumpy";
}

void ExperimentConfig::validate() const {
  task.validate();
  lumpy.prior.validate();
  lumpy.proposal.validate();
  chain.validate();
  if (n_pairs < 1) throw Error(ErrorKind::Config, "n_pairs must be >= 1");
  if (threads < 1) throw Error(ErrorKind::Config, "threads must be >= 1");
  if (n_boot < 100) throw Error(ErrorKind::Config, "n_boot must be >= 100");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw Error(ErrorKind::Config, "ci_level must be in (0, 1)");
  if (sampler == SamplerKind::Gan) {
    if (generator_source == GeneratorSource::File && generator_file.empty()) {
      throw Error(ErrorKind::Config, "gan sampler needs generator_file (or generator: analytic_lumpy)");
    }
    if (generator_source == GeneratorSource::File && !std::filesystem::exists(generator_file)) {
      throw Error(ErrorKind::Config, "generator_file does not exist: " + generator_file.string());
    }
    if (generator_source == GeneratorSource::AnalyticLumpy && !lumpy.prior.fixed_count) {
      throw Error(ErrorKind::Config, "generator: analytic_lumpy needs lumpy_fixed_count > 0");
    }
  }
}

namespace {

template <typename T>
T as(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw Error(ErrorKind::Config, "config key '" + key + "' has an invalid value");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::Config, std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  if (root.IsNull()) {
    cfg.task.noise.sigma = 20.0;
    return cfg;
  }
  if (!root.IsMap()) throw Error(ErrorKind::Config, "config must be a flat key: value mapping");

  bool noise_set = false;
  double move_step = cfg.lumpy.proposal.move_step;
  std::optional<double> p_move, p_add, p_remove;
  double p_relocate = 0.0;
  auto& t = cfg.task;

  using Setter = std::function<void(const YAML::Node&, const std::string&)>;
  auto num = [](double& dst) -> Setter { return [&dst](const YAML::Node& n, const std::string& k) { dst = as<double>(n, k); }; };
  auto integer = [](int& dst) -> Setter { return [&dst](const YAML::Node& n, const std::string& k) { dst = as<int>(n, k); }; };
  auto count = [](std::size_t& dst) -> Setter {
    return [&dst](const YAML::Node& n, const std::string& k) {
      const long long v = as<long long>(n, k);
      if (v < 0) throw Error(ErrorKind::Config, "config key '" + k + "' must be >= 0");
      dst = static_cast<std::size_t>(v);
    };
  };
  auto opt = [](std::optional<double>& dst) -> Setter {
    return [&dst](const YAML::Node& n, const std::string& k) { dst = as<double>(n, k); };
  };
  auto center_coord = [&t](bool x) -> Setter {
    return [&t, x](const YAML::Node& n, const std::string& k) {
      Vec2 c = t.ske.center.value_or(Vec2{t.grid.nx / 2.0, t.grid.ny / 2.0});
      (x ? c.x : c.y) = as<double>(n, k);
      t.ske.center = c;
    };
  };

  const std::map<std::string, Setter> setters{
      {"task_mode", [&](const YAML::Node& n, const std::string& k) { t.mode = task_mode_from_string(as<std::string>(n, k)); }},
      {"grid_nx", integer(t.grid.nx)},
      {"grid_ny", integer(t.grid.ny)},
      {"psf_width", num(t.psf.width)},
      {"psf_height", num(t.psf.height)},
      {"lumpy_mean_lumps", num(cfg.lumpy.prior.mean_lumps)},
      {"lumpy_amplitude", num(cfg.lumpy.prior.amplitude)},
      {"lumpy_width", num(cfg.lumpy.prior.width)},
      {"lumpy_fixed_count",
       [&](const YAML::Node& n, const std::string& k) {
         const int v = as<int>(n, k);
         if (v < 0) throw Error(ErrorKind::Config, "lumpy_fixed_count must be >= 0");
         cfg.lumpy.prior.fixed_count = v > 0 ? std::optional<int>(v) : std::nullopt;
       }},
      {"noise_sigma",
       [&](const YAML::Node& n, const std::string& k) {
         t.noise.sigma = as<double>(n, k);
         noise_set = true;
       }},
      {"signal_amplitude",
       [&](const YAML::Node& n, const std::string& k) {
         t.ske.amplitude = as<double>(n, k);
         t.sks.amplitude = t.ske.amplitude;
       }},
      {"signal_width", num(t.ske.width)},
      {"signal_center_x", center_coord(true)},
      {"signal_center_y", center_coord(false)},
      {"sks_center_x_min", num(t.sks.cx.lo)},
      {"sks_center_x_max", num(t.sks.cx.hi)},
      {"sks_center_y_min", num(t.sks.cy.lo)},
      {"sks_center_y_max", num(t.sks.cy.hi)},
      {"sks_w1_min", num(t.sks.w1.lo)},
      {"sks_w1_max", num(t.sks.w1.hi)},
      {"sks_w2_min", num(t.sks.w2.lo)},
      {"sks_w2_max", num(t.sks.w2.hi)},
      {"sks_phi_min", num(t.sks.phi.lo)},
      {"sks_phi_max", num(t.sks.phi.hi)},
      {"proposal_p_move", opt(p_move)},
      {"proposal_p_add", opt(p_add)},
      {"proposal_p_remove", opt(p_remove)},
      {"proposal_move_step", num(move_step)},
      {"proposal_p_relocate", num(p_relocate)},
      {"sampler",
       [&](const YAML::Node& n, const std::string& k) {
         const auto v = as<std::string>(n, k);
         if (v == "conventional") cfg.sampler = SamplerKind::Conventional;
         else if (v == "gan") cfg.sampler = SamplerKind::Gan;
         else throw Error(ErrorKind::Config, "sampler must be conventional or gan");
       }},
      {"generator",
       [&](const YAML::Node& n, const std::string& k) {
         const auto v = as<std::string>(n, k);
         if (v == "file") cfg.generator_source = GeneratorSource::File;
         else if (v == "analytic_lumpy") cfg.generator_source = GeneratorSource::AnalyticLumpy;
         else throw Error(ErrorKind::Config, "generator must be file or analytic_lumpy");
       }},
      {"generator_file", [&](const YAML::Node& n, const std::string& k) { cfg.generator_file = as<std::string>(n, k); }},
      {"n_iter", count(cfg.chain.n_iter)},
      {"burn_in", count(cfg.chain.burn_in)},
      {"thinning", count(cfg.chain.thinning)},
      {"rwmh_step", num(cfg.chain.rwmh_step)},
      {"mala_step", opt(cfg.chain.mala_step)},
      {"n_batches", count(cfg.chain.n_batches)},
      {"latent_refresh", num(cfg.chain.latent_refresh)},
      {"rwmh_block", count(cfg.chain.rwmh_block)},
      {"latent_refresh_block", count(cfg.chain.latent_refresh_block)},
      {"latent_init",
       [&](const YAML::Node& n, const std::string& k) {
         const auto v = as<std::string>(n, k);
         if (v != "zero" && v != "prior") throw Error(ErrorKind::Config, "latent_init must be zero or prior");
         cfg.latent_init_prior = v == "prior";
       }},
      {"n_pairs", integer(cfg.n_pairs)},
      {"paired_backgrounds", [&](const YAML::Node& n, const std::string& k) { cfg.paired_backgrounds = as<bool>(n, k); }},
      {"seed", [&](const YAML::Node& n, const std::string& k) { cfg.seed = as<std::uint64_t>(n, k); }},
      {"threads", integer(cfg.threads)},
      {"output_dir", [&](const YAML::Node& n, const std::string& k) { cfg.output_dir = as<std::string>(n, k); }},
      {"data_dir", [&](const YAML::Node& n, const std::string& k) { cfg.data_dir = as<std::string>(n, k); }},
      {"n_boot", integer(cfg.n_boot)},
      {"ci_level", num(cfg.ci_level)},
  };

  // Center defaults depend on the grid, so grid keys are applied first.
  for (const char* first : {"grid_nx", "grid_ny"}) {
    if (root[first]) setters.at(first)(root[first], first);
  }
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
    if (key == "grid_nx" || key == "grid_ny") continue;
    if (!kv.second.IsScalar()) throw Error(ErrorKind::Config, "config key '" + key + "' must be a scalar");
    it->second(kv.second, key);
  }

  if (!noise_set) t.noise.sigma = t.mode == TaskMode::Sks ? 10.0 : 20.0;
  if (cfg.lumpy.prior.fixed_count) {
    if ((p_add && *p_add != 0.0) || (p_remove && *p_remove != 0.0)) {
      throw Error(ErrorKind::Config, "lumpy_fixed_count excludes add/remove proposals");
    }
    cfg.lumpy.proposal = LumpyProposalCfg::move_only(move_step, p_relocate);
  } else {
    cfg.lumpy.proposal.p_move = p_move.value_or(0.8 - p_relocate);
    cfg.lumpy.proposal.p_relocate = p_relocate;
    cfg.lumpy.proposal.p_add = p_add.value_or(0.1);
    cfg.lumpy.proposal.p_remove = p_remove.value_or(0.1);
    cfg.lumpy.proposal.move_step = move_step;
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

namespace {

nlohmann::ordered_json dataset_keys(const ExperimentConfig& cfg) {
  const auto& t = cfg.task;
  nlohmann::ordered_json j;
  j["task_mode"] = to_string(t.mode);
  j["grid_nx"] = t.grid.nx;
  j["grid_ny"] = t.grid.ny;
  j["psf_width"] = t.psf.width;
  j["psf_height"] = t.psf.height;
  j["lumpy_mean_lumps"] = cfg.lumpy.prior.mean_lumps;
  j["lumpy_amplitude"] = cfg.lumpy.prior.amplitude;
  j["lumpy_width"] = cfg.lumpy.prior.width;
  j["lumpy_fixed_count"] = cfg.lumpy.prior.fixed_count.value_or(0);
  j["noise_sigma"] = t.noise.sigma;
  j["signal_amplitude"] = t.ske.amplitude;
  j["signal_width"] = t.ske.width;
  const Vec2 c = t.ske.center_on(t.grid);
  j["signal_center_x"] = c.x;
  j["signal_center_y"] = c.y;
  j["sks_center_x_min"] = t.sks.cx.lo;
  j["sks_center_x_max"] = t.sks.cx.hi;
  j["sks_center_y_min"] = t.sks.cy.lo;
  j["sks_center_y_max"] = t.sks.cy.hi;
  j["sks_w1_min"] = t.sks.w1.lo;
  j["sks_w1_max"] = t.sks.w1.hi;
  j["sks_w2_min"] = t.sks.w2.lo;
  j["sks_w2_max"] = t.sks.w2.hi;
  j["sks_phi_min"] = t.sks.phi.lo;
  j["sks_phi_max"] = t.sks.phi.hi;
  j["n_pairs"] = cfg.n_pairs;
  j["paired_backgrounds"] = cfg.paired_backgrounds;
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace

std::string dataset_fingerprint(const ExperimentConfig& cfg) { return dataset_keys(cfg).dump(); }

std::string config_to_json(const ExperimentConfig& cfg) {
  auto j = dataset_keys(cfg);
  j["proposal_p_move"] = cfg.lumpy.proposal.p_move;
  j["proposal_p_add"] = cfg.lumpy.proposal.p_add;
  j["proposal_p_remove"] = cfg.lumpy.proposal.p_remove;
  j["proposal_move_step"] = cfg.lumpy.proposal.move_step;
  j["proposal_p_relocate"] = cfg.lumpy.proposal.p_relocate;
  j["sampler"] = to_string(cfg.sampler);
  j["generator"] = to_string(cfg.generator_source);
  j["generator_file"] = cfg.generator_file.string();
  j["n_iter"] = cfg.chain.n_iter;
  j["burn_in"] = cfg.chain.burn_in;
  j["thinning"] = cfg.chain.thinning;
  j["rwmh_step"] = cfg.chain.rwmh_step;
  if (cfg.chain.mala_step) j["mala_step"] = *cfg.chain.mala_step;
  j["n_batches"] = cfg.chain.n_batches;
  j["latent_refresh"] = cfg.chain.latent_refresh;
  j["rwmh_block"] = cfg.chain.rwmh_block;
  j["latent_refresh_block"] = cfg.chain.latent_refresh_block;
  j["latent_init"] = cfg.latent_init_prior ? "prior" : "zero";
  j["threads"] = cfg.threads;
  j["output_dir"] = cfg.output_dir.string();
  j["data_dir"] = cfg.dataset_dir().string();
  j["n_boot"] = cfg.n_boot;
  j["ci_level"] = cfg.ci_level;
  return j.dump(2);
}

}  // namespace idealobs
