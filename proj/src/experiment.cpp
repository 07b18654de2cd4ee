#include "idealobs/experiment.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "idealobs/errors.hpp"
#include "idealobs/estimators.hpp"
#include "idealobs/generator.hpp"
#include "idealobs/image.hpp"
#include "idealobs/lumpy.hpp"

namespace idealobs {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string stream_label(const char* label, int index) { return std::string(label) + ":" + std::to_string(index); }

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::Io, "cannot create directory " + dir.string());
}

constexpr const char* kManifestHeader = "image_id,hypothesis,file,background_stream,noise_stream,signal_stream";
constexpr const char* kAlphaColumns = ",alpha_cx,alpha_cy,alpha_w1,alpha_w2,alpha_phi";

}  // namespace

Dataset generate_dataset(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path dir = cfg.dataset_dir();
  ensure_directory(dir);
  const auto& task = cfg.task;
  const SeedSpec seeds{cfg.seed};
  const bool sks = task.mode == TaskMode::Sks;

  Image ske_signal(task.grid);
  if (!sks) ske_signal = measured_signal_ske(task.ske, task.psf, task.grid);

  Dataset ds{dir, task.mode, {}};
  for (int pair = 0; pair < cfg.n_pairs; ++pair) {
    const int id0 = 2 * pair;
    const int id1 = 2 * pair + 1;

    auto bg_rng0 = seeds.stream("background", static_cast<std::uint64_t>(id0));
    const LumpyParams theta0 = sample_lumpy(cfg.lumpy.prior, task.grid, bg_rng0);
    auto noise_rng0 = seeds.stream("noise", static_cast<std::uint64_t>(id0));
    const Image g0 = sample_measurement(measured_background(theta0, cfg.lumpy.prior, task.psf, task.grid),
                                        task.noise, noise_rng0);

    const int bg_id1 = cfg.paired_backgrounds ? id0 : id1;
    auto bg_rng1 = seeds.stream("background", static_cast<std::uint64_t>(bg_id1));
    const LumpyParams theta1 = sample_lumpy(cfg.lumpy.prior, task.grid, bg_rng1);
    Image mean1 = measured_background(theta1, cfg.lumpy.prior, task.psf, task.grid);
    std::optional<SignalParams> alpha;
    if (sks) {
      auto sig_rng = seeds.stream("signal", static_cast<std::uint64_t>(id1));
      alpha = sample_signal_params(task.sks, sig_rng);
      mean1 += measured_signal_sks(*alpha, task.sks.amplitude, task.psf, task.grid);
    } else {
      mean1 += ske_signal;
    }
    auto noise_rng1 = seeds.stream("noise", static_cast<std::uint64_t>(id1));
    const Image g1 = sample_measurement(mean1, task.noise, noise_rng1);

    ManifestRow r0{id0, 0, "img_" + std::to_string(id0) + ".ioimg", stream_label("background", id0),
                   stream_label("noise", id0), "", std::nullopt};
    ManifestRow r1{id1, 1, "img_" + std::to_string(id1) + ".ioimg", stream_label("background", bg_id1),
                   stream_label("noise", id1), sks ? stream_label("signal", id1) : "", alpha};
    image_write(g0, dir / r0.file);
    image_write(g1, dir / r1.file);
    ds.rows.push_back(std::move(r0));
    ds.rows.push_back(std::move(r1));
  }

  std::ofstream manifest(dir / "manifest.csv", std::ios::trunc);
  if (!manifest) throw Error(ErrorKind::Io, "cannot write manifest in " + dir.string());
  manifest << kManifestHeader << (sks ? kAlphaColumns : "") << '\n';
  for (const auto& r : ds.rows) {
    manifest << r.image_id << ',' << r.hypothesis << ',' << r.file << ',' << r.background_stream << ','
             << r.noise_stream << ',' << r.signal_stream;
    if (sks) {
      if (r.alpha) {
        manifest << ',' << to_csv_row(*r.alpha);
      } else {
        manifest << ",,,,,";
      }
    }
    manifest << '\n';
  }
  std::ofstream meta(dir / "dataset.json", std::ios::trunc);
  meta << dataset_fingerprint(cfg) << '\n';
  if (!manifest || !meta) throw Error(ErrorKind::Io, "failed writing dataset metadata in " + dir.string());
  return ds;
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  const fs::path dir = cfg.dataset_dir();
  std::ifstream meta(dir / "dataset.json");
  if (!meta) throw Error(ErrorKind::Io, "no dataset.json in " + dir.string());
  std::string stored;
  std::getline(meta, stored);
  if (stored != dataset_fingerprint(cfg)) {
    throw Error(ErrorKind::Config, "dataset in " + dir.string() +
                                       " was generated with different settings or seed; refusing to mix");
  }
  std::ifstream manifest(dir / "manifest.csv");
  if (!manifest) throw Error(ErrorKind::Io, "no manifest.csv in " + dir.string());
  std::string line;
  std::getline(manifest, line);
  const bool sks = cfg.task.mode == TaskMode::Sks;
  Dataset ds{dir, cfg.task.mode, {}};
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != (sks ? 11u : 6u)) throw Error(ErrorKind::BadHeader, "malformed manifest row: " + line);
    ManifestRow r;
    r.image_id = std::stoi(f[0]);
    r.hypothesis = std::stoi(f[1]);
    r.file = f[2];
    r.background_stream = f[3];
    r.noise_stream = f[4];
    r.signal_stream = f[5];
    if (sks && !f[6].empty()) {
      r.alpha = signal_from_csv_row(f[6] + "," + f[7] + "," + f[8] + "," + f[9] + "," + f[10]);
    }
    ds.rows.push_back(std::move(r));
  }
  return ds;
}

Dataset ensure_dataset(const ExperimentConfig& cfg) {
  if (fs::exists(cfg.dataset_dir() / "dataset.json")) return load_dataset(cfg);
  return generate_dataset(cfg);
}

void write_scores_csv(const std::vector<ScoreRow>& rows, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "image_id,hypothesis,log_lr,acceptance_rate,std_err\n";
  for (const auto& r : rows) {
    out << r.image_id << ',' << r.hypothesis << ',' << format_double(r.log_lr) << ','
        << format_double(r.acceptance_rate) << ',' << format_double(r.std_err) << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<ScoreRow> read_scores_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("image_id,hypothesis,log_lr", 0) != 0) throw Error(ErrorKind::BadHeader, path.string() + ": not a scores file");
  std::vector<ScoreRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 5) throw Error(ErrorKind::BadHeader, path.string() + ": malformed row '" + line + "'");
    try {
      rows.push_back({std::stoi(f[0]), std::stoi(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4])});
    } catch (const std::exception&) {
      throw Error(ErrorKind::BadHeader, path.string() + ": malformed row '" + line + "'");
    }
  }
  return rows;
}

ScoreSet to_score_set(const std::vector<ScoreRow>& rows) {
  ScoreSet s;
  for (const auto& r : rows) (r.hypothesis ? s.scores_h1 : s.scores_h0).push_back(r.log_lr);
  return s;
}

RocSummary write_roc_outputs(const std::vector<ScoreRow>& rows, const fs::path& out_dir, int n_boot, double level,
                             std::uint64_t seed, const std::string& metadata_json, const std::string& extra_json) {
  ensure_directory(out_dir);
  const ScoreSet s = to_score_set(rows);
  RocSummary summary;
  summary.auc = empirical_auc(s);
  auto rng = SeedSpec{seed}.stream("bootstrap", 0);
  summary.ci = bootstrap_auc_ci(s, n_boot, level, rng);
  summary.n_h1 = s.scores_h1.size();
  summary.n_h0 = s.scores_h0.size();

  std::ofstream roc(out_dir / "roc.csv", std::ios::trunc);
  if (!roc) throw Error(ErrorKind::Io, "cannot write roc.csv in " + out_dir.string());
  roc << "fpf,tpf\n";
  for (const auto& p : roc_points(s)) roc << format_double(p.fpf) << ',' << format_double(p.tpf) << '\n';

  nlohmann::ordered_json j;
  j["auc"] = summary.auc;
  j["ci_lo"] = summary.ci.lo;
  j["ci_hi"] = summary.ci.hi;
  j["ci_level"] = level;
  j["n_boot"] = n_boot;
  j["n_h1"] = summary.n_h1;
  j["n_h0"] = summary.n_h0;
  if (!extra_json.empty()) {
    const auto extra = nlohmann::ordered_json::parse(extra_json);
    for (const auto& [k, v] : extra.items()) j[k] = v;
  }
  if (!metadata_json.empty()) j["config"] = nlohmann::ordered_json::parse(metadata_json);
  std::ofstream out(out_dir / "summary.json", std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out || !roc) throw Error(ErrorKind::Io, "failed writing ROC outputs in " + out_dir.string());
  return summary;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, bool overwrite) {
  cfg.validate();
  ensure_directory(cfg.output_dir);
  const fs::path scores_path = cfg.output_dir / "scores.csv";
  if (fs::exists(scores_path) && !overwrite) {
    throw Error(ErrorKind::Config, scores_path.string() + " already exists; refusing to mix runs (use --force)");
  }
  const Dataset ds = ensure_dataset(cfg);

  std::shared_ptr<const Generator> gen;
  if (cfg.sampler == SamplerKind::Gan) {
    if (cfg.generator_source == GeneratorSource::AnalyticLumpy) {
      gen = analytic_lumpy_generator(*cfg.lumpy.prior.fixed_count, cfg.lumpy.prior, cfg.task.psf, cfg.task.grid);
    } else {
      gen = load_generator(cfg.generator_file);
    }
    require_same_grid(gen->grid(), cfg.task.grid, "generator output");
  }

  const SeedSpec seeds{cfg.seed};
  std::vector<std::optional<ScoreRow>> results(ds.rows.size());
  std::vector<std::string> errors(ds.rows.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < ds.rows.size(); k = next.fetch_add(1)) {
      const auto& row = ds.rows[k];
      try {
        const Image g = image_read(ds.dir / row.file);
        require_same_grid(g.grid(), cfg.task.grid, "dataset image");
        auto rng = seeds.stream("chain", static_cast<std::uint64_t>(row.image_id));
        EstimatorOptions options;
        if (gen && cfg.latent_init_prior) options.latent_init = gen->latent().sample(rng);
        const ChainResult r = cfg.sampler == SamplerKind::Conventional
                                  ? estimate_log_lr_conventional(g, cfg.task, cfg.lumpy, cfg.chain, rng)
                                  : estimate_log_lr_gan(g, cfg.task, *gen, cfg.chain, rng, options);
        results[k] = ScoreRow{row.image_id, row.hypothesis, r.log_lr_estimate, r.acceptance_rate, r.std_err};
      } catch (const std::exception& e) {
        errors[k] = std::to_string(row.image_id) + ": " + e.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(ds.rows.size())));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }

  ExperimentReport report;
  double acc_sum = 0.0;
  for (std::size_t k = 0; k < results.size(); ++k) {
    if (results[k]) {
      report.scores.push_back(*results[k]);
      acc_sum += results[k]->acceptance_rate;
    } else {
      report.failures.push_back(errors[k]);
    }
  }
  if (!report.scores.empty()) report.mean_acceptance_rate = acc_sum / static_cast<double>(report.scores.size());
  write_scores_csv(report.scores, scores_path);
  if (!report.failures.empty()) {
    std::ofstream err(cfg.output_dir / "errors.txt", std::ios::trunc);
    for (const auto& e : report.failures) err << e << '\n';
  }

  const ScoreSet s = to_score_set(report.scores);
  if (!s.scores_h0.empty() && !s.scores_h1.empty()) {
    nlohmann::ordered_json extra;
    double se_sum = 0.0;
    for (const auto& r : report.scores) se_sum += r.std_err;
    extra["mean_acceptance_rate"] = report.mean_acceptance_rate;
    extra["mean_std_err"] = se_sum / static_cast<double>(report.scores.size());
    extra["failed_chains"] = report.failures.size();
    extra["sampler"] = to_string(cfg.sampler);
    extra["generator_provenance"] = gen ? gen->provenance() : "";
    report.roc = write_roc_outputs(report.scores, cfg.output_dir, cfg.n_boot, cfg.ci_level, cfg.seed,
                                   config_to_json(cfg), extra.dump());
  }
  return report;
}

}  // namespace idealobs
