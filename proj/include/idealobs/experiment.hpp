#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "idealobs/config.hpp"
#include "idealobs/roc.hpp"
#include "idealobs/signal.hpp"

namespace idealobs {

struct ManifestRow {
  int image_id = 0;
  int hypothesis = 0;
  std::string file;
  std::string background_stream;
  std::string noise_stream;
  std::string signal_stream;
  std::optional<SignalParams> alpha;
};

struct Dataset {
  std::filesystem::path dir;
  TaskMode mode = TaskMode::Ske;
  std::vector<ManifestRow> rows;
};

/// Draws n_pairs signal-absent/signal-present image pairs into cfg.dataset_dir():
/// IOIMG1 files, manifest.csv and dataset.json (the fingerprint of the generating keys).
Dataset generate_dataset(const ExperimentConfig& cfg);

/// Reads an existing dataset; refuses one generated from different keys or seed.
Dataset load_dataset(const ExperimentConfig& cfg);

/// load_dataset when a dataset exists in cfg.dataset_dir(), generate_dataset otherwise.
Dataset ensure_dataset(const ExperimentConfig& cfg);

struct ScoreRow {
  int image_id = 0;
  int hypothesis = 0;
  double log_lr = 0.0;
  double acceptance_rate = 0.0;
  double std_err = 0.0;
};

void write_scores_csv(const std::vector<ScoreRow>& rows, const std::filesystem::path& path);
std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path);
ScoreSet to_score_set(const std::vector<ScoreRow>& rows);

struct RocSummary {
  double auc = 0.0;
  AucInterval ci;
  std::size_t n_h1 = 0;
  std::size_t n_h0 = 0;
};

/// Writes roc.csv and summary.json into out_dir. `metadata_json` (a JSON object, may be empty)
/// is embedded as the "config" block.
RocSummary write_roc_outputs(const std::vector<ScoreRow>& rows, const std::filesystem::path& out_dir, int n_boot,
                             double level, std::uint64_t seed, const std::string& metadata_json = "",
                             const std::string& extra_json = "");

struct ExperimentReport {
  std::vector<ScoreRow> scores;
  /// "image_id: message" for every chain that failed.
  std::vector<std::string> failures;
  std::optional<RocSummary> roc;
  double mean_acceptance_rate = 0.0;
};

/// Runs one chain per dataset image across cfg.threads workers. Per-image chain streams are
/// derived from (seed, "chain", image_id), so scores do not depend on the thread count.
/// Refuses to run when output_dir already holds scores.csv unless `overwrite` is set.
ExperimentReport run_experiment(const ExperimentConfig& cfg, bool overwrite = false);

}  // namespace idealobs
