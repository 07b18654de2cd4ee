// Command-line entry point: dataset generation, IO estimation runs, ROC analysis and
// generator validation.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "idealobs/config.hpp"
#include "idealobs/errors.hpp"
#include "idealobs/experiment.hpp"
#include "idealobs/generator.hpp"

namespace {

using namespace idealobs;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
};

ExperimentConfig resolve(const CommonFlags& flags) {
  ExperimentConfig cfg = flags.config.empty() ? parse_config("") : load_config(flags.config);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.threads) cfg.threads = *flags.threads;
  if (flags.out) cfg.output_dir = *flags.out;
  return cfg;
}

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_threads) {
  cmd->add_option("--config", flags.config, "Experiment config (flat YAML key: value)");
  cmd->add_option("--seed", flags.seed, "Master seed (overrides config)");
  cmd->add_option("--out", flags.out, "Output directory (overrides config)");
  if (with_threads) cmd->add_option("--threads", flags.threads, "Worker threads (overrides config)");
}

int cmd_gen_data(const CommonFlags& flags) {
  const ExperimentConfig cfg = resolve(flags);
  const Dataset ds = generate_dataset(cfg);
  std::cout << "wrote " << ds.rows.size() << " images to " << ds.dir.string() << '\n';
  return 0;
}

int cmd_run(const CommonFlags& flags, bool force) {
  const ExperimentConfig cfg = resolve(flags);
  const ExperimentReport report = run_experiment(cfg, force);
  std::cout << "chains: " << report.scores.size() << " ok, " << report.failures.size() << " failed\n";
  std::cout << "mean acceptance rate: " << report.mean_acceptance_rate << '\n';
  if (report.roc) {
    std::cout << "AUC " << report.roc->auc << " [" << report.roc->ci.lo << ", " << report.roc->ci.hi << "] ("
              << cfg.ci_level * 100 << "% bootstrap)\n";
  }
  for (const auto& f : report.failures) std::cerr << "chain failed: " << f << '\n';
  return report.failures.empty() ? 0 : exit_code(ErrorKind::Evaluation);
}

int cmd_roc(const std::string& scores, const std::string& out, int n_boot, double level, std::uint64_t seed) {
  const auto rows = read_scores_csv(scores);
  const RocSummary s = write_roc_outputs(rows, out, n_boot, level, seed);
  std::cout << "AUC " << s.auc << " [" << s.ci.lo << ", " << s.ci.hi << "] n_h1=" << s.n_h1 << " n_h0=" << s.n_h0
            << '\n';
  return 0;
}

int cmd_validate(const std::string& path, const std::string& check_csv, std::size_t cases, std::uint64_t seed) {
  const auto gen = load_generator(path);
  std::cout << "loaded " << gen->provenance() << ": latent_dim=" << gen->latent().dim << " ("
            << to_string(gen->latent().kind) << "), output " << gen->grid().ny << "x" << gen->grid().nx << ", "
            << gen->layers().size() << " layers\n";
  auto rng = SeedSpec{seed}.stream("validate-generator", 0);
  bool ok = true;
  const GradientCheckReport grad = check_vjp(*gen, cases, rng);
  const bool grad_ok = grad.max_rel_err < 1e-4;
  ok = ok && grad_ok;
  std::cout << (grad_ok ? "PASS" : "FAIL") << " vjp vs central differences: max rel err " << grad.max_rel_err
            << " over " << grad.cases << " cases\n";
  if (!check_csv.empty()) {
    const auto checks = read_forward_checks(check_csv, gen->latent().dim, gen->grid().size());
    const double diff = max_forward_diff(*gen, checks);
    const bool fwd_ok = diff < 1e-5;
    ok = ok && fwd_ok;
    std::cout << (fwd_ok ? "PASS" : "FAIL") << " forward agreement: max abs diff " << diff << " over "
              << checks.size() << " vectors\n";
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ideal-observer likelihood-ratio estimation by MCMC"};
  app.require_subcommand(1);

  CommonFlags gen_flags;
  auto* gen = app.add_subcommand("gen-data", "Generate signal-absent/signal-present image pairs");
  add_common(gen, gen_flags, false);

  CommonFlags run_flags;
  bool force = false;
  auto* run = app.add_subcommand("run", "Estimate per-image log likelihood ratios and the ROC");
  add_common(run, run_flags, true);
  run->add_flag("--force", force, "Overwrite existing scores in the output directory");

  std::string scores;
  std::string roc_out = ".";
  int n_boot = 2000;
  double level = 0.95;
  std::uint64_t roc_seed = 1;
  auto* roc = app.add_subcommand("roc", "Empirical ROC, AUC and bootstrap CI from a scores CSV");
  roc->add_option("--scores", scores, "Scores CSV")->required();
  roc->add_option("--out", roc_out, "Output directory");
  roc->add_option("--n-boot", n_boot, "Bootstrap replicates");
  roc->add_option("--level", level, "Confidence level");
  roc->add_option("--seed", roc_seed, "Bootstrap seed");

  std::string generator;
  std::string check_csv;
  std::size_t cases = 10;
  std::uint64_t val_seed = 1;
  auto* val = app.add_subcommand("validate-generator", "Load a network file and check forward/vjp");
  val->add_option("--generator", generator, "Network header file")->required();
  val->add_option("--check-csv", check_csv, "Shared forward-check vectors");
  val->add_option("--cases", cases, "Random gradient-check cases");
  val->add_option("--seed", val_seed, "Seed for the gradient check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_data(gen_flags);
    if (*run) return cmd_run(run_flags, force);
    if (*roc) return cmd_roc(scores, roc_out, n_boot, level, roc_seed);
    if (*val) return cmd_validate(generator, check_csv, cases, val_seed);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
