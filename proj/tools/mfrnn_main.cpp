// mfrnn command-line front end: reproducible experiment pipelines for
// mean-field-scaled Elman RNN training, coupling sweeps and stationarity
// diagnostics. Exit codes: 0 success, 1 configuration error, 2 numeric abort,
// 3 partial sweep.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mfrnn/experiment.hpp"

namespace {

int default_jobs() {
  if (const char* env = std::getenv("MFRNN_JOBS")) {
    const int j = std::atoi(env);
    if (j >= 1) return j;
  }
  return 1;
}

struct CommonOpts {
  std::string config;
  std::string out;
  std::int64_t seed = -1;
  int width = 0;
  int jobs = default_jobs();
};

mfrnn::ExperimentConfig load_with_overrides(const CommonOpts& opts) {
  mfrnn::ExperimentConfig cfg = mfrnn::load_experiment_config(opts.config);
  if (!opts.out.empty()) cfg.out = opts.out;
  if (opts.seed >= 0) {
    cfg.train.seed = static_cast<std::uint64_t>(opts.seed);
    cfg.student.seed = static_cast<std::uint64_t>(opts.seed);
  }
  if (opts.width > 0) cfg.net.n = opts.width;
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_config = true) {
  auto* c = cmd->add_option("--config", opts.config, "experiment config JSON");
  if (needs_config) c->required();
  cmd->add_option("--out", opts.out, "output directory (overrides config)");
  cmd->add_option("--seed", opts.seed, "override train/student seed");
  cmd->add_option("--width", opts.width, "override student width n");
  cmd->add_option("--jobs", opts.jobs, "concurrent runs (default $MFRNN_JOBS or 1)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mean-field Elman RNN trainer and analysis toolkit"};
  app.require_subcommand(1);

  CommonOpts gen_opts, train_opts, sweep_opts, couple_opts, diag_opts;
  bool resume = false;
  std::string report_dir;

  auto* gen = app.add_subcommand("gen-data", "generate and label a predictor batch");
  add_common(gen, gen_opts);
  auto* train = app.add_subcommand("train", "train the student on existing data");
  add_common(train, train_opts);
  train->add_flag("--resume", resume, "continue from the latest snapshot");
  auto* sweep = app.add_subcommand("sweep", "independent train runs over seeds/widths");
  add_common(sweep, sweep_opts);
  auto* couple = app.add_subcommand("couple", "coupling rate sweep over widths");
  add_common(couple, couple_opts);
  auto* diag = app.add_subcommand("diagnose", "stationarity ladder over snapshots");
  add_common(diag, diag_opts);
  auto* report = app.add_subcommand("report", "render SVG plots and a text summary");
  report->add_option("dir", report_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      mfrnn::run_gen_data(load_with_overrides(gen_opts));
    } else if (train->parsed()) {
      auto cfg = load_with_overrides(train_opts);
      mfrnn::run_train(cfg, std::max(1, train_opts.jobs), resume);
    } else if (sweep->parsed()) {
      auto cfg = load_with_overrides(sweep_opts);
      if (mfrnn::run_sweep(cfg, sweep_opts.jobs) > 0) return 3;
    } else if (couple->parsed()) {
      auto cfg = load_with_overrides(couple_opts);
      if (mfrnn::run_couple(cfg, couple_opts.jobs) > 0) return 3;
    } else if (diag->parsed()) {
      auto cfg = load_with_overrides(diag_opts);
      mfrnn::run_diagnose(cfg, std::max(1, diag_opts.jobs));
    } else if (report->parsed()) {
      mfrnn::run_report(report_dir);
    }
  } catch (const mfrnn::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    if (!e.last_snapshot.empty())
      std::cerr << "last valid snapshot: " << e.last_snapshot << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
