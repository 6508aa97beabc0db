#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfrnn/coupling.hpp"
#include "mfrnn/sequence.hpp"
#include "mfrnn/stationarity.hpp"
#include "mfrnn/svg_plot.hpp"
#include "mfrnn/trainer.hpp"

namespace mfrnn {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- experiment configuration ------------------------------------------------
// JSON schema (version 1):
// {
//   "schema": 1,
//   "kind": "optimality" | "width_sweep" | "coupling_rate" | "diagnose",
//   "out": "runs/example",
//   "net":  {"n", "d", "L", "R", "activation"},
//   "init": {"teacher": {"n", "seed", "xh": {"mean","variance"}, "hh": ..., "hy": ...},
//            "student": {"seed", "xh": ..., "hh": ..., "hy": ...}},
//   "data":  {"map", "parameters", "m", "L", "d", "seed", "file"},
//   "train": {"beta", "steps", "scaling", "snapshot_every", "seed"},
//   "couple": {"widths", "seed", "with_replacement"},      (couple runs)
//   "sweep":  {"seeds", "widths"}                          (sweep runs)
// }
// A law may give "variance_over_n2" instead of "variance"; it resolves to
// value / n^2 for the width of the network being initialized, and the echoed
// config always records the explicit {mean, variance} pair.

struct LawSpec {
  double mean = 0.0;
  double value = 0.0;
  bool over_n2 = false;

  InitLaw resolve(int n) const {
    InitLaw law;
    law.mean = mean;
    law.variance = over_n2 ? value / (static_cast<double>(n) * n) : value;
    return law;
  }
};

struct NetBlock {
  int n = 1, d = 1, L = 0;
  double R = 1.0;
  Activation activation = Activation::Tanh;

  NetConfig config() const { return make_net_config(n, d, L, R, activation); }
};

struct TeacherBlock {
  int n = 15;
  std::uint64_t seed = 0;
  LawSpec xh, hh, hy;
};

struct StudentBlock {
  std::uint64_t seed = 0;
  LawSpec xh, hh, hy;
};

struct DataBlock {
  MapSpec::Kind map = MapSpec::Kind::ShiftCircle;
  std::vector<double> parameters{1.0};
  std::string file;  // custom map replay table
  int m = 1;
  int L = 0;
  int d = 1;
  std::uint64_t seed = 0;

  MapSpec spec() const {
    MapSpec s;
    s.kind = map;
    s.d = d;
    s.parameters = parameters;
    s.table_path = file;
    return s;
  }
};

struct TrainBlock {
  double beta = 1e-3;
  int steps = 1;
  Scaling scaling = Scaling::Plain;
  int snapshot_every = 0;
  std::uint64_t seed = 0;
};

struct CoupleBlock {
  std::vector<int> widths;
  std::uint64_t seed = 0;
  bool with_replacement = false;
};

struct SweepBlock {
  std::vector<std::uint64_t> seeds;
  std::vector<int> widths;
};

enum class ExperimentKind { Optimality, WidthSweep, CouplingRate, Diagnose };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Optimality:
      return "optimality";
    case ExperimentKind::WidthSweep:
      return "width_sweep";
    case ExperimentKind::CouplingRate:
      return "coupling_rate";
    case ExperimentKind::Diagnose:
      return "diagnose";
  }
  return "?";
}

inline ExperimentKind parse_kind(const std::string& s) {
  if (s == "optimality") return ExperimentKind::Optimality;
  if (s == "width_sweep") return ExperimentKind::WidthSweep;
  if (s == "coupling_rate") return ExperimentKind::CouplingRate;
  if (s == "diagnose") return ExperimentKind::Diagnose;
  throw ConfigError("unknown experiment kind '" + s + "'");
}

struct ExperimentConfig {
  int schema = 1;
  ExperimentKind kind = ExperimentKind::Optimality;
  std::string out;
  NetBlock net;
  TeacherBlock teacher;
  StudentBlock student;
  DataBlock data;
  TrainBlock train;
  std::optional<CoupleBlock> couple;
  std::optional<SweepBlock> sweep;
};

namespace detail {

inline LawSpec parse_law(const json& j, const std::string& where) {
  LawSpec law;
  law.mean = j.at("mean").get<double>();
  if (j.contains("variance")) {
    law.value = j.at("variance").get<double>();
  } else if (j.contains("variance_over_n2")) {
    law.value = j.at("variance_over_n2").get<double>();
    law.over_n2 = true;
  } else {
    throw ConfigError(where + ": law needs 'variance' or 'variance_over_n2'");
  }
  if (law.value < 0.0) throw ConfigError(where + ": variance must be >= 0");
  return law;
}

inline json law_echo(const LawSpec& law, int n) {
  const InitLaw r = law.resolve(n);
  return json{{"mean", r.mean}, {"variance", r.variance}};
}

}  // namespace detail

inline ExperimentConfig parse_experiment_json(const json& j) {
  ExperimentConfig cfg;
  cfg.schema = j.value("schema", 1);
  if (cfg.schema != 1) throw ConfigError("unsupported config schema");
  cfg.kind = parse_kind(j.value("kind", std::string("optimality")));
  cfg.out = j.value("out", std::string("run"));

  const json& net = j.at("net");
  cfg.net.n = net.at("n").get<int>();
  cfg.net.d = net.value("d", 1);
  cfg.net.L = net.at("L").get<int>();
  cfg.net.R = net.at("R").get<double>();
  cfg.net.activation = parse_activation(net.value("activation", std::string("tanh")));
  cfg.net.config();  // validates

  if (j.contains("init")) {
    const json& init = j.at("init");
    if (init.contains("teacher")) {
      const json& t = init.at("teacher");
      cfg.teacher.n = t.at("n").get<int>();
      cfg.teacher.seed = t.value("seed", std::uint64_t{1});
      cfg.teacher.xh = detail::parse_law(t.at("xh"), "init.teacher.xh");
      cfg.teacher.hh = detail::parse_law(t.at("hh"), "init.teacher.hh");
      cfg.teacher.hy = detail::parse_law(t.at("hy"), "init.teacher.hy");
      if (cfg.teacher.n < 1) throw ConfigError("init.teacher.n must be >= 1");
    }
    if (init.contains("student")) {
      const json& s = init.at("student");
      cfg.student.seed = s.value("seed", std::uint64_t{2});
      cfg.student.xh = detail::parse_law(s.at("xh"), "init.student.xh");
      cfg.student.hh = detail::parse_law(s.at("hh"), "init.student.hh");
      cfg.student.hy = detail::parse_law(s.at("hy"), "init.student.hy");
    }
  }

  const json& data = j.at("data");
  cfg.data.map = parse_map_kind(data.value("map", std::string("shift_circle")));
  cfg.data.parameters = data.value("parameters", std::vector<double>{1.0});
  cfg.data.file = data.value("file", std::string());
  cfg.data.m = data.at("m").get<int>();
  cfg.data.L = data.value("L", cfg.net.L);
  cfg.data.d = data.value("d", cfg.net.d);
  cfg.data.seed = data.value("seed", std::uint64_t{3});
  if (cfg.data.m < 1) throw ConfigError("data.m must be >= 1");
  if (cfg.data.L != cfg.net.L || cfg.data.d != cfg.net.d)
    throw ConfigError("data bandwidth (L, d) must match net");

  const json& tr = j.at("train");
  cfg.train.beta = tr.at("beta").get<double>();
  cfg.train.steps = tr.at("steps").get<int>();
  cfg.train.scaling = parse_scaling(tr.value("scaling", std::string("plain")));
  cfg.train.snapshot_every = tr.value("snapshot_every", 0);
  cfg.train.seed = tr.value("seed", std::uint64_t{2});
  if (!(cfg.train.beta > 0.0)) throw ConfigError("train.beta must be > 0");
  if (cfg.train.steps < 1) throw ConfigError("train.steps must be >= 1");

  if (j.contains("couple")) {
    CoupleBlock c;
    c.widths = j.at("couple").at("widths").get<std::vector<int>>();
    c.seed = j.at("couple").value("seed", std::uint64_t{5});
    c.with_replacement = j.at("couple").value("with_replacement", false);
    if (c.widths.empty()) throw ConfigError("couple.widths must be non-empty");
    if (!std::is_sorted(c.widths.begin(), c.widths.end()))
      throw ConfigError("couple.widths must be ascending");
    for (int n : c.widths)
      if (n < 1 || n > cfg.net.n)
        throw ConfigError("couple.widths must lie in {1..net.n}");
    cfg.couple = c;
  }
  if (j.contains("sweep")) {
    SweepBlock s;
    s.seeds = j.at("sweep").value("seeds", std::vector<std::uint64_t>{});
    s.widths = j.at("sweep").value("widths", std::vector<int>{});
    cfg.sweep = s;
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  try {
    return parse_experiment_json(j);
  } catch (const json::exception& e) {
    throw ConfigError("config field error in " + path + ": " + e.what());
  }
}

// Fully-resolved copy of the configuration actually used, written into every
// output directory.
inline void write_config_echo(const ExperimentConfig& cfg, const fs::path& dir) {
  json j;
  j["schema"] = cfg.schema;
  j["kind"] = to_string(cfg.kind);
  j["out"] = cfg.out;
  j["net"] = {{"n", cfg.net.n},     {"d", cfg.net.d},
              {"L", cfg.net.L},     {"R", cfg.net.R},
              {"activation", to_string(cfg.net.activation)}};
  j["init"]["teacher"] = {{"n", cfg.teacher.n},
                          {"seed", cfg.teacher.seed},
                          {"xh", detail::law_echo(cfg.teacher.xh, cfg.teacher.n)},
                          {"hh", detail::law_echo(cfg.teacher.hh, cfg.teacher.n)},
                          {"hy", detail::law_echo(cfg.teacher.hy, cfg.teacher.n)}};
  j["init"]["student"] = {{"seed", cfg.student.seed},
                          {"xh", detail::law_echo(cfg.student.xh, cfg.net.n)},
                          {"hh", detail::law_echo(cfg.student.hh, cfg.net.n)},
                          {"hy", detail::law_echo(cfg.student.hy, cfg.net.n)}};
  j["data"] = {{"map", to_string(cfg.data.map)},
               {"parameters", cfg.data.parameters},
               {"file", cfg.data.file},
               {"m", cfg.data.m},
               {"L", cfg.data.L},
               {"d", cfg.data.d},
               {"seed", cfg.data.seed},
               {"rng", CounterRng::kAlgorithmTag}};
  j["train"] = {{"beta", cfg.train.beta},
                {"steps", cfg.train.steps},
                {"scaling", to_string(cfg.train.scaling)},
                {"snapshot_every", cfg.train.snapshot_every},
                {"seed", cfg.train.seed}};
  if (cfg.couple)
    j["couple"] = {{"widths", cfg.couple->widths},
                   {"seed", cfg.couple->seed},
                   {"with_replacement", cfg.couple->with_replacement}};
  if (cfg.sweep)
    j["sweep"] = {{"seeds", cfg.sweep->seeds}, {"widths", cfg.sweep->widths}};
  std::ofstream os(dir / "config.echo.json", std::ios::trunc);
  if (!os) throw IoError("cannot write config echo in " + dir.string());
  os << j.dump(2) << '\n';
}

// ---- pipeline steps ----------------------------------------------------------

inline WeightSet make_teacher(const ExperimentConfig& cfg) {
  NetConfig tc = make_net_config(cfg.teacher.n, cfg.net.d, cfg.net.L, cfg.net.R,
                                 cfg.net.activation);
  InitSpec spec{cfg.teacher.xh.resolve(cfg.teacher.n),
                cfg.teacher.hh.resolve(cfg.teacher.n),
                cfg.teacher.hy.resolve(cfg.teacher.n)};
  return init_weights(tc, spec, cfg.teacher.seed);
}

inline WeightSet make_student(const ExperimentConfig& cfg) {
  InitSpec spec{cfg.student.xh.resolve(cfg.net.n),
                cfg.student.hh.resolve(cfg.net.n),
                cfg.student.hy.resolve(cfg.net.n)};
  return init_weights(cfg.net.config(), spec, cfg.student.seed);
}

// Generates the predictor batch, builds the teacher, labels the batch and
// persists batch.csv / batch.meta.json / teacher.mfw1.
inline void run_gen_data(const ExperimentConfig& cfg, std::ostream& log = std::cout) {
  fs::create_directories(cfg.out);
  SequenceBatch batch = sample_batch(cfg.data.spec(), cfg.data.m, cfg.data.L,
                                     cfg.data.seed);
  const WeightSet teacher = make_teacher(cfg);
  batch = label_with_teacher(batch, teacher);
  save_batch(batch, cfg.out + "/batch.csv", cfg.out + "/batch.meta.json");
  save_weights(teacher, cfg.out + "/teacher.mfw1");
  write_config_echo(cfg, cfg.out);
  log << "gen-data: wrote " << batch.m << " sequences of length "
      << (batch.L + 1) << " (d=" << batch.d << ") to " << cfg.out << "\n";
}

struct TrainRunResult {
  TrajectoryLog log;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

// Trains the student on the labeled batch found in the run directory and
// writes metrics.csv plus MFW1 snapshots. With resume = true, continues
// bit-exactly from the latest snapshot on disk.
inline TrainRunResult run_train(const ExperimentConfig& cfg, int nthreads = 1,
                                bool resume = false,
                                std::ostream& log_os = std::cout) {
  const fs::path dir(cfg.out);
  if (!fs::exists(dir / "batch.csv") || !fs::exists(dir / "batch.meta.json"))
    throw ConfigError("train: data files missing in " + cfg.out +
                      " (run gen-data first)");
  SequenceBatch batch = load_batch((dir / "batch.csv").string(),
                                   (dir / "batch.meta.json").string());
  if (!batch.labeled) throw ConfigError("train: batch is not labeled");

  TrainConfig tc;
  tc.beta = cfg.train.beta;
  tc.steps = cfg.train.steps;
  tc.scaling = cfg.train.scaling;
  tc.snapshot_every = cfg.train.snapshot_every;
  tc.seed = cfg.train.seed;
  tc.R = cfg.net.R;
  tc.nthreads = nthreads;

  fs::create_directories(dir / "snapshots");
  TrainOptions opts;
  opts.snapshot_dir = (dir / "snapshots").string();

  WeightSet w0 = make_student(cfg);
  int first_step = 0;
  long prior_clamps = 0;
  std::vector<StepRecord> prior_records;
  if (resume) {
    int best = -1;
    for (const auto& entry : fs::directory_iterator(dir / "snapshots")) {
      const std::string name = entry.path().filename().string();
      if (name.size() == 18 && name.rfind("snap_", 0) == 0) {
        const int s = std::stoi(name.substr(5, 8));
        if (s <= tc.steps) best = std::max(best, s);
      }
    }
    if (best < 0) throw ConfigError("train --resume: no snapshot found");
    w0 = load_weights((dir / "snapshots" / snapshot_filename(best)).string(),
                      cfg.net.activation);
    first_step = best;
    const auto old = load_metrics((dir / "metrics.csv").string());
    for (const auto& r : old) {
      if (r.step == best) prior_clamps = r.clamp_count;
      if (r.step < best) prior_records.push_back(r);
    }
  }

  TrainRunResult res;
  res.log = train(w0, batch, tc, opts, first_step, prior_clamps);
  if (!prior_records.empty()) {
    prior_records.insert(prior_records.end(), res.log.records.begin(),
                         res.log.records.end());
    res.log.records = std::move(prior_records);
  }
  save_metrics(res.log, (dir / "metrics.csv").string());
  write_config_echo(cfg, dir);
  res.initial_loss = res.log.records.front().loss;
  res.final_loss = res.log.records.back().loss;
  log_os << "train: " << cfg.train.steps << " steps, loss "
         << format_double(res.initial_loss) << " -> "
         << format_double(res.final_loss) << " in " << cfg.out << "\n";
  return res;
}

// Independent full runs (gen-data + train) per sweep entry. Entry seeds shift
// the data / teacher / student seeds so every run draws fresh data, a fresh
// teacher and a fresh initialization. Returns the number of failed runs.
inline int run_sweep(const ExperimentConfig& cfg, int jobs, int nthreads_each = 1,
                     std::ostream& log_os = std::cout) {
  if (!cfg.sweep || (cfg.sweep->seeds.empty() && cfg.sweep->widths.empty()))
    throw ConfigError("sweep: config needs a 'sweep' block with seeds or widths");
  std::vector<std::uint64_t> seeds = cfg.sweep->seeds;
  if (seeds.empty()) seeds.push_back(cfg.train.seed);
  std::vector<int> widths = cfg.sweep->widths;
  if (widths.empty()) widths.push_back(cfg.net.n);

  struct Item {
    std::uint64_t seed;
    int width;
    std::string dir;
  };
  std::vector<Item> items;
  for (std::uint64_t s : seeds)
    for (int n : widths) {
      std::string name = "seed_" + std::to_string(s);
      if (widths.size() > 1) name += "_n" + std::to_string(n);
      items.push_back({s, n, (fs::path(cfg.out) / name).string()});
    }

  fs::create_directories(cfg.out);
  std::vector<std::string> errors(items.size());
  parallel_for_indexed(static_cast<int>(items.size()), jobs, [&](int i) {
    const Item& it = items[static_cast<size_t>(i)];
    try {
      ExperimentConfig sub = cfg;
      sub.out = it.dir;
      sub.net.n = it.width;
      sub.data.seed = cfg.data.seed + it.seed;
      sub.teacher.seed = cfg.teacher.seed + it.seed;
      sub.student.seed = it.seed;
      sub.train.seed = it.seed;
      std::ostringstream sink;
      run_gen_data(sub, sink);
      run_train(sub, nthreads_each, false, sink);
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(i)] = e.what();
    }
  });

  json index;
  index["runs"] = json::array();
  int failed = 0;
  for (size_t i = 0; i < items.size(); ++i) {
    json r{{"seed", items[i].seed},
           {"width", items[i].width},
           {"dir", items[i].dir},
           {"ok", errors[i].empty()}};
    if (!errors[i].empty()) {
      r["error"] = errors[i];
      ++failed;
    }
    index["runs"].push_back(r);
  }
  std::ofstream os(fs::path(cfg.out) / "sweep.index.json", std::ios::trunc);
  os << index.dump(2) << '\n';
  write_config_echo(cfg, cfg.out);
  log_os << "sweep: " << items.size() - static_cast<size_t>(failed) << "/"
         << items.size() << " runs completed under " << cfg.out << "\n";
  return failed;
}

// Coupling-rate experiment: reference + subsampled children on the same data,
// D_tau table and log-log rate fit. Returns the number of failed child runs.
inline int run_couple(const ExperimentConfig& cfg, int jobs,
                      CoupledRun* out_run = nullptr,
                      std::ostream& log_os = std::cout) {
  if (!cfg.couple) throw ConfigError("couple: config needs a 'couple' block");
  fs::create_directories(cfg.out);

  SequenceBatch batch = sample_batch(cfg.data.spec(), cfg.data.m, cfg.data.L,
                                     cfg.data.seed);
  const WeightSet teacher = make_teacher(cfg);
  batch = label_with_teacher(batch, teacher);
  save_batch(batch, cfg.out + "/batch.csv", cfg.out + "/batch.meta.json");
  save_weights(teacher, cfg.out + "/teacher.mfw1");

  const WeightSet reference = make_student(cfg);
  CouplingPlan plan = make_plan(reference, cfg.couple->widths, cfg.couple->seed,
                                cfg.couple->with_replacement);

  TrainConfig tc;
  tc.beta = cfg.train.beta;
  tc.steps = cfg.train.steps;
  tc.scaling = cfg.train.scaling;
  tc.snapshot_every = cfg.train.snapshot_every;
  tc.seed = cfg.train.seed;
  tc.R = cfg.net.R;

  SweepOptions sopts;
  sopts.jobs = jobs;
  CoupledRun run = rate_sweep(plan, batch, tc, sopts);

  save_dtau_csv(run, cfg.out + "/dtau.csv");
  save_coupling_summary(run, cfg.net.n, cfg.out + "/coupling.json");
  {
    TrajectoryLog ref_only;
    ref_only.records = run.ref_log.records;
    save_metrics(ref_only, cfg.out + "/metrics_ref.csv");
  }
  for (size_t i = 0; i < run.widths.size(); ++i) {
    if (!run.table[i].ok) continue;
    const fs::path sub = fs::path(cfg.out) / ("width_" + std::to_string(run.widths[i]));
    fs::create_directories(sub);
    TrajectoryLog child;
    child.records = run.child_logs[i].records;
    save_metrics(child, (sub / "metrics.csv").string());
  }
  write_config_echo(cfg, cfg.out);
  log_os << "couple: " << run.table.size() - run.failed_widths.size() << "/"
         << run.table.size() << " widths, slope " << format_double(run.slope)
         << " in " << cfg.out << "\n";
  if (out_run) *out_run = std::move(run);
  return static_cast<int>(run.failed_widths.size());
}

// Stationarity ladder over the snapshots of a finished training run.
inline std::vector<StationarityReport> run_diagnose(const ExperimentConfig& cfg,
                                                    int nthreads = 1,
                                                    std::ostream& log_os = std::cout) {
  const fs::path dir(cfg.out);
  if (!fs::exists(dir / "batch.csv"))
    throw ConfigError("diagnose: batch.csv missing in " + cfg.out);
  if (!fs::exists(dir / "snapshots"))
    throw ConfigError("diagnose: snapshots/ missing in " + cfg.out);
  SequenceBatch batch = load_batch((dir / "batch.csv").string(),
                                   (dir / "batch.meta.json").string());
  std::vector<std::pair<int, std::string>> files;
  for (const auto& entry : fs::directory_iterator(dir / "snapshots")) {
    const std::string name = entry.path().filename().string();
    if (name.size() == 18 && name.rfind("snap_", 0) == 0)
      files.emplace_back(std::stoi(name.substr(5, 8)), entry.path().string());
  }
  if (files.empty()) throw ConfigError("diagnose: no snapshots in " + cfg.out);
  std::sort(files.begin(), files.end());
  std::vector<WeightSet> snaps;
  snaps.reserve(files.size());
  for (const auto& [s, path] : files)
    snaps.push_back(load_weights(path, cfg.net.activation));
  const auto reports = report_ladder(snaps, batch, nthreads);
  save_stationarity_csv(reports, cfg.net.L, (dir / "stationarity.csv").string());
  write_config_echo(cfg, dir);
  log_os << "diagnose: " << reports.size() << " snapshots against t="
         << format_double(reports.back().t_ref) << " in " << cfg.out << "\n";
  return reports;
}

// ---- report ------------------------------------------------------------------

namespace detail {

inline bool plot_metrics_svg(const fs::path& csv, const fs::path& svg,
                             const std::string& title) {
  if (!fs::exists(csv)) return false;
  const auto recs = load_metrics(csv.string());
  Series s;
  s.label = "MSE (2x loss)";
  for (const auto& r : recs)
    if (r.step >= 1) {
      s.x.push_back(static_cast<double>(r.step));
      s.y.push_back(2.0 * r.loss);
    }
  PlotSpec spec;
  spec.title = title;
  spec.xlabel = "training step";
  spec.ylabel = "empirical MSE";
  spec.logx = true;
  spec.logy = true;
  render_line_chart(spec, {s}, svg.string());
  return true;
}

}  // namespace detail

// Renders SVG figures and a text summary from whatever run artifacts exist in
// the directory (metrics.csv, seed_*/metrics.csv, dtau.csv, stationarity.csv).
inline void run_report(const std::string& run_dir, std::ostream& log_os = std::cout) {
  const fs::path dir(run_dir);
  if (!fs::exists(dir)) throw ConfigError("report: no such directory: " + run_dir);
  std::ostringstream summary;
  bool found = false;

  if (detail::plot_metrics_svg(dir / "metrics.csv", dir / "loss_loglog.svg",
                               "Training loss")) {
    found = true;
    const auto recs = load_metrics((dir / "metrics.csv").string());
    summary << "metrics.csv: " << recs.size() << " records, MSE "
            << format_double(2.0 * recs.front().loss) << " -> "
            << format_double(2.0 * recs.back().loss) << "\n";
  }

  std::vector<fs::path> subdirs;
  if (fs::exists(dir))
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_directory() &&
          entry.path().filename().string().rfind("seed_", 0) == 0)
        subdirs.push_back(entry.path());
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto& sub : subdirs) {
    const std::string name = sub.filename().string();
    if (detail::plot_metrics_svg(sub / "metrics.csv", dir / ("loss_" + name + ".svg"),
                                 "Training loss (" + name + ")")) {
      found = true;
      const auto recs = load_metrics((sub / "metrics.csv").string());
      summary << name << "/metrics.csv: MSE "
              << format_double(2.0 * recs.front().loss) << " -> "
              << format_double(2.0 * recs.back().loss) << "\n";
    }
  }

  if (fs::exists(dir / "dtau.csv")) {
    found = true;
    std::ifstream is((dir / "dtau.csv").string());
    std::string line;
    std::getline(is, line);
    Series s;
    s.label = "D_tau";
    double slope = 0.0;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string tok;
      std::getline(ss, tok, ',');
      const double n = std::strtod(tok.c_str(), nullptr);
      std::getline(ss, tok, ',');
      std::getline(ss, tok, ',');
      const double d = std::strtod(tok.c_str(), nullptr);
      std::getline(ss, tok, ',');
      slope = std::strtod(tok.c_str(), nullptr);
      s.x.push_back(n);
      s.y.push_back(d);
    }
    double intercept = 0.0, r2 = 0.0;
    if (fs::exists(dir / "coupling.json")) {
      std::ifstream js((dir / "coupling.json").string());
      json cj = json::parse(js);
      intercept = cj.value("intercept", 0.0);
      r2 = cj.value("r2", 0.0);
    }
    PlotSpec spec;
    spec.title = "Coupling distance vs width";
    spec.xlabel = "width n";
    spec.ylabel = "D_tau";
    spec.logx = true;
    spec.logy = true;
    // overlay in log10 axes: log10 D = (intercept + slope ln n)/ln 10
    spec.overlay = true;
    spec.overlay_a = intercept / std::log(10.0);
    spec.overlay_b = slope;
    spec.overlay_label = "fit slope " + format_double(slope);
    render_line_chart(spec, {s}, (dir / "dtau_fit.svg").string());
    summary << "dtau.csv: " << s.x.size() << " widths, fitted slope "
            << format_double(slope) << " (r2 " << format_double(r2) << ")\n";
  }

  if (fs::exists(dir / "stationarity.csv")) {
    found = true;
    std::ifstream is((dir / "stationarity.csv").string());
    std::string line;
    std::getline(is, line);
    std::istringstream hs(line);
    std::vector<std::string> cols;
    std::string tok;
    while (std::getline(hs, tok, ',')) cols.push_back(tok);
    std::vector<Series> series(cols.size() - 1);
    for (size_t c = 1; c < cols.size(); ++c) series[c - 1].label = cols[c];
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::getline(ss, tok, ',');
      const double t = std::strtod(tok.c_str(), nullptr);
      for (size_t c = 1; c < cols.size() && std::getline(ss, tok, ','); ++c) {
        series[c - 1].x.push_back(t);
        series[c - 1].y.push_back(std::strtod(tok.c_str(), nullptr));
      }
    }
    PlotSpec spec;
    spec.title = "Stationarity functionals";
    spec.xlabel = "t";
    spec.ylabel = "value";
    spec.logy = true;
    render_line_chart(spec, series, (dir / "stationarity.svg").string());
    summary << "stationarity.csv: " << series.size() << " functionals plotted\n";
  }

  if (!found)
    throw ConfigError(
        "report: nothing to plot in " + run_dir +
        " (expected metrics.csv, seed_*/metrics.csv, dtau.csv or stationarity.csv)");

  std::ofstream os(dir / "summary.txt", std::ios::trunc);
  os << summary.str();
  log_os << summary.str();
}

}  // namespace mfrnn
