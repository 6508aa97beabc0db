#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mfrnn/gradient.hpp"
#include "mfrnn/rng.hpp"
#include "mfrnn/sequence.hpp"
#include "mfrnn/snapshot.hpp"
#include "mfrnn/truncation.hpp"
#include "mfrnn/weights.hpp"

namespace mfrnn {

// Entrywise normal law, stated explicitly as {mean, variance}.
struct InitLaw {
  double mean = 0.0;
  double variance = 0.0;
};

struct InitSpec {
  InitLaw xh, hh, hy;
};

// iid draws per entry, one RNG stream per block, entries in row-major order.
inline WeightSet init_weights(const NetConfig& config, const InitSpec& spec,
                              std::uint64_t seed) {
  config.validate();
  for (const InitLaw* law : {&spec.xh, &spec.hh, &spec.hy})
    if (law->variance < 0.0)
      throw ConfigError("init_weights: variance must be >= 0");

  WeightSet w(config);
  CounterRng rxh(seed, 0), rhh(seed, 1), rhy(seed, 2);
  const double sd_xh = std::sqrt(spec.xh.variance);
  const double sd_hh = std::sqrt(spec.hh.variance);
  const double sd_hy = std::sqrt(spec.hy.variance);
  for (int i = 0; i < config.n; ++i)
    for (int j = 0; j < config.d; ++j) w.w_xh(i, j) = rxh.normal(spec.xh.mean, sd_xh);
  for (int i = 0; i < config.n; ++i)
    for (int j = 0; j < config.n; ++j) w.w_hh(i, j) = rhh.normal(spec.hh.mean, sd_hh);
  for (int j = 0; j < config.n; ++j) w.w_hy(j) = rhy.normal(spec.hy.mean, sd_hy);
  return w;
}

struct TrainConfig {
  double beta = 1e-3;
  int steps = 1;
  Scaling scaling = Scaling::Plain;
  int snapshot_every = 0;  // <= 0: only the first and last step
  std::uint64_t seed = 0;
  double R = 1.0;
  int nthreads = 1;

  void validate() const {
    if (!(beta > 0.0)) throw ConfigError("TrainConfig: beta must be > 0");
    if (steps < 1) throw ConfigError("TrainConfig: steps must be >= 1");
    if (!(R > 0.0)) throw ConfigError("TrainConfig: R must be > 0");
  }
};

// Record of the state after `step` Euler steps: loss and gradient norms are
// evaluated at that state, t = step * beta exactly, clamp_count cumulative.
struct StepRecord {
  int step = 0;
  double t = 0.0;
  double loss = 0.0;
  double grad_hy = 0.0;   // l2
  double grad_hh = 0.0;   // Frobenius
  double grad_xh = 0.0;   // Frobenius
  double max_abs_whh = 0.0;
  long clamp_count = 0;
};

struct TrajectoryLog {
  std::vector<StepRecord> records;
  std::vector<std::pair<int, std::string>> snapshot_files;
  std::vector<std::pair<int, WeightSet>> snapshots;  // kept when requested
};

// One Euler step of the truncated flow:
//   W_hy -= beta g_hy;  W_xh -= beta g_xh;
//   W_hh(i,j) -= beta chi_R(W_hh(i,j)) g_hh(i,j)
// The continuous flow cannot cross |w| = R but Euler can; any entry that
// lands outside is clamped to +-R and counted.
inline WeightSet apply_update(const WeightSet& w, const GradientSet& g,
                              const TrainConfig& cfg, long* clamp_count) {
  WeightSet out(w.config);
  out.t = w.t + cfg.beta;
  out.w_hy = w.w_hy - cfg.beta * g.g_hy;
  out.w_xh = w.w_xh - cfg.beta * g.g_xh;
  const Matrix chi = chi_r_matrix(w.w_hh, cfg.R);
  out.w_hh = w.w_hh - cfg.beta * chi.cwiseProduct(g.g_hh);
  for (int j = 0; j < w.config.n; ++j)
    for (int i = 0; i < w.config.n; ++i)
      if (std::abs(out.w_hh(i, j)) > cfg.R && std::abs(w.w_hh(i, j)) <= cfg.R) {
        out.w_hh(i, j) = out.w_hh(i, j) > 0.0 ? cfg.R : -cfg.R;
        if (clamp_count) ++*clamp_count;
      }
  if (!out.all_finite()) throw NumericError("step: non-finite weights");
  return out;
}

inline WeightSet step(const WeightSet& w, const SequenceBatch& batch,
                      const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.R != w.config.R)
    throw ConfigError("step: TrainConfig.R does not match network R");
  const GradientSet g = gradient(w, batch, cfg.scaling, cfg.nthreads);
  return apply_update(w, g, cfg, nullptr);
}

// Empirical risk (1/m) sum 1/2 (F_hat - F*)^2; the doubled MSE used for
// display is derived at report time.
inline double loss(const WeightSet& w, const SequenceBatch& batch,
                   int nthreads = 1) {
  return batch_loss(w, batch, nthreads);
}

struct TrainOptions {
  std::string snapshot_dir;     // empty: do not write snapshot files
  bool keep_snapshots = false;  // keep WeightSets in the log
};

inline std::string snapshot_filename(int step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snap_%08d.mfw1", step);
  return std::string(buf);
}

// Explicit Euler integration of the truncated gradient flow. Deterministic
// given (w0, batch, cfg); records one StepRecord per visited state
// (step = 0..steps) and snapshots every snapshot_every steps plus the final
// state. first_step/prior_clamps support bit-exact resume from a snapshot.
inline TrajectoryLog train(const WeightSet& w0, const SequenceBatch& batch,
                           const TrainConfig& cfg,
                           const TrainOptions& opts = {}, int first_step = 0,
                           long prior_clamps = 0) {
  cfg.validate();
  if (cfg.R != w0.config.R)
    throw ConfigError("train: TrainConfig.R does not match network R");
  if (first_step < 0 || first_step > cfg.steps)
    throw ConfigError("train: first_step out of range");

  TrajectoryLog log;
  WeightSet w = w0;
  w.t = static_cast<double>(first_step) * cfg.beta;
  long clamps = prior_clamps;
  std::string last_snapshot;

  for (int s = first_step; s <= cfg.steps; ++s) {
    EvalResult ev;
    try {
      ev = evaluate(w, batch, cfg.scaling, cfg.nthreads);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " at step " + std::to_string(s),
                         last_snapshot);
    }
    StepRecord rec;
    rec.step = s;
    rec.t = static_cast<double>(s) * cfg.beta;
    rec.loss = ev.loss;
    rec.grad_hy = ev.grad.g_hy.norm();
    rec.grad_hh = ev.grad.g_hh.norm();
    rec.grad_xh = ev.grad.g_xh.norm();
    rec.max_abs_whh = w.max_abs_hh();
    rec.clamp_count = clamps;
    log.records.push_back(rec);

    const bool want_snapshot =
        s == cfg.steps || (cfg.snapshot_every > 0 && s % cfg.snapshot_every == 0);
    if (want_snapshot) {
      w.t = rec.t;
      if (!opts.snapshot_dir.empty()) {
        const std::string path = opts.snapshot_dir + "/" + snapshot_filename(s);
        save_weights(w, path);
        log.snapshot_files.emplace_back(s, path);
        last_snapshot = path;
      }
      if (opts.keep_snapshots) log.snapshots.emplace_back(s, w);
    }

    if (s < cfg.steps) {
      try {
        w = apply_update(w, ev.grad, cfg, &clamps);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at step " + std::to_string(s),
                           last_snapshot);
      }
      w.t = static_cast<double>(s + 1) * cfg.beta;
    }
  }
  return log;
}

// ---- metrics CSV ------------------------------------------------------------

inline void save_metrics(const TrajectoryLog& log, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("save_metrics: cannot open " + path);
  os << "step,t,loss,loss_x2,grad_hy,grad_hh,grad_xh,max_abs_whh,clamp_count\n";
  for (const auto& r : log.records)
    os << r.step << ',' << format_double(r.t) << ',' << format_double(r.loss)
       << ',' << format_double(2.0 * r.loss) << ',' << format_double(r.grad_hy)
       << ',' << format_double(r.grad_hh) << ',' << format_double(r.grad_xh)
       << ',' << format_double(r.max_abs_whh) << ',' << r.clamp_count << '\n';
  if (!os) throw IoError("save_metrics: write failed " + path);
}

inline std::vector<StepRecord> load_metrics(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("load_metrics: cannot open " + path);
  std::string line;
  std::getline(is, line);
  if (line != "step,t,loss,loss_x2,grad_hy,grad_hh,grad_xh,max_abs_whh,clamp_count")
    throw IoError("load_metrics: unexpected header in " + path);
  std::vector<StepRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    StepRecord r;
    std::getline(ss, tok, ',');
    r.step = std::stoi(tok);
    std::getline(ss, tok, ',');
    r.t = std::strtod(tok.c_str(), nullptr);
    std::getline(ss, tok, ',');
    r.loss = std::strtod(tok.c_str(), nullptr);
    std::getline(ss, tok, ',');  // loss_x2, derived
    std::getline(ss, tok, ',');
    r.grad_hy = std::strtod(tok.c_str(), nullptr);
    std::getline(ss, tok, ',');
    r.grad_hh = std::strtod(tok.c_str(), nullptr);
    std::getline(ss, tok, ',');
    r.grad_xh = std::strtod(tok.c_str(), nullptr);
    std::getline(ss, tok, ',');
    r.max_abs_whh = std::strtod(tok.c_str(), nullptr);
    std::getline(ss, tok, ',');
    r.clamp_count = std::stol(tok);
    out.push_back(r);
  }
  return out;
}

}  // namespace mfrnn
