#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfrnn/rng.hpp"
#include "mfrnn/trainer.hpp"
#include "mfrnn/weights.hpp"

namespace mfrnn {

// Gather a width-|S| network from the reference at the given indices:
// rows of W_xh, rows and columns of W_hh, entries of W_hy. Keeps t.
inline WeightSet restrict_to(const WeightSet& ref, const std::vector<int>& idx) {
  const int n = static_cast<int>(idx.size());
  NetConfig cfg = ref.config;
  cfg.n = n;
  WeightSet out(cfg);
  out.t = ref.t;
  for (int i = 0; i < n; ++i) {
    if (idx[static_cast<size_t>(i)] < 0 || idx[static_cast<size_t>(i)] >= ref.config.n)
      throw ConfigError("restrict_to: index out of range");
    out.w_xh.row(i) = ref.w_xh.row(idx[static_cast<size_t>(i)]);
    out.w_hy(i) = ref.w_hy(idx[static_cast<size_t>(i)]);
    for (int j = 0; j < n; ++j)
      out.w_hh(i, j) = ref.w_hh(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  return out;
}

// Neuronal-embedding coupling at initialization: sample n reference indices
// (default: without replacement, stored ascending so n = N_ref is the
// identity) and gather the child weights. The child starts at t = 0.
inline std::pair<WeightSet, std::vector<int>> subsample(
    const WeightSet& reference, int n, std::uint64_t seed,
    bool with_replacement = false) {
  const int N = reference.config.n;
  if (n < 1 || n > N)
    throw ConfigError("subsample: need 1 <= n <= reference width");
  CounterRng rng(seed, static_cast<std::uint64_t>(n));
  std::vector<int> idx;
  idx.reserve(static_cast<size_t>(n));
  if (with_replacement) {
    for (int i = 0; i < n; ++i)
      idx.push_back(static_cast<int>(rng.uniform01() * N));
  } else {
    std::vector<int> all(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) all[static_cast<size_t>(i)] = i;
    for (int i = 0; i < n; ++i) {
      const int j = i + static_cast<int>(rng.uniform01() * (N - i));
      std::swap(all[static_cast<size_t>(i)], all[static_cast<size_t>(j)]);
    }
    idx.assign(all.begin(), all.begin() + n);
    std::sort(idx.begin(), idx.end());
  }
  WeightSet child = restrict_to(reference, idx);
  child.t = 0.0;
  return {std::move(child), std::move(idx)};
}

struct CouplingPlan {
  WeightSet reference;
  std::vector<int> widths;  // ascending
  std::vector<std::vector<int>> index_sets;
  std::uint64_t seed = 0;
  bool with_replacement = false;
};

inline CouplingPlan make_plan(WeightSet reference, std::vector<int> widths,
                              std::uint64_t seed, bool with_replacement = false) {
  CouplingPlan plan;
  plan.reference = std::move(reference);
  plan.widths = std::move(widths);
  plan.seed = seed;
  plan.with_replacement = with_replacement;
  if (plan.widths.empty()) throw ConfigError("coupling: widths must be non-empty");
  if (!std::is_sorted(plan.widths.begin(), plan.widths.end()))
    throw ConfigError("coupling: widths must be ascending");
  for (int n : plan.widths) {
    auto [child, idx] = subsample(plan.reference, n, seed, with_replacement);
    (void)child;
    plan.index_sets.push_back(std::move(idx));
  }
  return plan;
}

// Trajectory distance of the paper's coupling metric over a snapshot grid
// covering (0, tau]:
//   sup_t max( (1/n^2) ||dW_hh||_F, (1/n) ||dW_xh||_F, (1/n) ||dW_hy||_2 )
// Both lists must hold width-n weights on the same step grid (the reference
// side already restricted to the sampled index set).
inline double d_tau(const std::vector<std::pair<int, WeightSet>>& child,
                    const std::vector<std::pair<int, WeightSet>>& ref,
                    double tau) {
  if (child.size() != ref.size())
    throw PreconditionError("d_tau: snapshot grids are misaligned");
  double d = 0.0;
  for (size_t k = 0; k < child.size(); ++k) {
    const auto& [step_c, wc] = child[k];
    const auto& [step_r, wr] = ref[k];
    if (step_c != step_r || wc.t != wr.t)
      throw PreconditionError("d_tau: snapshot grids are misaligned");
    if (wc.config.n != wr.config.n || wc.config.d != wr.config.d)
      throw PreconditionError("d_tau: width mismatch between trajectories");
    if (!(wc.t > 0.0) || wc.t > tau * (1.0 + 1e-12)) continue;
    const double n = wc.config.n;
    const double dhh = (wc.w_hh - wr.w_hh).norm() / (n * n);
    const double dxh = (wc.w_xh - wr.w_xh).norm() / n;
    const double dhy = (wc.w_hy - wr.w_hy).norm() / n;
    d = std::max({d, dhh, dxh, dhy});
  }
  return d;
}

struct DtauRow {
  int n = 0;
  double tau = 0.0;
  double d = 0.0;
  bool ok = false;  // child run completed
};

struct CoupledRun {
  TrajectoryLog ref_log;
  std::vector<int> widths;
  std::vector<TrajectoryLog> child_logs;
  std::vector<DtauRow> table;
  double tau = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int fit_points = 0;
  std::vector<int> failed_widths;
};

// Least-squares line through (log n, log D); rows with D = 0 (the identity
// self-coupling) carry no information about the rate and are skipped.
inline void fit_rate(CoupledRun& run) {
  std::vector<double> xs, ys;
  for (const auto& row : run.table)
    if (row.ok && row.d > 0.0) {
      xs.push_back(std::log(static_cast<double>(row.n)));
      ys.push_back(std::log(row.d));
    }
  run.fit_points = static_cast<int>(xs.size());
  if (xs.size() < 2) {
    run.slope = run.intercept = run.r2 =
        std::numeric_limits<double>::quiet_NaN();
    return;
  }
  const double np = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double denom = np * sxx - sx * sx;
  run.slope = (np * sxy - sx * sy) / denom;
  run.intercept = (sy - run.slope * sx) / np;
  const double ss_tot = syy - sy * sy / np;
  double ss_res = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (run.intercept + run.slope * xs[i]);
    ss_res += e * e;
  }
  run.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
}

struct SweepOptions {
  int jobs = 1;           // concurrent child trainings
  int nthreads_each = 1;  // gradient threads inside each training
};

// Trains the reference and every subsampled child on the same labeled data,
// then measures D_tau of each child against the reference trajectory
// restricted to its index set. Requires mean-field scaling: plain-scaled
// finite trajectories do not track the mean-field flow.
inline CoupledRun rate_sweep(const CouplingPlan& plan, const SequenceBatch& batch,
                             const TrainConfig& cfg, const SweepOptions& opts = {}) {
  if (cfg.scaling != Scaling::MeanField)
    throw PreconditionError("rate_sweep: meanfield scaling required");
  cfg.validate();

  CoupledRun run;
  run.widths = plan.widths;
  run.tau = static_cast<double>(cfg.steps) * cfg.beta;

  TrainOptions topts;
  topts.keep_snapshots = true;
  TrainConfig ref_cfg = cfg;
  ref_cfg.nthreads = std::max(opts.jobs * opts.nthreads_each, opts.nthreads_each);
  run.ref_log = train(plan.reference, batch, ref_cfg, topts);

  const int nw = static_cast<int>(plan.widths.size());
  run.child_logs.resize(static_cast<size_t>(nw));
  run.table.resize(static_cast<size_t>(nw));
  std::vector<std::string> errors(static_cast<size_t>(nw));

  TrainConfig child_cfg = cfg;
  child_cfg.nthreads = opts.nthreads_each;
  parallel_for_indexed(nw, opts.jobs, [&](int i) {
    const int n = plan.widths[static_cast<size_t>(i)];
    DtauRow row;
    row.n = n;
    row.tau = run.tau;
    try {
      WeightSet child = restrict_to(plan.reference, plan.index_sets[static_cast<size_t>(i)]);
      child.t = 0.0;
      TrajectoryLog log = train(child, batch, child_cfg, topts);
      std::vector<std::pair<int, WeightSet>> ref_restricted;
      ref_restricted.reserve(run.ref_log.snapshots.size());
      for (const auto& [s, wr] : run.ref_log.snapshots)
        ref_restricted.emplace_back(
            s, restrict_to(wr, plan.index_sets[static_cast<size_t>(i)]));
      row.d = d_tau(log.snapshots, ref_restricted, run.tau);
      row.ok = true;
      run.child_logs[static_cast<size_t>(i)] = std::move(log);
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(i)] = e.what();
    }
    run.table[static_cast<size_t>(i)] = row;
  });

  for (int i = 0; i < nw; ++i)
    if (!run.table[static_cast<size_t>(i)].ok)
      run.failed_widths.push_back(plan.widths[static_cast<size_t>(i)]);
  fit_rate(run);
  return run;
}

// ---- output files -----------------------------------------------------------

inline void save_dtau_csv(const CoupledRun& run, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("save_dtau_csv: cannot open " + path);
  os << "n,tau,D_tau,slope_fit\n";
  for (const auto& row : run.table)
    if (row.ok)
      os << row.n << ',' << format_double(row.tau) << ',' << format_double(row.d)
         << ',' << format_double(run.slope) << '\n';
  if (!os) throw IoError("save_dtau_csv: write failed " + path);
}

inline void save_coupling_summary(const CoupledRun& run, int n_ref,
                                  const std::string& path) {
  nlohmann::json j;
  j["widths"] = run.widths;
  j["N_ref"] = n_ref;
  j["tau"] = run.tau;
  j["slope"] = run.slope;
  j["intercept"] = run.intercept;
  j["r2"] = run.r2;
  j["fit_points"] = run.fit_points;
  j["failed_widths"] = run.failed_widths;
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("save_coupling_summary: cannot open " + path);
  os << j.dump(2) << '\n';
}

}  // namespace mfrnn
