#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mfrnn/trainer.hpp"
#include "test_util.hpp"

using namespace mfrnn;
using testutil::random_labeled_batch;
using testutil::random_weights;

TEST_CASE("init_weights: degenerate laws and validation") {
  const NetConfig cfg = make_net_config(6, 2, 3, 1.0);
  InitSpec zero;  // all means 0, variances 0
  const WeightSet w = init_weights(cfg, zero, 7);
  CHECK(w.w_xh.cwiseAbs().maxCoeff() == 0.0);
  CHECK(w.w_hh.cwiseAbs().maxCoeff() == 0.0);
  CHECK(w.w_hy.cwiseAbs().maxCoeff() == 0.0);
  CHECK(w.t == 0.0);

  InitSpec shifted;
  shifted.xh = {1.5, 0.0};
  const WeightSet ws = init_weights(cfg, shifted, 7);
  CHECK((ws.w_xh.array() == 1.5).all());

  InitSpec bad;
  bad.hh = {0.0, -1.0};
  CHECK_THROWS_AS(init_weights(cfg, bad, 7), ConfigError);
}

TEST_CASE("init_weights: teacher and student laws have the right moments") {
  // teacher block: xh ~ N(1,1), hh ~ N(0, nt^-2), hy ~ N(0, nt^-2)
  const int nt = 15;
  const NetConfig tc = make_net_config(nt, 1, 10, 2.0);
  InitSpec teacher;
  teacher.xh = {1.0, 1.0};
  teacher.hh = {0.0, 1.0 / (nt * nt)};
  teacher.hy = {0.0, 1.0 / (nt * nt)};
  const WeightSet t = init_weights(tc, teacher, 3);
  CHECK(std::abs(t.w_hh.mean()) < 5.0 / (nt * std::sqrt(static_cast<double>(nt * nt))));
  CHECK(t.w_hh.cwiseAbs().maxCoeff() < 6.0 / nt);

  // student block: xh ~ N(0,5), hh ~ N(0, 10 ns^-2), hy ~ N(0, 10 ns^-2)
  const int ns = 200;
  const NetConfig sc = make_net_config(ns, 1, 10, 2.0);
  InitSpec student;
  student.xh = {0.0, 5.0};
  student.hh = {0.0, 10.0 / (static_cast<double>(ns) * ns)};
  student.hy = {0.0, 10.0 / (static_cast<double>(ns) * ns)};
  const WeightSet s = init_weights(sc, student, 4);
  const double var_xh = s.w_xh.array().square().mean();
  CHECK(var_xh == Catch::Approx(5.0).epsilon(0.25));
  const double var_hh = s.w_hh.array().square().mean();
  CHECK(var_hh == Catch::Approx(10.0 / (static_cast<double>(ns) * ns)).epsilon(0.1));

  const WeightSet s2 = init_weights(sc, student, 4);
  CHECK((s2.w_hh.array() == s.w_hh.array()).all());  // determinism
  const WeightSet s3 = init_weights(sc, student, 5);
  CHECK(s3.w_hh(0, 0) != s.w_hh(0, 0));
}

TEST_CASE("step: fixed point at zero gradient, time advances") {
  const WeightSet w = random_weights(4, 1, 2, 4.0, 1);
  MapSpec spec;
  SequenceBatch b = sample_batch(spec, 8, 2, 2);
  b = label_with_teacher(b, w);  // interpolation: gradient is exactly zero
  TrainConfig cfg;
  cfg.beta = 0.1;
  cfg.R = 4.0;
  const WeightSet w2 = step(w, b, cfg);
  CHECK((w2.w_hh.array() == w.w_hh.array()).all());
  CHECK((w2.w_xh.array() == w.w_xh.array()).all());
  CHECK((w2.w_hy.array() == w.w_hy.array()).all());
  CHECK(w2.t == Catch::Approx(w.t + 0.1));
}

TEST_CASE("step: scalar hand case") {
  WeightSet w(make_net_config(1, 1, 0, 1.0));
  w.w_xh(0, 0) = 1.0;
  w.w_hy(0) = 1.0;
  MapSpec spec;
  SequenceBatch b = sample_batch(spec, 1, 0, 3);
  b.per_time[0](0, 0) = 0.5;
  b.targets = Vector::Zero(1);
  b.labeled = true;

  TrainConfig cfg;
  cfg.beta = 0.1;
  cfg.scaling = Scaling::Plain;
  cfg.R = 1.0;
  const WeightSet w2 = step(w, b, cfg);
  const double th = std::tanh(0.5);
  CHECK(w2.w_hy(0) == Catch::Approx(1.0 - 0.1 * th * th).margin(1e-12));
  CHECK(w2.w_hy(0) == Catch::Approx(0.97864).margin(1e-4));
}

TEST_CASE("step: entries at or beyond the band edge are frozen") {
  WeightSet w = random_weights(3, 1, 1, 0.5, 5);
  w.w_hh(1, 2) = 0.5;   // exactly R
  w.w_hh(2, 0) = -0.7;  // beyond R
  const SequenceBatch b = random_labeled_batch(w, 8, 6);
  TrainConfig cfg;
  cfg.beta = 0.05;
  cfg.R = 0.5;
  const WeightSet w2 = step(w, b, cfg);
  CHECK(w2.w_hh(1, 2) == 0.5);
  CHECK(w2.w_hh(2, 0) == -0.7);
}

TEST_CASE("loss: definition and independent recomputation") {
  const WeightSet w = random_weights(5, 1, 2, 4.0, 7);
  MapSpec spec;
  SequenceBatch b = sample_batch(spec, 9, 2, 8);
  b = label_with_teacher(b, w);
  CHECK(loss(w, b) == 0.0);  // F_hat == F*

  // constant offset c on every target -> loss c^2/2
  SequenceBatch shifted = b;
  shifted.targets.array() += 0.3;
  CHECK(loss(w, shifted) == Catch::Approx(0.5 * 0.3 * 0.3).margin(1e-14));

  // two-line reference computation
  SequenceBatch random_b = random_labeled_batch(w, 9, 9);
  double acc = 0.0;
  for (int i = 0; i < 9; ++i) {
    const double df = forward(w, random_b.sequence(i)).output - random_b.targets(i);
    acc += 0.5 * df * df;
  }
  CHECK(loss(w, random_b) == Catch::Approx(acc / 9.0).margin(1e-14));
}

TEST_CASE("train: interpolating student stays at the global minimum") {
  const WeightSet w = random_weights(4, 1, 2, 4.0, 11);
  MapSpec spec;
  SequenceBatch b = sample_batch(spec, 16, 2, 12);
  b = label_with_teacher(b, w);
  TrainConfig cfg;
  cfg.beta = 0.05;
  cfg.steps = 10;
  cfg.R = 4.0;
  const TrajectoryLog log = train(w, b, cfg);
  REQUIRE(log.records.size() == 11);
  for (const auto& r : log.records) {
    CHECK(r.loss == 0.0);
    CHECK(r.t == r.step * cfg.beta);
  }
}

TEST_CASE("train: deterministic, exact time bookkeeping, snapshots") {
  testutil::TempDir tmp("train");
  const WeightSet w0 = random_weights(6, 1, 3, 6.0, 13, 0.4);
  const SequenceBatch b = random_labeled_batch(w0, 32, 14);
  TrainConfig cfg;
  cfg.beta = 3e-3;
  cfg.steps = 20;
  cfg.snapshot_every = 8;
  cfg.R = 6.0;
  TrainOptions opts;
  opts.snapshot_dir = tmp.str();
  opts.keep_snapshots = true;

  const TrajectoryLog a = train(w0, b, cfg, opts);
  const TrajectoryLog c = train(w0, b, cfg, opts);
  REQUIRE(a.records.size() == c.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].loss == c.records[i].loss);
    CHECK(a.records[i].grad_hh == c.records[i].grad_hh);
    CHECK(a.records[i].t == a.records[i].step * cfg.beta);
  }
  // snapshot steps: 0, 8, 16 and the final 20
  REQUIRE(a.snapshots.size() == 4);
  CHECK(a.snapshots[0].first == 0);
  CHECK(a.snapshots[3].first == 20);
  CHECK(a.snapshots[3].second.t == 20 * cfg.beta);

  // loss decreased on this random instance
  CHECK(a.records.back().loss < a.records.front().loss);
}

TEST_CASE("train: resume from a snapshot reproduces the run bit-exactly") {
  testutil::TempDir tmp("resume");
  const WeightSet w0 = random_weights(5, 1, 2, 6.0, 15, 0.4);
  const SequenceBatch b = random_labeled_batch(w0, 24, 16);
  TrainConfig cfg;
  cfg.beta = 0.01;
  cfg.steps = 12;
  cfg.snapshot_every = 4;
  cfg.R = 6.0;
  TrainOptions opts;
  opts.snapshot_dir = tmp.str() + "";
  opts.keep_snapshots = true;

  const TrajectoryLog full = train(w0, b, cfg, opts);
  // resume from the snapshot at step 8
  const WeightSet w8 = load_weights(tmp.str() + "/" + snapshot_filename(8));
  long clamps8 = 0;
  for (const auto& r : full.records)
    if (r.step == 8) clamps8 = r.clamp_count;
  TrainOptions opts2;
  opts2.keep_snapshots = true;
  const TrajectoryLog tail = train(w8, b, cfg, opts2, 8, clamps8);

  REQUIRE(tail.records.size() == 5);  // steps 8..12
  for (const auto& r : tail.records) {
    const auto& ref = full.records[static_cast<size_t>(r.step)];
    CHECK(r.loss == ref.loss);
    CHECK(r.grad_hy == ref.grad_hy);
    CHECK(r.clamp_count == ref.clamp_count);
  }
  const WeightSet& final_full = full.snapshots.back().second;
  const WeightSet& final_tail = tail.snapshots.back().second;
  CHECK((final_full.w_hh.array() == final_tail.w_hh.array()).all());
  CHECK((final_full.w_xh.array() == final_tail.w_xh.array()).all());
  CHECK((final_full.w_hy.array() == final_tail.w_hy.array()).all());
}

TEST_CASE("train: truncation invariant with an active band") {
  // Large beta and tiny R force band crossings; the invariant must hold and
  // the clamp counter must record any Euler jumps.
  WeightSet w0 = random_weights(8, 1, 3, 0.05, 21, 0.4);
  w0.w_hh *= 0.05;  // admissible: max|W_hh(0)| < R
  REQUIRE(w0.max_abs_hh() <= 0.05);
  const SequenceBatch b = random_labeled_batch(w0, 64, 22);
  TrainConfig cfg;
  cfg.beta = 0.4;
  cfg.steps = 300;
  cfg.scaling = Scaling::MeanField;
  cfg.R = 0.05;
  TrainOptions opts;
  opts.keep_snapshots = true;
  const TrajectoryLog log = train(w0, b, cfg, opts);
  double band_max = 0.0;
  for (const auto& r : log.records) {
    CHECK(r.max_abs_whh <= 0.05 + 1e-15);
    band_max = std::max(band_max, r.max_abs_whh);
  }
  CHECK(band_max > 0.025);  // the transition band was actually reached
  CHECK(log.records.back().clamp_count >= 0);
}

TEST_CASE("train: descent property at small step size") {
  InitSpec teacher{{1.0, 1.0}, {0.0, 1.0 / 225.0}, {0.0, 1.0 / 225.0}};
  const WeightSet t = init_weights(make_net_config(15, 1, 10, 2.0), teacher, 31);
  const int ns = 64;
  InitSpec student{{0.0, 5.0},
                   {0.0, 10.0 / (static_cast<double>(ns) * ns)},
                   {0.0, 10.0 / (static_cast<double>(ns) * ns)}};
  const WeightSet w0 = init_weights(make_net_config(ns, 1, 10, 2.0), student, 32);
  MapSpec spec;
  SequenceBatch b = sample_batch(spec, 256, 10, 33);
  b = label_with_teacher(b, t);

  TrainConfig cfg;
  cfg.beta = 1e-4;
  cfg.steps = 200;
  cfg.scaling = Scaling::Plain;
  cfg.R = 2.0;
  cfg.nthreads = 2;
  const TrajectoryLog log = train(w0, b, cfg);
  for (size_t i = 1; i < log.records.size(); ++i)
    CHECK(log.records[i].loss <=
          log.records[i - 1].loss * (1.0 + 1e-9));
}

TEST_CASE("train and step: validation") {
  const WeightSet w = random_weights(3, 1, 1, 2.0, 41);
  const SequenceBatch b = random_labeled_batch(w, 8, 42);
  TrainConfig cfg;
  cfg.steps = 0;
  cfg.R = 2.0;
  CHECK_THROWS_AS(train(w, b, cfg), ConfigError);
  cfg.steps = 1;
  cfg.beta = -0.5;
  CHECK_THROWS_AS(train(w, b, cfg), ConfigError);
  cfg.beta = 0.1;
  cfg.R = 7.0;  // mismatch with network R
  CHECK_THROWS_AS(step(w, b, cfg), ConfigError);
}

TEST_CASE("metrics CSV: round trip") {
  testutil::TempDir tmp("metrics");
  const WeightSet w0 = random_weights(4, 1, 2, 6.0, 51, 0.4);
  const SequenceBatch b = random_labeled_batch(w0, 16, 52);
  TrainConfig cfg;
  cfg.beta = 0.01;
  cfg.steps = 5;
  cfg.R = 6.0;
  const TrajectoryLog log = train(w0, b, cfg);
  const std::string path = tmp.str() + "/metrics.csv";
  save_metrics(log, path);
  const auto recs = load_metrics(path);
  REQUIRE(recs.size() == log.records.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    CHECK(recs[i].step == log.records[i].step);
    CHECK(recs[i].loss == log.records[i].loss);
    CHECK(recs[i].grad_xh == log.records[i].grad_xh);
    CHECK(recs[i].max_abs_whh == log.records[i].max_abs_whh);
  }
}
