#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "mfrnn/sequence.hpp"
#include "test_util.hpp"

using namespace mfrnn;

namespace {

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace

TEST_CASE("iterate_map: shift by one on the circle") {
  MapSpec spec;
  Vector x(1);
  x << 0.0;
  CHECK(iterate_map(spec, x)(0) == 1.0);

  x << kTwoPi - 0.5;
  CHECK(iterate_map(spec, x)(0) == Catch::Approx(0.5).margin(1e-12));

  // long orbits never leave [0, 2*pi)
  x << 0.0;
  for (int k = 0; k < 10000; ++k) {
    x = iterate_map(spec, x);
    REQUIRE(x(0) >= 0.0);
    REQUIRE(x(0) < kTwoPi);
  }
}

TEST_CASE("iterate_map: domain and kind errors") {
  MapSpec spec;
  Vector x(1);
  x << -0.1;
  CHECK_THROWS_AS(iterate_map(spec, x), DomainError);
  x << kTwoPi;
  CHECK_THROWS_AS(iterate_map(spec, x), DomainError);

  MapSpec custom;
  custom.kind = MapSpec::Kind::Custom;
  x << 1.0;
  CHECK_THROWS_AS(iterate_map(custom, x), ConfigError);
}

TEST_CASE("sample_batch: shapes, determinism, dynamical consistency") {
  MapSpec spec;
  const SequenceBatch b = sample_batch(spec, 1 << 13, 10, 42);
  CHECK(b.m == 8192);
  CHECK(static_cast<int>(b.per_time.size()) == 11);
  CHECK(b.per_time[0].rows() == 8192);

  const SequenceBatch b2 = sample_batch(spec, 1 << 13, 10, 42);
  for (int k = 0; k <= 10; ++k)
    REQUIRE((b.per_time[static_cast<size_t>(k)].array() ==
             b2.per_time[static_cast<size_t>(k)].array())
                .all());

  const SequenceBatch b3 = sample_batch(spec, 64, 10, 43);
  bool differs = false;
  for (int i = 0; i < 64 && !differs; ++i)
    differs = b3.per_time[0](i, 0) != b.per_time[0](i, 0);
  CHECK(differs);

  // every consecutive pair satisfies x_{-k+1} = T(x_{-k})
  for (int i = 0; i < 100; ++i)
    for (int k = 0; k < 10; ++k) {
      const Vector cur = b.per_time[static_cast<size_t>(k)].row(i).transpose();
      const Vector nxt = b.per_time[static_cast<size_t>(k + 1)].row(i).transpose();
      CHECK(std::abs(iterate_map(spec, cur)(0) - nxt(0)) < 1e-12);
    }

  for (int k = 0; k <= 10; ++k) {
    CHECK(b.per_time[static_cast<size_t>(k)].minCoeff() >= 0.0);
    CHECK(b.per_time[static_cast<size_t>(k)].maxCoeff() < kTwoPi);
  }
}

TEST_CASE("sample_batch: initial points are uniform on [0, 2*pi)") {
  MapSpec spec;
  const int m = 100000;
  const SequenceBatch b = sample_batch(spec, m, 0, 7);
  const double mean = b.per_time[0].col(0).mean();
  const double sigma = kTwoPi / std::sqrt(12.0);
  const double pi = kTwoPi / 2.0;
  CHECK(std::abs(mean - pi) <= 3.0 * sigma / std::sqrt(static_cast<double>(m)));
}

TEST_CASE("sample_batch: invariance of the measure under T (KS test)") {
  MapSpec spec;
  const int m = 10000;
  const SequenceBatch b = sample_batch(spec, m, 10, 11);
  std::vector<double> first(static_cast<size_t>(m)), last(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    first[static_cast<size_t>(i)] = b.per_time[0](i, 0);  // x_{-L}
    last[static_cast<size_t>(i)] = b.per_time[10](i, 0);  // x_0
  }
  // 1% two-sample critical value: 1.628 sqrt((n+m)/(n m))
  const double crit = 1.628 * std::sqrt(2.0 / static_cast<double>(m));
  CHECK(ks_statistic(first, last) < crit);
}

TEST_CASE("sample_batch: argument validation") {
  MapSpec spec;
  CHECK_THROWS_AS(sample_batch(spec, 0, 3, 1), ConfigError);
  CHECK_THROWS_AS(sample_batch(spec, 4, -1, 1), ConfigError);
}

TEST_CASE("label_with_teacher: zero teacher, bound, scalar case") {
  MapSpec spec;
  SequenceBatch b = sample_batch(spec, 32, 3, 5);

  WeightSet zero(make_net_config(4, 1, 3, 1.0));
  const SequenceBatch lz = label_with_teacher(b, zero);
  CHECK(lz.labeled);
  CHECK(lz.targets.cwiseAbs().maxCoeff() == 0.0);

  const WeightSet teacher = testutil::random_weights(15, 1, 3, 5.0, 3);
  const SequenceBatch lt = label_with_teacher(b, teacher);
  const double bound = teacher.w_hy.cwiseAbs().sum() / 15.0;
  CHECK(lt.targets.cwiseAbs().maxCoeff() <= bound);

  // n=1, L=0 teacher reproduces the forward hand case
  WeightSet t1(make_net_config(1, 1, 0, 1.0));
  t1.w_xh(0, 0) = 1.0;
  t1.w_hy(0) = 2.0;
  SequenceBatch b0 = sample_batch(spec, 4, 0, 6);
  b0.per_time[0](0, 0) = 0.5;
  const SequenceBatch l1 = label_with_teacher(b0, t1);
  CHECK(l1.targets(0) == Catch::Approx(2.0 * std::tanh(0.5)).epsilon(1e-13));

  WeightSet wrongL(make_net_config(2, 1, 1, 1.0));
  CHECK_THROWS_AS(label_with_teacher(b, wrongL), ConfigError);
}

TEST_CASE("batch CSV: value round trip and byte-identical rewrite") {
  testutil::TempDir tmp("batchio");
  MapSpec spec;
  SequenceBatch b = sample_batch(spec, 37, 4, 123);
  const WeightSet teacher = testutil::random_weights(5, 1, 4, 3.0, 8);
  b = label_with_teacher(b, teacher);

  const std::string csv = tmp.str() + "/batch.csv";
  const std::string meta = tmp.str() + "/batch.meta.json";
  save_batch(b, csv, meta);
  const SequenceBatch r = load_batch(csv, meta);
  CHECK(r.m == b.m);
  CHECK(r.L == b.L);
  CHECK(r.seed == b.seed);
  REQUIRE(r.labeled);
  for (int k = 0; k <= b.L; ++k)
    REQUIRE((r.per_time[static_cast<size_t>(k)].array() ==
             b.per_time[static_cast<size_t>(k)].array())
                .all());
  REQUIRE((r.targets.array() == b.targets.array()).all());

  const std::string csv2 = tmp.str() + "/batch2.csv";
  const std::string meta2 = tmp.str() + "/batch2.meta.json";
  save_batch(r, csv2, meta2);
  CHECK(testutil::slurp(csv) == testutil::slurp(csv2));
  CHECK(testutil::slurp(meta) == testutil::slurp(meta2));
}

TEST_CASE("custom map: replay table round trip") {
  testutil::TempDir tmp("replay");
  MapSpec shift;
  SequenceBatch src = sample_batch(shift, 16, 2, 9);
  const std::string csv = tmp.str() + "/table.csv";
  save_batch(src, csv, csv + ".meta.json");

  MapSpec custom;
  custom.kind = MapSpec::Kind::Custom;
  custom.table_path = csv;
  const SequenceBatch replay = sample_batch(custom, 10, 2, 1);
  CHECK(replay.m == 10);
  for (int k = 0; k <= 2; ++k)
    REQUIRE((replay.per_time[static_cast<size_t>(k)].array() ==
             src.per_time[static_cast<size_t>(k)].topRows(10).array())
                .all());

  CHECK_THROWS_AS(sample_batch(custom, 999, 2, 1), ConfigError);  // too many
  MapSpec badL = custom;
  CHECK_THROWS_AS(sample_batch(badL, 4, 3, 1), ConfigError);  // L mismatch
}
