#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfrnn/forward.hpp"
#include "mfrnn/rng.hpp"
#include "mfrnn/weights.hpp"

namespace mfrnn {

constexpr double kTwoPi = 6.28318530717958647692;

// Data-generating map. shift_circle is T(x) = (x + step) mod 2*pi acting
// componentwise on [0, 2*pi)^d; custom replays a table of user-supplied
// iterates from a batch CSV file (no analytic map, domain checks disabled).
struct MapSpec {
  enum class Kind { ShiftCircle, Custom };
  Kind kind = Kind::ShiftCircle;
  int d = 1;
  std::vector<double> parameters{1.0};  // shift_circle: step size
  std::string table_path;               // custom only

  double step() const { return parameters.empty() ? 1.0 : parameters[0]; }
};

inline std::string to_string(MapSpec::Kind k) {
  return k == MapSpec::Kind::ShiftCircle ? "shift_circle" : "custom";
}

inline MapSpec::Kind parse_map_kind(const std::string& s) {
  if (s == "shift_circle") return MapSpec::Kind::ShiftCircle;
  if (s == "custom") return MapSpec::Kind::Custom;
  throw ConfigError("unknown map kind '" + s + "'");
}

// One application of T. For shift_circle the input must lie in [0, 2*pi)^d.
inline Vector iterate_map(const MapSpec& spec, const Vector& x) {
  if (spec.kind == MapSpec::Kind::Custom)
    throw ConfigError("custom maps are replay-only; iterate_map is undefined");
  if (x.size() != spec.d) throw ConfigError("iterate_map: dimension mismatch");
  Vector y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x(i) >= 0.0 && x(i) < kTwoPi))
      throw DomainError("iterate_map: point outside [0, 2*pi)");
    double v = std::fmod(x(i) + spec.step(), kTwoPi);
    if (v < 0.0) v += kTwoPi;
    y(i) = v;
  }
  return y;
}

// m sequences of length L+1, stored time-major: per_time[i] is the m x d
// matrix of x_{-L+i} over all samples (so per_time[L] holds x_0).
struct SequenceBatch {
  int m = 0;
  int L = 0;
  int d = 1;
  std::uint64_t seed = 0;
  MapSpec spec;
  std::vector<Matrix> per_time;  // L+1 entries, each m x d
  Vector targets;                // m entries when labeled
  bool labeled = false;

  // Sample i as an (L+1) x d matrix, rows ordered x_{-L}, ..., x_0.
  Matrix sequence(int i) const {
    Matrix out(L + 1, d);
    for (int k = 0; k <= L; ++k) out.row(k) = per_time[static_cast<size_t>(k)].row(i);
    return out;
  }
};

SequenceBatch load_batch(const std::string& csv_path, const std::string& meta_path);

// Draws x_{-L} uniformly on [0, 2*pi)^d from the per-sample stream
// (seed, sample index) and iterates T forward L times. Custom specs replay
// the first m sequences of the table file instead.
inline SequenceBatch sample_batch(const MapSpec& spec, int m, int L,
                                  std::uint64_t seed) {
  if (m < 1) throw ConfigError("sample_batch: m must be >= 1");
  if (L < 0) throw ConfigError("sample_batch: L must be >= 0");

  if (spec.kind == MapSpec::Kind::Custom) {
    if (spec.table_path.empty())
      throw ConfigError("sample_batch: custom map needs a table file");
    SequenceBatch table = load_batch(spec.table_path, spec.table_path + ".meta.json");
    if (table.L != L || table.d != spec.d)
      throw ConfigError("sample_batch: replay table shape mismatch");
    if (table.m < m)
      throw ConfigError("sample_batch: replay table has fewer than m sequences");
    SequenceBatch out;
    out.m = m;
    out.L = L;
    out.d = spec.d;
    out.seed = seed;
    out.spec = spec;
    out.per_time.reserve(static_cast<size_t>(L + 1));
    for (int k = 0; k <= L; ++k)
      out.per_time.push_back(table.per_time[static_cast<size_t>(k)].topRows(m));
    return out;
  }

  SequenceBatch out;
  out.m = m;
  out.L = L;
  out.d = spec.d;
  out.seed = seed;
  out.spec = spec;
  out.per_time.assign(static_cast<size_t>(L + 1), Matrix(m, spec.d));
  Vector x(spec.d);
  for (int i = 0; i < m; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    for (int c = 0; c < spec.d; ++c) x(c) = rng.uniform(0.0, kTwoPi);
    out.per_time[0].row(i) = x.transpose();
    for (int k = 1; k <= L; ++k) {
      x = iterate_map(spec, x);
      out.per_time[static_cast<size_t>(k)].row(i) = x.transpose();
    }
  }
  return out;
}

// targets(i) = forward(teacher, sequence(i)).output, evaluated in fixed
// 256-sample blocks (deterministic regardless of scheduling).
inline SequenceBatch label_with_teacher(const SequenceBatch& batch,
                                        const WeightSet& teacher) {
  teacher.check_dims();
  if (teacher.config.L != batch.L || teacher.config.d != batch.d)
    throw ConfigError("label_with_teacher: teacher dims do not match batch");
  SequenceBatch out = batch;
  out.targets.resize(batch.m);
  const Matrix whh_t_scaled = teacher.w_hh.transpose() / teacher.config.n;
  constexpr int kBlock = 256;
  BlockTrace tr;
  for (int start = 0; start < batch.m; start += kBlock) {
    const int mb = std::min(kBlock, batch.m - start);
    std::vector<Eigen::Ref<const Matrix>> x_time;
    x_time.reserve(static_cast<size_t>(batch.L + 1));
    for (int k = 0; k <= batch.L; ++k)
      x_time.emplace_back(batch.per_time[static_cast<size_t>(k)].middleRows(start, mb));
    block_forward(teacher, x_time, whh_t_scaled, tr);
    out.targets.segment(start, mb) = tr.outputs;
  }
  if (!out.targets.allFinite())
    throw NumericError("label_with_teacher: non-finite target");
  out.labeled = true;
  return out;
}

// ---- file formats ----------------------------------------------------------
// CSV rows "sample,k,dim,value,target": one row per (sample, position k in
// stored order x_{-L+k}, input dimension). The target column repeats the
// sample's label and is empty for unlabeled batches. Doubles use %.17g, so
// save/load round-trips bit-exactly.

inline void save_batch(const SequenceBatch& b, const std::string& csv_path,
                       const std::string& meta_path) {
  std::ofstream os(csv_path, std::ios::trunc);
  if (!os) throw IoError("save_batch: cannot open " + csv_path);
  os << "sample,k,dim,value,target\n";
  for (int i = 0; i < b.m; ++i) {
    const std::string target = b.labeled ? format_double(b.targets(i)) : std::string();
    for (int k = 0; k <= b.L; ++k)
      for (int c = 0; c < b.d; ++c)
        os << i << ',' << k << ',' << c << ','
           << format_double(b.per_time[static_cast<size_t>(k)](i, c)) << ','
           << target << '\n';
  }
  if (!os) throw IoError("save_batch: write failed " + csv_path);

  nlohmann::json meta;
  meta["schema"] = 1;
  meta["seed"] = b.seed;
  meta["m"] = b.m;
  meta["L"] = b.L;
  meta["d"] = b.d;
  meta["map"] = {{"kind", to_string(b.spec.kind)}, {"parameters", b.spec.parameters}};
  meta["rng"] = CounterRng::kAlgorithmTag;
  meta["labeled"] = b.labeled;
  std::ofstream ms(meta_path, std::ios::trunc);
  if (!ms) throw IoError("save_batch: cannot open " + meta_path);
  ms << meta.dump(2) << '\n';
}

inline SequenceBatch load_batch(const std::string& csv_path,
                                const std::string& meta_path) {
  std::ifstream ms(meta_path);
  if (!ms) throw IoError("load_batch: cannot open " + meta_path);
  nlohmann::json meta = nlohmann::json::parse(ms, nullptr, true);

  SequenceBatch b;
  b.m = meta.at("m").get<int>();
  b.L = meta.at("L").get<int>();
  b.d = meta.at("d").get<int>();
  b.seed = meta.at("seed").get<std::uint64_t>();
  b.labeled = meta.at("labeled").get<bool>();
  b.spec.kind = parse_map_kind(meta.at("map").at("kind").get<std::string>());
  b.spec.d = b.d;
  b.spec.parameters = meta.at("map").at("parameters").get<std::vector<double>>();
  b.per_time.assign(static_cast<size_t>(b.L + 1), Matrix::Zero(b.m, b.d));
  if (b.labeled) b.targets = Vector::Zero(b.m);

  std::ifstream is(csv_path);
  if (!is) throw IoError("load_batch: cannot open " + csv_path);
  std::string line;
  std::getline(is, line);
  if (line != "sample,k,dim,value,target")
    throw IoError("load_batch: unexpected header in " + csv_path);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    const int i = std::stoi(tok);
    std::getline(ss, tok, ',');
    const int k = std::stoi(tok);
    std::getline(ss, tok, ',');
    const int c = std::stoi(tok);
    std::getline(ss, tok, ',');
    const double value = std::strtod(tok.c_str(), nullptr);
    std::getline(ss, tok, ',');
    if (i < 0 || i >= b.m || k < 0 || k > b.L || c < 0 || c >= b.d)
      throw IoError("load_batch: row out of range in " + csv_path);
    b.per_time[static_cast<size_t>(k)](i, c) = value;
    if (b.labeled && !tok.empty()) b.targets(i) = std::strtod(tok.c_str(), nullptr);
  }
  return b;
}

}  // namespace mfrnn
