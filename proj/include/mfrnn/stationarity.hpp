#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "mfrnn/gradient.hpp"
#include "mfrnn/weights.hpp"

namespace mfrnn {

// Chain-weighted quadratic form over index chains (j_0, ..., j_i):
//   (1/n^{i+1}) sum v(j_0) prod_{l=1}^{i-1} M(j_{l-1}, j_l) D(j_{i-1}, j_i)
// evaluated by i-1 matrix-vector products with M/n and one contraction with
// D/n^2; cost O(i n^2). For i = 1 the M product is empty.
inline double chain_quadratic(const Vector& v, const Matrix& M, const Matrix& D,
                              int i) {
  if (i < 1) throw PreconditionError("chain_quadratic: need i >= 1");
  const auto n = v.size();
  if (M.rows() != n || M.cols() != n || D.rows() != n || D.cols() != n)
    throw ConfigError("chain_quadratic: shape mismatch");
  Vector u = v;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int l = 1; l < i; ++l) u = (M.transpose() * u) * inv_n;
  return (u.transpose() * D).sum() * inv_n * inv_n;
}

// The four convergence functionals, evaluated for a snapshot `current` at
// time t against a late-time surrogate `final_ref` standing in for the
// limiting weights:
//   q1    = max_j |meanfield g_hy(j)| on the batch
//   q2    = (1/n) sum_j (Wbar_hy(j) - W_hy(t;j))^2
//   q3(i) = chain_quadratic(Wbar_hy^2, Wbar_hh^2, (Wbar_hh - W_hh(t))^2, i)
//   q4(i) = same chain with the input-weight discrepancy, placed at the
//           terminal chain node and constant along the trailing index
// with squares taken entrywise and i = 1..L.
struct StationarityReport {
  double t = 0.0;
  double t_ref = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  Vector q3;  // length L
  Vector q4;  // length L
};

inline StationarityReport report(const WeightSet& current,
                                 const WeightSet& final_ref,
                                 const SequenceBatch& batch, int nthreads = 1) {
  current.check_dims();
  final_ref.check_dims();
  if (!current.config.same_shape(final_ref.config))
    throw ConfigError("report: snapshot configs do not match");

  const int n = current.config.n;
  const int L = current.config.L;
  StationarityReport rep;
  rep.t = current.t;
  rep.t_ref = final_ref.t;

  const GradientSet g = gradient(current, batch, Scaling::MeanField, nthreads);
  rep.q1 = g.g_hy.cwiseAbs().maxCoeff();
  rep.q2 = (final_ref.w_hy - current.w_hy).squaredNorm() / n;

  const Vector v = final_ref.w_hy.array().square();
  const Matrix M = final_ref.w_hh.array().square();
  const Matrix Dhh = (final_ref.w_hh - current.w_hh).array().square();
  const Vector dxh2 = (final_ref.w_xh - current.w_xh).rowwise().squaredNorm();
  const Matrix Dxh = dxh2.replicate(1, n);

  rep.q3 = Vector::Zero(L);
  rep.q4 = Vector::Zero(L);
  for (int i = 1; i <= L; ++i) {
    rep.q3(i - 1) = chain_quadratic(v, M, Dhh, i);
    rep.q4(i - 1) = chain_quadratic(v, M, Dxh, i);
  }
  return rep;
}

// Reports for a ladder of snapshots, each against the last one.
inline std::vector<StationarityReport> report_ladder(
    const std::vector<WeightSet>& snapshots, const SequenceBatch& batch,
    int nthreads = 1) {
  if (snapshots.empty())
    throw PreconditionError("report_ladder: no snapshots");
  std::vector<StationarityReport> out;
  out.reserve(snapshots.size());
  for (const auto& w : snapshots)
    out.push_back(report(w, snapshots.back(), batch, nthreads));
  return out;
}

inline void save_stationarity_csv(const std::vector<StationarityReport>& reports,
                                  int L, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("save_stationarity_csv: cannot open " + path);
  os << "t,q1,q2";
  for (int i = 1; i <= L; ++i) os << ",q3_" << i;
  for (int i = 1; i <= L; ++i) os << ",q4_" << i;
  os << '\n';
  for (const auto& r : reports) {
    os << format_double(r.t) << ',' << format_double(r.q1) << ','
       << format_double(r.q2);
    for (int i = 0; i < L; ++i) os << ',' << format_double(r.q3(i));
    for (int i = 0; i < L; ++i) os << ',' << format_double(r.q4(i));
    os << '\n';
  }
  if (!os) throw IoError("save_stationarity_csv: write failed " + path);
}

}  // namespace mfrnn
