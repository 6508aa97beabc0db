#pragma once

#include <vector>

#include "mfrnn/common.hpp"
#include "mfrnn/net_config.hpp"

namespace mfrnn {

// The three parameter blocks of one Elman network plus simulation time.
// Treated as immutable after construction: training produces new WeightSets.
struct WeightSet {
  NetConfig config;
  Matrix w_xh;  // n x d
  Matrix w_hh;  // n x n
  Vector w_hy;  // n
  double t = 0.0;

  WeightSet() = default;

  explicit WeightSet(const NetConfig& cfg)
      : config(cfg),
        w_xh(Matrix::Zero(cfg.n, cfg.d)),
        w_hh(Matrix::Zero(cfg.n, cfg.n)),
        w_hy(Vector::Zero(cfg.n)) {
    config.validate();
  }

  double max_abs_hh() const {
    return config.n > 0 ? w_hh.cwiseAbs().maxCoeff() : 0.0;
  }

  bool all_finite() const {
    return w_xh.allFinite() && w_hh.allFinite() && w_hy.allFinite();
  }

  void check_dims() const {
    if (w_xh.rows() != config.n || w_xh.cols() != config.d ||
        w_hh.rows() != config.n || w_hh.cols() != config.n ||
        w_hy.size() != config.n)
      throw ConfigError("WeightSet: block shapes do not match config");
  }
};

inline void check_permutation(const std::vector<int>& pi, int n) {
  if (static_cast<int>(pi.size()) != n)
    throw ConfigError("permutation size does not match width");
  std::vector<char> seen(static_cast<size_t>(n), 0);
  for (int v : pi) {
    if (v < 0 || v >= n || seen[static_cast<size_t>(v)])
      throw ConfigError("not a permutation of {0..n-1}");
    seen[static_cast<size_t>(v)] = 1;
  }
}

// Relabels the hidden neurons: row i of the result is row pi[i] of the input
// (rows of w_xh, rows and columns of w_hh, entries of w_hy).
inline WeightSet permute(const WeightSet& w, const std::vector<int>& pi) {
  check_permutation(pi, w.config.n);
  WeightSet out(w.config);
  out.t = w.t;
  const int n = w.config.n;
  for (int i = 0; i < n; ++i) {
    out.w_xh.row(i) = w.w_xh.row(pi[static_cast<size_t>(i)]);
    out.w_hy(i) = w.w_hy(pi[static_cast<size_t>(i)]);
    for (int j = 0; j < n; ++j)
      out.w_hh(i, j) = w.w_hh(pi[static_cast<size_t>(i)], pi[static_cast<size_t>(j)]);
  }
  return out;
}

}  // namespace mfrnn
