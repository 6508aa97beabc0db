#pragma once

#include <string>
#include <vector>

#include "mfrnn/activation.hpp"
#include "mfrnn/weights.hpp"

namespace mfrnn {

// Full forward pass of one sample: preactivations a_k(j), activations
// s_k(j) = sigma(a_k(j)) for k = 0..L (row k = depth k), and the readout.
// Recursion, from the oldest input inward:
//   a_L(j) = W_xh(j) . x_{-L}
//   a_k(j) = (1/n) sum_j' W_hh(j,j') s_{k+1}(j') + W_xh(j) . x_{-k}
//   output = (1/n) sum_j W_hy(j) s_0(j)
struct HiddenTrace {
  Matrix a;  // (L+1) x n
  Matrix s;  // (L+1) x n
  double output = 0.0;
};

// x holds the input sequence as rows ordered x_{-L}, ..., x_0, so
// x_{-k} is row (L - k).
inline HiddenTrace forward(const WeightSet& w, const Matrix& x) {
  const int n = w.config.n;
  const int L = w.config.L;
  w.check_dims();
  if (x.rows() != L + 1 || x.cols() != w.config.d)
    throw ConfigError("forward: sequence must be (L+1) x d");

  HiddenTrace tr;
  tr.a.resize(L + 1, n);
  tr.s.resize(L + 1, n);
  const double inv_n = 1.0 / n;

  tr.a.row(L) = (w.w_xh * x.row(0).transpose()).transpose();
  for (int k = L; k >= 0; --k) {
    if (k < L)
      tr.a.row(k) = (inv_n * (w.w_hh * tr.s.row(k + 1).transpose()) +
                     w.w_xh * x.row(L - k).transpose())
                        .transpose();
    if (!tr.a.row(k).allFinite())
      throw NumericError("forward: non-finite preactivation at depth " +
                         std::to_string(k));
    for (int j = 0; j < n; ++j) tr.s(k, j) = sigma(tr.a(k, j));
  }
  tr.output = inv_n * w.w_hy.dot(tr.s.row(0));
  return tr;
}

// Batched forward over a block of samples; keeps only the activations
// (sigma' is recovered as 1 - s^2) and the readouts.
struct BlockTrace {
  std::vector<Matrix> s;  // L+1 entries, each mb x n
  Vector outputs;         // mb
};

// x_time[i] holds the block rows of x_{-L+i} (mb x d); whh_t_scaled is
// W_hh^T / n, precomputed once per weight set.
inline void block_forward(const WeightSet& w,
                          const std::vector<Eigen::Ref<const Matrix>>& x_time,
                          const Matrix& whh_t_scaled, BlockTrace& out) {
  const int L = w.config.L;
  const auto mb = x_time[0].rows();
  out.s.resize(static_cast<size_t>(L + 1));
  Matrix pre;

  pre.noalias() = x_time[0] * w.w_xh.transpose();
  apply_sigma(pre, out.s[static_cast<size_t>(L)]);
  for (int k = L - 1; k >= 0; --k) {
    pre.noalias() = out.s[static_cast<size_t>(k + 1)] * whh_t_scaled;
    pre.noalias() += x_time[static_cast<size_t>(L - k)] * w.w_xh.transpose();
    apply_sigma(pre, out.s[static_cast<size_t>(k)]);
  }
  out.outputs.resize(mb);
  out.outputs.noalias() = out.s[0] * w.w_hy;
  out.outputs *= 1.0 / w.config.n;
}

}  // namespace mfrnn
