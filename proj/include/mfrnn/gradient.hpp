#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mfrnn/forward.hpp"
#include "mfrnn/sequence.hpp"
#include "mfrnn/weights.hpp"

namespace mfrnn {

// Backward sensitivities of one sample. Row k of G carries
//   G_0(j)     = W_hy(j) sigma'(a_0(j))
//   G_{k+1}(j') = (1/n) sum_j G_k(j) W_hh(j,j') sigma'(a_{k+1}(j'))
// which equals the Gamma-chain of depth k; delta_f is F_hat(x) - F*(x).
struct AdjointStack {
  HiddenTrace trace;
  Matrix G;  // (L+1) x n
  double delta_f = 0.0;
};

inline AdjointStack backward(const WeightSet& w, const HiddenTrace& trace,
                             double target) {
  const int n = w.config.n;
  const int L = w.config.L;
  AdjointStack out;
  out.trace = trace;
  out.delta_f = trace.output - target;
  out.G.resize(L + 1, n);
  const double inv_n = 1.0 / n;

  out.G.row(0) = w.w_hy.transpose().array() *
                 (1.0 - trace.s.row(0).array().square());
  for (int k = 0; k + 1 <= L; ++k) {
    out.G.row(k + 1) = (out.G.row(k) * w.w_hh).array() * inv_n *
                       (1.0 - trace.s.row(k + 1).array().square());
    if (!out.G.row(k + 1).allFinite())
      throw NumericError("backward: non-finite sensitivity at depth " +
                         std::to_string(k + 1));
  }
  return out;
}

enum class Scaling { MeanField, Plain };

inline std::string to_string(Scaling s) {
  return s == Scaling::MeanField ? "meanfield" : "plain";
}

inline Scaling parse_scaling(const std::string& s) {
  if (s == "meanfield") return Scaling::MeanField;
  if (s == "plain") return Scaling::Plain;
  throw ConfigError("unknown scaling '" + s + "'");
}

// Empirical-risk gradients averaged over a labeled batch. Mean-field entries:
//   g_hy(j)    = mean_x[ dF sigma(a_0(j)) ]
//   g_xh(j,:)  = mean_x[ dF sum_{k=0}^{L}   G_k(j) x_{-k} ]
//   g_hh(j,j') = mean_x[ dF sum_{k=0}^{L-1} G_k(j) sigma(a_{k+1}(j')) ]
// Plain scaling divides by (n, n^2, n) per block: the finite-width
// derivative of the same risk. No truncation here; the trainer applies chi_R.
struct GradientSet {
  Matrix g_xh;  // n x d
  Matrix g_hh;  // n x n
  Vector g_hy;  // n
  Scaling scaling = Scaling::MeanField;
};

struct EvalResult {
  GradientSet grad;
  double loss = 0.0;  // (1/m) sum 1/2 (F_hat - F*)^2
};

namespace detail {

constexpr int kBlockSamples = 256;

struct BlockPartials {
  Matrix g_xh, g_hh;
  Vector g_hy;
  double loss_sum = 0.0;
};

// One block of samples: forward, fold dF into the adjoint recursion, and
// accumulate the three gradient partial sums.
inline void eval_block(const WeightSet& w, const SequenceBatch& batch,
                       int start, int mb, const Matrix& whh_t_scaled,
                       const Matrix& whh_scaled, BlockPartials& out) {
  const int L = w.config.L;
  const int d = w.config.d;
  const int n = w.config.n;

  std::vector<Eigen::Ref<const Matrix>> x_time;
  x_time.reserve(static_cast<size_t>(L + 1));
  for (int k = 0; k <= L; ++k)
    x_time.emplace_back(batch.per_time[static_cast<size_t>(k)].middleRows(start, mb));

  BlockTrace tr;
  block_forward(w, x_time, whh_t_scaled, tr);
  const Vector delta_f = tr.outputs - batch.targets.segment(start, mb);

  out.loss_sum = 0.5 * delta_f.squaredNorm();
  out.g_hy.noalias() = tr.s[0].transpose() * delta_f;
  out.g_xh = Matrix::Zero(n, d);
  out.g_hh = Matrix::Zero(n, n);

  // Ghat_k rows are dF * G_k per sample; dF enters once at depth 0 and the
  // recursion is linear in G.
  Matrix ghat = (1.0 - tr.s[0].array().square()).matrix();
  ghat.array().rowwise() *= w.w_hy.transpose().array();
  ghat.array().colwise() *= delta_f.array();

  Matrix next;
  for (int k = 0; k <= L; ++k) {
    out.g_xh.noalias() += ghat.transpose() * x_time[static_cast<size_t>(L - k)];
    if (k < L) {
      out.g_hh.noalias() += ghat.transpose() * tr.s[static_cast<size_t>(k + 1)];
      next.noalias() = ghat * whh_scaled;
      next.array() *= 1.0 - tr.s[static_cast<size_t>(k + 1)].array().square();
      ghat.swap(next);
    }
  }
}

}  // namespace detail

// Gradient and loss in one pass over fixed 256-sample blocks; block partials
// are reduced in block order, so the result is independent of nthreads.
inline EvalResult evaluate(const WeightSet& w, const SequenceBatch& batch,
                           Scaling scaling, int nthreads = 1) {
  w.check_dims();
  if (!batch.labeled) throw PreconditionError("evaluate: batch is not labeled");
  if (batch.L != w.config.L || batch.d != w.config.d)
    throw ConfigError("evaluate: batch shape does not match network");

  const int n = w.config.n;
  const int m = batch.m;
  const Matrix whh_t_scaled = w.w_hh.transpose() / n;
  const Matrix whh_scaled = w.w_hh / n;

  const int nblocks = (m + detail::kBlockSamples - 1) / detail::kBlockSamples;
  std::vector<detail::BlockPartials> partials(static_cast<size_t>(nblocks));
  parallel_for_indexed(nblocks, nthreads, [&](int b) {
    const int start = b * detail::kBlockSamples;
    const int mb = std::min(detail::kBlockSamples, m - start);
    detail::eval_block(w, batch, start, mb, whh_t_scaled, whh_scaled,
                       partials[static_cast<size_t>(b)]);
  });

  EvalResult res;
  res.grad.scaling = scaling;
  res.grad.g_xh = Matrix::Zero(n, w.config.d);
  res.grad.g_hh = Matrix::Zero(n, n);
  res.grad.g_hy = Vector::Zero(n);
  double loss_sum = 0.0;
  for (const auto& p : partials) {
    res.grad.g_xh += p.g_xh;
    res.grad.g_hh += p.g_hh;
    res.grad.g_hy += p.g_hy;
    loss_sum += p.loss_sum;
  }

  // Plain first; the mean-field entries are exact multiples (n, n^2, n).
  const double inv_m = 1.0 / m;
  res.grad.g_xh *= inv_m / n;
  res.grad.g_hh *= inv_m / (static_cast<double>(n) * n);
  res.grad.g_hy *= inv_m / n;
  if (scaling == Scaling::MeanField) {
    res.grad.g_xh *= static_cast<double>(n);
    res.grad.g_hh *= static_cast<double>(n) * n;
    res.grad.g_hy *= static_cast<double>(n);
  }
  res.loss = loss_sum * inv_m;

  if (!res.grad.g_xh.allFinite() || !res.grad.g_hh.allFinite() ||
      !res.grad.g_hy.allFinite() || !std::isfinite(res.loss))
    throw NumericError("evaluate: non-finite gradient or loss");
  return res;
}

inline GradientSet gradient(const WeightSet& w, const SequenceBatch& batch,
                            Scaling scaling, int nthreads = 1) {
  return evaluate(w, batch, scaling, nthreads).grad;
}

// Forward-only empirical risk (1/m) sum 1/2 (F_hat - F*)^2.
inline double batch_loss(const WeightSet& w, const SequenceBatch& batch,
                         int nthreads = 1) {
  w.check_dims();
  if (!batch.labeled) throw PreconditionError("batch_loss: batch is not labeled");
  if (batch.L != w.config.L || batch.d != w.config.d)
    throw ConfigError("batch_loss: batch shape does not match network");
  const Matrix whh_t_scaled = w.w_hh.transpose() / w.config.n;
  const int m = batch.m;
  const int nblocks = (m + detail::kBlockSamples - 1) / detail::kBlockSamples;
  std::vector<double> partial(static_cast<size_t>(nblocks), 0.0);
  parallel_for_indexed(nblocks, nthreads, [&](int b) {
    const int start = b * detail::kBlockSamples;
    const int mb = std::min(detail::kBlockSamples, m - start);
    std::vector<Eigen::Ref<const Matrix>> x_time;
    x_time.reserve(static_cast<size_t>(batch.L + 1));
    for (int k = 0; k <= batch.L; ++k)
      x_time.emplace_back(batch.per_time[static_cast<size_t>(k)].middleRows(start, mb));
    BlockTrace tr;
    block_forward(w, x_time, whh_t_scaled, tr);
    partial[static_cast<size_t>(b)] =
        0.5 * (tr.outputs - batch.targets.segment(start, mb)).squaredNorm();
  });
  double sum = 0.0;
  for (double p : partial) sum += p;
  const double loss = sum / m;
  if (!std::isfinite(loss)) throw NumericError("batch_loss: non-finite loss");
  return loss;
}

// Reference route for the depth-i sensitivity: explicit sums over all index
// chains (j_0, ..., j_{i-1}, j) with a 1/n factor per averaged index,
//   Gamma_i(j) = (1/n^i) sum W_hy(j_0) s'_0(j_0) W_hh(j_0,j_1) s'_1(j_1) ...
//                W_hh(j_{i-1}, j) s'_i(j).
// No matrix products on purpose: this is the independent check for backward.
inline Vector chain_oracle(const WeightSet& w, const Matrix& x, int i) {
  const int n = w.config.n;
  if (i < 0 || i > w.config.L) throw PreconditionError("chain_oracle: need 0 <= i <= L");
  if (n > 64 || i > 4)
    throw GuardError("chain_oracle: combinatorial guard (n <= 64, i <= 4)");

  const HiddenTrace tr = forward(w, x);
  Matrix dsig(w.config.L + 1, n);
  dsig.array() = 1.0 - tr.s.array().square();

  Vector out = Vector::Zero(n);
  if (i == 0) {
    for (int j = 0; j < n; ++j) out(j) = w.w_hy(j) * dsig(0, j);
    return out;
  }

  std::vector<int> chain(static_cast<size_t>(i), 0);
  for (;;) {
    double p = w.w_hy(chain[0]) * dsig(0, chain[0]);
    for (int l = 1; l < i; ++l)
      p *= w.w_hh(chain[static_cast<size_t>(l - 1)], chain[static_cast<size_t>(l)]) *
           dsig(l, chain[static_cast<size_t>(l)]);
    for (int j = 0; j < n; ++j)
      out(j) += p * w.w_hh(chain[static_cast<size_t>(i - 1)], j) * dsig(i, j);
    int pos = i - 1;
    while (pos >= 0 && ++chain[static_cast<size_t>(pos)] == n)
      chain[static_cast<size_t>(pos--)] = 0;
    if (pos < 0) break;
  }
  out /= std::pow(static_cast<double>(n), i);
  return out;
}

}  // namespace mfrnn
