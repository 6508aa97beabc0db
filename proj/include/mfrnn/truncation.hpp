#pragma once

#include <cmath>

#include "mfrnn/common.hpp"

namespace mfrnn {

// Smooth indicator multiplying the hidden-weight gradient: 1 on [0, R/2],
// 0 on [R, inf), quintic smoothstep on the transition band in
// u = (2|w| - R)/R. C^2, even in w, |d chi/dw| <= 15/(4R).
inline double chi_r(double w, double R) {
  if (!(R > 0.0)) throw ConfigError("chi_r: R must be > 0");
  const double a = std::abs(w);
  if (a <= 0.5 * R) return 1.0;
  if (a >= R) return 0.0;
  const double u = (2.0 * a - R) / R;
  return 1.0 - u * u * u * (u * (6.0 * u - 15.0) + 10.0);
}

// Entrywise chi_R over a matrix; R validated once.
inline Matrix chi_r_matrix(const Matrix& w, double R) {
  if (!(R > 0.0)) throw ConfigError("chi_r: R must be > 0");
  Matrix out(w.rows(), w.cols());
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const double a = std::abs(w(i, j));
      if (a <= 0.5 * R) {
        out(i, j) = 1.0;
      } else if (a >= R) {
        out(i, j) = 0.0;
      } else {
        const double u = (2.0 * a - R) / R;
        out(i, j) = 1.0 - u * u * u * (u * (6.0 * u - 15.0) + 10.0);
      }
    }
  return out;
}

}  // namespace mfrnn
