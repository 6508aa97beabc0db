#pragma once

#include "mfrnn/activation.hpp"
#include "mfrnn/common.hpp"

namespace mfrnn {

// Architecture of one network: hidden width n, input dimension d,
// unroll depth (memory length) L, truncation radius R.
struct NetConfig {
  int n = 1;
  int d = 1;
  int L = 0;
  double R = 1.0;
  Activation activation = Activation::Tanh;

  void validate() const {
    if (n < 1) throw ConfigError("NetConfig: n must be >= 1");
    if (d < 1) throw ConfigError("NetConfig: d must be >= 1");
    if (L < 0) throw ConfigError("NetConfig: L must be >= 0");
    if (!(R > 0.0)) throw ConfigError("NetConfig: R must be > 0");
    check_activation(activation);
  }

  bool same_shape(const NetConfig& o) const {
    return n == o.n && d == o.d && L == o.L;
  }
};

inline NetConfig make_net_config(int n, int d, int L, double R,
                                 Activation a = Activation::Tanh) {
  NetConfig c{n, d, L, R, a};
  c.validate();
  return c;
}

}  // namespace mfrnn
