#pragma once

#include "luna/design_space.hpp"

namespace luna::test {

inline DesignPoint make_design(int start, int windows, int m, int n, std::array<int, 3> layers, int bi, int b,
                               int bo, int gi, int g, int go) {
  DesignPoint dp;
  dp.start_sample = start;
  dp.num_windows = windows;
  dp.shift_m = m;
  dp.shift_n = n;
  dp.l0 = layers[0];
  dp.num_hidden = 2;
  dp.hidden = {layers[1], layers[2], 5};
  dp.beta_i = bi;
  dp.beta = b;
  dp.beta_o = bo;
  dp.gamma_i = gi;
  dp.gamma = g;
  dp.gamma_o = go;
  return dp;
}

// The three reference optimum configurations (fidelity, area, latency targets).
inline DesignPoint fidelity_row() { return make_design(100, 2, 7, 1, {145, 40, 15}, 1, 2, 2, 7, 6, 8); }
inline DesignPoint area_row() { return make_design(100, 1, 9, 0, {25, 5, 5}, 1, 1, 2, 6, 6, 11); }
inline DesignPoint latency_row() { return make_design(100, 2, 9, 1, {145, 35, 15}, 1, 1, 2, 6, 6, 7); }

}  // namespace luna::test
