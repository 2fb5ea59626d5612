#pragma once

// Gradient helpers shared by shape estimation and descriptors.

#include "wxbs/core.hpp"
#include "wxbs/kernels.hpp"

#include <vector>

namespace wxbs::detail {

struct Gradients {
  int side = 0;
  std::vector<float> gx, gy;
};

/// Central differences with border replication.
inline Gradients patch_gradients(const std::vector<float>& data, int side) {
  Gradients g;
  g.side = side;
  g.gx.resize(data.size());
  g.gy.resize(data.size());
  auto at = [&](int x, int y) {
    x = x < 0 ? 0 : (x >= side ? side - 1 : x);
    y = y < 0 ? 0 : (y >= side ? side - 1 : y);
    return data[static_cast<size_t>(y) * side + x];
  };
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      g.gx[static_cast<size_t>(y) * side + x] = 0.5f * (at(x + 1, y) - at(x - 1, y));
      g.gy[static_cast<size_t>(y) * side + x] = 0.5f * (at(x, y + 1) - at(x, y - 1));
    }
  return g;
}

inline Gradients patch_gradients(const Patch& p) { return patch_gradients(p.data, p.side); }

}  // namespace wxbs::detail
