#pragma once

#include <algorithm>
#include <vector>

#include "socnav/common.hpp"

namespace socnav {

// Square robot-centred map of disruption scores in [0, 1] (1 = no
// disruption). Cell (i, j) sits at grid_coords(i, j, n, w).
struct CostMap {
  int n = 0;
  double w = 0.0;
  std::vector<double> values;  // row-major, n * n

  CostMap() = default;
  CostMap(int n_, double w_) : n(n_), w(w_), values(static_cast<size_t>(n_) * n_, 0.0) {}

  double& at(int i, int j) { return values[static_cast<size_t>(i) * n + j]; }
  double at(int i, int j) const { return values[static_cast<size_t>(i) * n + j]; }
  double centre() const { return at(n / 2, n / 2); }

  void clamp01() {
    for (double& v : values) v = std::clamp(v, 0.0, 1.0);
  }
};

}  // namespace socnav
