#pragma once

#include <Eigen/Dense>
#include <vector>

#include "stlod/common.hpp"
#include "stlod/mesh.hpp"

namespace stlod {

// Trial-space function on the fine grid: interior nodal values at every fine
// time node, piecewise linear in time, zero at t = 0.
struct SpaceTimeFunction {
  std::vector<Eigen::VectorXd> slices;  // index 0 .. total_fine_steps

  static SpaceTimeFunction zero(int fine_dofs, const TemporalGrid& grid) {
    SpaceTimeFunction f;
    f.slices.assign(grid.total_fine_steps() + 1, Eigen::VectorXd::Zero(fine_dofs));
    return f;
  }

  int steps() const { return static_cast<int>(slices.size()) - 1; }

  SpaceTimeFunction& operator+=(const SpaceTimeFunction& other) {
    if (other.slices.size() != slices.size())
      throw invalid_argument("space-time function: step count mismatch");
    for (size_t i = 0; i < slices.size(); ++i) slices[i] += other.slices[i];
    return *this;
  }
  SpaceTimeFunction& operator-=(const SpaceTimeFunction& other) {
    if (other.slices.size() != slices.size())
      throw invalid_argument("space-time function: step count mismatch");
    for (size_t i = 0; i < slices.size(); ++i) slices[i] -= other.slices[i];
    return *this;
  }
  SpaceTimeFunction& operator*=(double c) {
    for (auto& s : slices) s *= c;
    return *this;
  }
};

}  // namespace stlod
