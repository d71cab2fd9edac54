#pragma once

#include <array>
#include <string>
#include <vector>

#include "stlod/common.hpp"
#include "stlod/mesh.hpp"

namespace stlod {

// Scalar diffusion field, piecewise constant on an eps_x x eps_x x eps_t
// space-time grid of cells. Values are drawn from a splitmix64 stream in
// row-major (x, y, t) order so that a seed reproduces the field bit-exactly
// everywhere.
struct Coefficient {
  uint64_t seed = 0;
  double eps_x = 0.0;
  double eps_t = 0.0;
  bool time_periodic = false;
  double period = 0.0;  // temporal extent of the slab grid (the period when periodic)
  int nx = 0, ny = 0, nt = 0;
  std::vector<double> values;  // flat index (cx*ny + cy)*nt + ct
  double alpha = 0.0;          // min of values
  double beta = 0.0;           // max of values

  double cell(int cx, int cy, int ct) const {
    return values[(static_cast<size_t>(cx) * ny + cy) * nt + ct];
  }

  int slab_index(double t) const;
  uint64_t fingerprint() const;
};

Coefficient generate_random_coefficient(uint64_t seed, double eps_x, double eps_t,
                                        double low, double high, bool periodic,
                                        double period);

// Constant field on the same cell layout, mainly for tests.
Coefficient constant_coefficient(double value, double eps_x, double eps_t,
                                 bool periodic, double period);

double value_on(const Coefficient& coeff, std::array<double, 2> point, double time);

std::pair<double, double> coefficient_bounds(const Coefficient& coeff);

// The fine discretization has to resolve the cells: eps_x must be a multiple
// of the fine spacing and eps_t a multiple of the fine time step.
void validate_resolution(const Coefficient& coeff, const SpatialMesh& fine,
                         const TemporalGrid& grid);

void save_coefficient(const std::string& path, const Coefficient& coeff);
Coefficient load_coefficient(const std::string& path);

}  // namespace stlod
