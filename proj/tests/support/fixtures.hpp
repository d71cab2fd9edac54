#pragma once

#include "stlod/coefficient.hpp"
#include "stlod/interpolation.hpp"
#include "stlod/mesh.hpp"

namespace stlod::testing {

// Small instance used throughout the unit tests: 4x4 coarse cells refined
// twice, three coarse intervals of four fine steps each.
struct DeskInstance {
  SpatialMeshPair pair;
  TemporalGrid grid;
  Coefficient coeff;
  InterpolationOperator interp;
};

inline DeskInstance make_desk(bool periodic = false, uint64_t seed = 42) {
  DeskInstance d;
  d.pair = build_mesh_pair(2, 4);
  d.grid = build_temporal_grid(0.75, 3, 4);
  const double extent = periodic ? d.grid.coarse_step : d.grid.t_final;
  d.coeff = generate_random_coefficient(seed, 0.25, 0.125, 0.01, 0.1, periodic, extent);
  d.interp = build_quasi_interpolation(d.pair);
  return d;
}

}  // namespace stlod::testing
