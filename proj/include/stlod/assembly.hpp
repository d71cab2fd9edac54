#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <vector>

#include "stlod/coefficient.hpp"
#include "stlod/mesh.hpp"

namespace stlod {

// Compressed-row operators throughout; factorizations convert on demand.
using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SparseCol = Eigen::SparseMatrix<double>;

enum class DofSet { interior, all };

// Exact P1 mass matrix (element rule area/12 * [2 1 1; 1 2 1; 1 1 2]).
Sparse mass_matrix(const SpatialMesh& mesh, DofSet dofs);

// Mass restricted to a sub-triangulation; full column/row index space.
Sparse mass_over_elements(const SpatialMesh& mesh, const std::vector<int>& elements,
                          DofSet dofs);

// Stiffness with one scalar coefficient value per listed element.
Sparse stiffness_over_elements(const SpatialMesh& mesh, const std::vector<int>& elements,
                               const std::vector<double>& coeff_values, DofSet dofs);

// Stiffness for fine interval g (1-based global); the coefficient is constant
// per fine interval, so evaluating at the interval midpoint is exact.
Sparse stiffness_matrix(const SpatialMesh& mesh, const Coefficient& coeff,
                        const TemporalGrid& grid, int fine_interval, DofSet dofs);

// Unit-coefficient stiffness (discrete Laplacian).
Sparse unit_stiffness(const SpatialMesh& mesh, DofSet dofs);

// Mass/stiffness with integration restricted to one coarse element K
// (assembled over its fine children, global interior numbering).
std::pair<Sparse, Sparse> element_restricted_matrices(const SpatialMeshPair& pair,
                                                      const Coefficient& coeff,
                                                      const TemporalGrid& grid, int K,
                                                      int fine_interval);

// Right-hand side f(t,x) = nodal(x) + a + b t + c t^2, or an analytic handle.
// Nodal data is exact through the mass matrix; analytic handles use the
// 3-point edge-midpoint rule (exact for quadratics) at the temporal midpoint.
struct RhsFunction {
  std::function<double(double, double, double)> analytic;  // f(t, x, y)
  Eigen::VectorXd nodal;                                    // all-node values, optional
  std::array<double, 3> time_poly{0.0, 0.0, 0.0};

  static RhsFunction constant(double c) {
    RhsFunction f;
    f.time_poly = {c, 0.0, 0.0};
    return f;
  }
};

// Caches the interior-rows/all-columns mass matrix for repeated load
// assembly over many intervals or right-hand sides.
struct LoadAssembler {
  const SpatialMesh* mesh = nullptr;
  TemporalGrid grid;
  Sparse mass_int_all;

  LoadAssembler(const SpatialMesh& m, const TemporalGrid& g);
  // integral over fine interval g against interior hats, midpoint rule in time
  Eigen::VectorXd interval_load(const RhsFunction& f, int fine_interval) const;
};

Eigen::VectorXd load_vector(const RhsFunction& f, const SpatialMesh& mesh,
                            const TemporalGrid& grid, int fine_interval);

}  // namespace stlod
