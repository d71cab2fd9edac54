#pragma once

#include "stlod/assembly.hpp"
#include "stlod/mesh.hpp"

namespace stlod {

// Projective quasi-interpolation from the fine to the coarse space: an
// elementwise L2 projection onto discontinuous P1 followed by averaging of
// the vertex values over adjacent elements. Rows for boundary coarse nodes
// are dropped, so the range lies in the zero-trace coarse space.
struct InterpolationOperator {
  Sparse matrix;           // coarse interior x fine interior
  SparseCol prolongation;  // fine interior x coarse interior, nodal embedding
};

InterpolationOperator build_quasi_interpolation(const SpatialMeshPair& pair);

Eigen::VectorXd apply(const InterpolationOperator& op, const Eigen::VectorXd& fine);
Eigen::VectorXd apply_transpose(const InterpolationOperator& op, const Eigen::VectorXd& coarse);

}  // namespace stlod
