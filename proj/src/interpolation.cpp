#include "stlod/interpolation.hpp"

#include <array>
#include <cmath>
#include <map>

namespace stlod {

namespace {

struct Barycentric {
  std::array<double, 2> v0, v1, v2;
  double det;

  explicit Barycentric(const SpatialMesh& mesh, int element) {
    const auto& el = mesh.elements[element];
    v0 = mesh.nodes[el[0]];
    v1 = mesh.nodes[el[1]];
    v2 = mesh.nodes[el[2]];
    det = (v1[1] - v2[1]) * (v0[0] - v2[0]) + (v2[0] - v1[0]) * (v0[1] - v2[1]);
  }

  std::array<double, 3> at(double x, double y) const {
    const double l0 = ((v1[1] - v2[1]) * (x - v2[0]) + (v2[0] - v1[0]) * (y - v2[1])) / det;
    const double l1 = ((v2[1] - v0[1]) * (x - v0[0]) + (v0[0] - v2[0]) * (y - v0[1])) / det;
    return {l0, l1, 1.0 - l0 - l1};
  }
};

}  // namespace

InterpolationOperator build_quasi_interpolation(const SpatialMeshPair& pair) {
  const SpatialMesh& coarse = pair.coarse;
  const SpatialMesh& fine = pair.fine;
  if (pair.element_children.size() != static_cast<size_t>(coarse.element_count()))
    throw invalid_argument("build_quasi_interpolation: mesh pair is not nested");

  InterpolationOperator op;

  // Elementwise projection coefficients g[e][l] as sparse rows over fine
  // nodes, obtained from the closed-form inverse of the local P1 mass matrix.
  const double area = coarse.element_area();
  const double inv[3][3] = {{9.0 / area, -3.0 / area, -3.0 / area},
                            {-3.0 / area, 9.0 / area, -3.0 / area},
                            {-3.0 / area, -3.0 / area, 9.0 / area}};
  // (|K|/12 [2 1 1; 1 2 1; 1 1 2])^-1 = (3/|K|) [3 -1 -1; -1 3 -1; -1 -1 3]

  std::vector<std::array<std::map<int, double>, 3>> elem_coeff(coarse.element_count());
  for (int e = 0; e < coarse.element_count(); ++e) {
    Barycentric bary(coarse, e);
    std::array<std::map<int, double>, 3> moments;
    for (int child : pair.element_children[e]) {
      const auto& fel = fine.elements[child];
      const double w = fine.element_area() / 3.0;
      for (int a = 0; a < 3; ++a) {
        const int u = fel[a], v = fel[(a + 1) % 3];
        const double mx = 0.5 * (fine.nodes[u][0] + fine.nodes[v][0]);
        const double my = 0.5 * (fine.nodes[u][1] + fine.nodes[v][1]);
        const auto lam = bary.at(mx, my);
        for (int l = 0; l < 3; ++l) {
          const double c = w * 0.5 * lam[l];
          moments[l][u] += c;
          moments[l][v] += c;
        }
      }
    }
    for (int l = 0; l < 3; ++l)
      for (int m = 0; m < 3; ++m)
        for (const auto& [node, val] : moments[m])
          elem_coeff[e][l][node] += inv[l][m] * val;
  }

  // Vertex averaging over adjacent elements, boundary rows dropped.
  std::vector<Eigen::Triplet<double>> trips;
  for (int dof = 0; dof < coarse.interior_count(); ++dof) {
    const int z = coarse.interior_nodes[dof];
    const auto& incident = coarse.node_elements[z];
    const double share = 1.0 / static_cast<double>(incident.size());
    std::map<int, double> row;
    for (int e : incident) {
      int local = -1;
      for (int l = 0; l < 3; ++l)
        if (coarse.elements[e][l] == z) local = l;
      for (const auto& [node, val] : elem_coeff[e][local]) row[node] += share * val;
    }
    for (const auto& [node, val] : row) {
      const int col = fine.interior_index[node];
      if (col >= 0 && val != 0.0) trips.emplace_back(dof, col, val);
    }
  }
  op.matrix.resize(coarse.interior_count(), fine.interior_count());
  op.matrix.setFromTriplets(trips.begin(), trips.end());
  op.matrix.makeCompressed();

  // Nodal embedding of coarse hats into the fine space.
  std::vector<Eigen::Triplet<double>> ptrips;
  for (int dof = 0; dof < coarse.interior_count(); ++dof) {
    const int z = coarse.interior_nodes[dof];
    std::map<int, double> column;
    for (int e : coarse.node_elements[z]) {
      Barycentric bary(coarse, e);
      int local = -1;
      for (int l = 0; l < 3; ++l)
        if (coarse.elements[e][l] == z) local = l;
      for (int child : pair.element_children[e]) {
        for (int q : fine.elements[child]) {
          const double val = bary.at(fine.nodes[q][0], fine.nodes[q][1])[local];
          if (std::abs(val) > 1e-14) column[q] = val;
        }
      }
    }
    for (const auto& [node, val] : column) {
      const int row = fine.interior_index[node];
      if (row >= 0) ptrips.emplace_back(row, dof, val);
    }
  }
  op.prolongation.resize(fine.interior_count(), coarse.interior_count());
  op.prolongation.setFromTriplets(ptrips.begin(), ptrips.end());
  op.prolongation.makeCompressed();

  return op;
}

Eigen::VectorXd apply(const InterpolationOperator& op, const Eigen::VectorXd& fine) {
  if (fine.size() != op.matrix.cols())
    throw invalid_argument("apply: vector length does not match the fine space");
  return op.matrix * fine;
}

Eigen::VectorXd apply_transpose(const InterpolationOperator& op, const Eigen::VectorXd& coarse) {
  if (coarse.size() != op.matrix.rows())
    throw invalid_argument("apply_transpose: vector length does not match the coarse space");
  return op.matrix.transpose() * coarse;
}

}  // namespace stlod
