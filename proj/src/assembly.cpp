#include "stlod/assembly.hpp"

#include <cmath>

namespace stlod {

namespace {

using Triplet = Eigen::Triplet<double>;

int dof_of(const SpatialMesh& mesh, int node, DofSet dofs) {
  return dofs == DofSet::all ? node : mesh.interior_index[node];
}

int dim_of(const SpatialMesh& mesh, DofSet dofs) {
  return dofs == DofSet::all ? mesh.node_count() : mesh.interior_count();
}

void add_element_mass(const SpatialMesh& mesh, int e, DofSet dofs,
                      std::vector<Triplet>& trips) {
  const double w = mesh.element_area() / 12.0;
  const auto& el = mesh.elements[e];
  for (int a = 0; a < 3; ++a) {
    const int ra = dof_of(mesh, el[a], dofs);
    if (ra < 0) continue;
    for (int b = 0; b < 3; ++b) {
      const int cb = dof_of(mesh, el[b], dofs);
      if (cb < 0) continue;
      trips.emplace_back(ra, cb, w * (a == b ? 2.0 : 1.0));
    }
  }
}

void add_element_stiffness(const SpatialMesh& mesh, int e, double coeff, DofSet dofs,
                           std::vector<Triplet>& trips) {
  const auto& el = mesh.elements[e];
  const auto& p0 = mesh.nodes[el[0]];
  const auto& p1 = mesh.nodes[el[1]];
  const auto& p2 = mesh.nodes[el[2]];
  // grad of barycentric i: (b_i, c_i) / (2 area), cyclic
  const double b[3] = {p1[1] - p2[1], p2[1] - p0[1], p0[1] - p1[1]};
  const double c[3] = {p2[0] - p1[0], p0[0] - p2[0], p1[0] - p0[0]};
  const double factor = coeff / (4.0 * mesh.element_area());
  for (int a = 0; a < 3; ++a) {
    const int ra = dof_of(mesh, el[a], dofs);
    if (ra < 0) continue;
    for (int bb = 0; bb < 3; ++bb) {
      const int cb = dof_of(mesh, el[bb], dofs);
      if (cb < 0) continue;
      trips.emplace_back(ra, cb, factor * (b[a] * b[bb] + c[a] * c[bb]));
    }
  }
}

Sparse from_triplets(int rows, int cols, std::vector<Triplet>& trips) {
  Sparse m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

std::vector<int> all_elements(const SpatialMesh& mesh) {
  std::vector<int> out(mesh.element_count());
  for (int e = 0; e < mesh.element_count(); ++e) out[e] = e;
  return out;
}

}  // namespace

Sparse mass_matrix(const SpatialMesh& mesh, DofSet dofs) {
  return mass_over_elements(mesh, all_elements(mesh), dofs);
}

Sparse mass_over_elements(const SpatialMesh& mesh, const std::vector<int>& elements,
                          DofSet dofs) {
  std::vector<Triplet> trips;
  trips.reserve(elements.size() * 9);
  for (int e : elements) add_element_mass(mesh, e, dofs, trips);
  const int n = dim_of(mesh, dofs);
  return from_triplets(n, n, trips);
}

Sparse stiffness_over_elements(const SpatialMesh& mesh, const std::vector<int>& elements,
                               const std::vector<double>& coeff_values, DofSet dofs) {
  if (coeff_values.size() != elements.size())
    throw invalid_argument("stiffness_over_elements: one coefficient value per element");
  std::vector<Triplet> trips;
  trips.reserve(elements.size() * 9);
  for (size_t idx = 0; idx < elements.size(); ++idx)
    add_element_stiffness(mesh, elements[idx], coeff_values[idx], dofs, trips);
  const int n = dim_of(mesh, dofs);
  return from_triplets(n, n, trips);
}

Sparse stiffness_matrix(const SpatialMesh& mesh, const Coefficient& coeff,
                        const TemporalGrid& grid, int fine_interval, DofSet dofs) {
  if (fine_interval < 1 || fine_interval > grid.total_fine_steps())
    throw invalid_argument("stiffness_matrix: fine interval out of range");
  const double t_mid = grid.fine_midpoint(fine_interval);
  const auto elements = all_elements(mesh);
  std::vector<double> vals(elements.size());
  for (size_t e = 0; e < elements.size(); ++e)
    vals[e] = value_on(coeff, mesh.centroid(static_cast<int>(e)), t_mid);
  return stiffness_over_elements(mesh, elements, vals, dofs);
}

Sparse unit_stiffness(const SpatialMesh& mesh, DofSet dofs) {
  const auto elements = all_elements(mesh);
  std::vector<double> ones(elements.size(), 1.0);
  return stiffness_over_elements(mesh, elements, ones, dofs);
}

std::pair<Sparse, Sparse> element_restricted_matrices(const SpatialMeshPair& pair,
                                                      const Coefficient& coeff,
                                                      const TemporalGrid& grid, int K,
                                                      int fine_interval) {
  if (K < 0 || K >= pair.coarse.element_count())
    throw invalid_argument("element_restricted_matrices: invalid coarse element");
  const auto& children = pair.element_children[K];
  const double t_mid = grid.fine_midpoint(fine_interval);
  std::vector<double> vals(children.size());
  for (size_t idx = 0; idx < children.size(); ++idx)
    vals[idx] = value_on(coeff, pair.fine.centroid(children[idx]), t_mid);
  return {mass_over_elements(pair.fine, children, DofSet::interior),
          stiffness_over_elements(pair.fine, children, vals, DofSet::interior)};
}

LoadAssembler::LoadAssembler(const SpatialMesh& m, const TemporalGrid& g)
    : mesh(&m), grid(g) {
  std::vector<Triplet> trips;
  for (int e = 0; e < m.element_count(); ++e) {
    const double w = m.element_area() / 12.0;
    const auto& el = m.elements[e];
    for (int a = 0; a < 3; ++a) {
      const int ra = m.interior_index[el[a]];
      if (ra < 0) continue;
      for (int b = 0; b < 3; ++b)
        trips.emplace_back(ra, el[b], w * (a == b ? 2.0 : 1.0));
    }
  }
  mass_int_all = from_triplets(m.interior_count(), m.node_count(), trips);
}

Eigen::VectorXd LoadAssembler::interval_load(const RhsFunction& f, int fine_interval) const {
  if (fine_interval < 1 || fine_interval > grid.total_fine_steps())
    throw invalid_argument("interval_load: fine interval out of range");
  const double tau = grid.fine_step;
  const double t = grid.fine_midpoint(fine_interval);

  if (f.analytic) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh->interior_count());
    const double w = mesh->element_area() / 3.0;
    for (int e = 0; e < mesh->element_count(); ++e) {
      const auto& el = mesh->elements[e];
      for (int a = 0; a < 3; ++a) {
        const int u = el[a], v = el[(a + 1) % 3];
        const double mx = 0.5 * (mesh->nodes[u][0] + mesh->nodes[v][0]);
        const double my = 0.5 * (mesh->nodes[u][1] + mesh->nodes[v][1]);
        const double fv = f.analytic(t, mx, my);
        // edge midpoint: the two adjacent hats take value 1/2
        const int du = mesh->interior_index[u];
        const int dv = mesh->interior_index[v];
        if (du >= 0) out[du] += w * fv * 0.5;
        if (dv >= 0) out[dv] += w * fv * 0.5;
      }
    }
    return tau * out;
  }

  const double poly = f.time_poly[0] + f.time_poly[1] * t + f.time_poly[2] * t * t;
  Eigen::VectorXd field = Eigen::VectorXd::Constant(mesh->node_count(), poly);
  if (f.nodal.size() > 0) {
    if (f.nodal.size() != mesh->node_count())
      throw invalid_argument("interval_load: nodal data must cover every node");
    field += f.nodal;
  }
  return tau * (mass_int_all * field);
}

Eigen::VectorXd load_vector(const RhsFunction& f, const SpatialMesh& mesh,
                            const TemporalGrid& grid, int fine_interval) {
  return LoadAssembler(mesh, grid).interval_load(f, fine_interval);
}

}  // namespace stlod
