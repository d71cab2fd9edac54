#include "stlod/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace stlod {

Counters& counters() {
  static Counters c;
  return c;
}

std::array<double, 2> SpatialMesh::centroid(int element) const {
  const auto& e = elements[element];
  return {(nodes[e[0]][0] + nodes[e[1]][0] + nodes[e[2]][0]) / 3.0,
          (nodes[e[0]][1] + nodes[e[1]][1] + nodes[e[2]][1]) / 3.0};
}

SpatialMesh build_uniform_mesh(int subdivision_exponent) {
  if (subdivision_exponent < 1)
    throw invalid_argument("build_uniform_mesh: subdivision exponent must be >= 1");

  SpatialMesh m;
  m.subdivision_exponent = subdivision_exponent;
  m.cells_per_side = 1 << subdivision_exponent;
  m.spacing = 1.0 / m.cells_per_side;
  m.mesh_size = std::sqrt(2.0) * m.spacing;

  const int ns = m.cells_per_side + 1;
  m.nodes.reserve(static_cast<size_t>(ns) * ns);
  for (int iy = 0; iy < ns; ++iy)
    for (int ix = 0; ix < ns; ++ix)
      m.nodes.push_back({ix * m.spacing, iy * m.spacing});

  m.elements.reserve(2u * m.cells_per_side * m.cells_per_side);
  for (int iy = 0; iy < m.cells_per_side; ++iy) {
    for (int ix = 0; ix < m.cells_per_side; ++ix) {
      const int bl = m.node_id(ix, iy);
      const int br = m.node_id(ix + 1, iy);
      const int tr = m.node_id(ix + 1, iy + 1);
      const int tl = m.node_id(ix, iy + 1);
      m.elements.push_back({bl, br, tr});  // below the diagonal
      m.elements.push_back({bl, tr, tl});  // above the diagonal
    }
  }

  m.boundary_mask.resize(m.nodes.size());
  m.interior_index.assign(m.nodes.size(), -1);
  for (int n = 0; n < m.node_count(); ++n) {
    const auto& p = m.nodes[n];
    const bool bnd = p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0;
    m.boundary_mask[n] = bnd ? 1 : 0;
    if (!bnd) {
      m.interior_index[n] = static_cast<int>(m.interior_nodes.size());
      m.interior_nodes.push_back(n);
    }
  }

  m.node_elements.resize(m.nodes.size());
  for (int e = 0; e < m.element_count(); ++e)
    for (int v : m.elements[e]) m.node_elements[v].push_back(e);

  return m;
}

SpatialMeshPair build_mesh_pair(int coarse_exponent, int fine_exponent) {
  if (fine_exponent <= coarse_exponent)
    throw invalid_argument("build_mesh_pair: fine exponent must exceed the coarse one");

  SpatialMeshPair pair;
  pair.coarse = build_uniform_mesh(coarse_exponent);
  pair.fine = build_uniform_mesh(fine_exponent);
  pair.refinement_levels = fine_exponent - coarse_exponent;

  const int ratio = 1 << pair.refinement_levels;
  const int nc = pair.coarse.cells_per_side;

  pair.element_children.resize(pair.coarse.element_count());
  for (int cy = 0; cy < nc; ++cy) {
    for (int cx = 0; cx < nc; ++cx) {
      const int cell = cy * nc + cx;
      auto& lower = pair.element_children[2 * cell];
      auto& upper = pair.element_children[2 * cell + 1];
      for (int dy = 0; dy < ratio; ++dy) {
        for (int dx = 0; dx < ratio; ++dx) {
          const int fx = cx * ratio + dx;
          const int fy = cy * ratio + dy;
          const int fcell = fy * pair.fine.cells_per_side + fx;
          // fine cells on the coarse diagonal split their two triangles
          // between the coarse pair; off-diagonal cells belong wholly to one
          if (dx > dy) {
            lower.push_back(2 * fcell);
            lower.push_back(2 * fcell + 1);
          } else if (dy > dx) {
            upper.push_back(2 * fcell);
            upper.push_back(2 * fcell + 1);
          } else {
            lower.push_back(2 * fcell);
            upper.push_back(2 * fcell + 1);
          }
        }
      }
      std::sort(lower.begin(), lower.end());
      std::sort(upper.begin(), upper.end());
    }
  }

  pair.node_embedding.resize(pair.coarse.node_count());
  for (int iy = 0; iy <= nc; ++iy)
    for (int ix = 0; ix <= nc; ++ix)
      pair.node_embedding[pair.coarse.node_id(ix, iy)] =
          pair.fine.node_id(ix * ratio, iy * ratio);

  return pair;
}

TemporalGrid build_temporal_grid(double t_final, int coarse_steps, int fine_per_coarse) {
  if (t_final <= 0.0)
    throw invalid_argument("build_temporal_grid: final time must be positive");
  if (coarse_steps < 1 || fine_per_coarse < 1)
    throw invalid_argument("build_temporal_grid: step counts must be >= 1");

  TemporalGrid g;
  g.t_final = t_final;
  g.coarse_steps = coarse_steps;
  g.fine_per_coarse = fine_per_coarse;
  g.coarse_step = t_final / coarse_steps;
  g.fine_step = g.coarse_step / fine_per_coarse;
  return g;
}

std::vector<int> one_layer(const SpatialMesh& mesh, const std::vector<int>& elements) {
  std::set<int> out(elements.begin(), elements.end());
  for (int e : elements)
    for (int v : mesh.elements[e])
      for (int n : mesh.node_elements[v]) out.insert(n);
  return {out.begin(), out.end()};
}

Patch make_patch(const SpatialMeshPair& pair, int center_element, int radius) {
  const SpatialMesh& coarse = pair.coarse;
  const SpatialMesh& fine = pair.fine;
  if (center_element < 0 || center_element >= coarse.element_count())
    throw invalid_argument("make_patch: invalid center element");
  if (radius < 1) throw invalid_argument("make_patch: radius must be >= 1");

  Patch p;
  p.center_element = center_element;
  p.radius = radius;

  p.coarse_elements = {center_element};
  for (int step = 0; step < radius; ++step) {
    if (static_cast<int>(p.coarse_elements.size()) == coarse.element_count()) break;
    p.coarse_elements = one_layer(coarse, p.coarse_elements);
  }
  p.saturated = static_cast<int>(p.coarse_elements.size()) == coarse.element_count();

  std::vector<uint8_t> in_patch(coarse.element_count(), 0);
  for (int e : p.coarse_elements) in_patch[e] = 1;

  for (int e : p.coarse_elements)
    for (int c : pair.element_children[e]) p.fine_elements.push_back(c);
  std::sort(p.fine_elements.begin(), p.fine_elements.end());

  std::vector<uint8_t> in_fine(fine.element_count(), 0);
  for (int e : p.fine_elements) in_fine[e] = 1;

  // a node is strictly interior to the patch iff every incident element lies
  // inside; boundary-of-domain nodes are excluded as well
  std::set<int> fine_nodes;
  for (int e : p.fine_elements)
    for (int v : fine.elements[e]) fine_nodes.insert(v);
  for (int v : fine_nodes) {
    if (fine.boundary_mask[v]) continue;
    bool interior = true;
    for (int e : fine.node_elements[v])
      if (!in_fine[e]) { interior = false; break; }
    if (interior) p.fine_nodes_active.push_back(v);
  }

  std::set<int> coarse_nodes;
  for (int e : p.coarse_elements)
    for (int v : coarse.elements[e]) coarse_nodes.insert(v);
  for (int v : coarse_nodes) {
    if (coarse.boundary_mask[v]) continue;
    bool interior = true;
    for (int e : coarse.node_elements[v])
      if (!in_patch[e]) { interior = false; break; }
    if (interior) p.coarse_nodes_active.push_back(v);
  }

  p.fine_dof_local.assign(fine.interior_count(), -1);
  for (int v : p.fine_nodes_active) {
    const int dof = fine.interior_index[v];
    p.fine_dof_local[dof] = static_cast<int>(p.fine_dofs.size());
    p.fine_dofs.push_back(dof);
  }
  p.coarse_dof_local.assign(coarse.interior_count(), -1);
  for (int v : p.coarse_nodes_active) {
    const int dof = coarse.interior_index[v];
    p.coarse_dof_local[dof] = static_cast<int>(p.coarse_dofs.size());
    p.coarse_dofs.push_back(dof);
  }

  return p;
}

int saturating_radius(const SpatialMesh& coarse) {
  // diameter of the share-a-vertex element graph
  std::vector<std::vector<int>> adjacency(coarse.element_count());
  for (int e = 0; e < coarse.element_count(); ++e) {
    std::set<int> nb;
    for (int v : coarse.elements[e])
      for (int other : coarse.node_elements[v]) nb.insert(other);
    adjacency[e] = {nb.begin(), nb.end()};
  }

  int radius = 1;
  std::vector<int> dist(coarse.element_count());
  for (int start = 0; start < coarse.element_count(); ++start) {
    std::fill(dist.begin(), dist.end(), -1);
    std::vector<int> frontier = {start};
    dist[start] = 0;
    int depth = 0;
    while (!frontier.empty()) {
      std::vector<int> next;
      for (int e : frontier)
        for (int other : adjacency[e])
          if (dist[other] < 0) {
            dist[other] = depth + 1;
            next.push_back(other);
          }
      frontier = std::move(next);
      ++depth;
    }
    radius = std::max(radius, *std::max_element(dist.begin(), dist.end()));
  }
  return radius;
}

}  // namespace stlod
