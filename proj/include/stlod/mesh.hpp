#pragma once

#include <array>
#include <vector>

#include "stlod/common.hpp"

namespace stlod {

// Uniform triangulation of the unit square: 2^n x 2^n cells, each split into
// two triangles along the bottom-left/top-right diagonal. All meshes in the
// solver are of this type; grids stay immutable after construction.
struct SpatialMesh {
  int subdivision_exponent = 0;  // n
  int cells_per_side = 0;        // 2^n
  double spacing = 0.0;          // 2^-n
  double mesh_size = 0.0;        // longest element diameter, sqrt(2)*2^-n

  std::vector<std::array<double, 2>> nodes;
  std::vector<std::array<int, 3>> elements;  // counterclockwise node triples
  std::vector<uint8_t> boundary_mask;        // node on the boundary of the square
  std::vector<int> interior_index;           // node id -> interior dof id, -1 on the boundary
  std::vector<int> interior_nodes;           // interior dof id -> node id
  std::vector<std::vector<int>> node_elements;  // node id -> incident element ids

  int node_count() const { return static_cast<int>(nodes.size()); }
  int element_count() const { return static_cast<int>(elements.size()); }
  int interior_count() const { return static_cast<int>(interior_nodes.size()); }

  int node_id(int ix, int iy) const { return iy * (cells_per_side + 1) + ix; }
  double element_area() const { return 0.5 * spacing * spacing; }
  std::array<double, 2> centroid(int element) const;
};

SpatialMesh build_uniform_mesh(int subdivision_exponent);

// Nested coarse/fine pair; the fine mesh refines the coarse one so that every
// coarse P1 function is exactly representable on the fine mesh.
struct SpatialMeshPair {
  SpatialMesh coarse;
  SpatialMesh fine;
  int refinement_levels = 0;                      // r, h = H * 2^-r
  std::vector<std::vector<int>> element_children; // coarse element -> fine elements
  std::vector<int> node_embedding;                // coarse node -> coinciding fine node
};

SpatialMeshPair build_mesh_pair(int coarse_exponent, int fine_exponent);

// Two-level time grid: N_T coarse intervals, each subdivided into N_t fine
// steps. Fine steps are indexed globally, 1-based: step g covers
// [fine_time(g-1), fine_time(g)].
struct TemporalGrid {
  double t_final = 0.0;
  int coarse_steps = 0;     // N_T
  int fine_per_coarse = 0;  // N_t
  double coarse_step = 0.0;
  double fine_step = 0.0;

  int total_fine_steps() const { return coarse_steps * fine_per_coarse; }
  double fine_time(int g) const { return fine_step * g; }
  double fine_midpoint(int g) const { return fine_step * (g - 0.5); }
  double coarse_time(int i) const { return coarse_step * i; }
  // coarse interval containing fine step g
  int coarse_of(int g) const { return (g - 1) / fine_per_coarse + 1; }
  int first_step_of(int i) const { return (i - 1) * fine_per_coarse + 1; }
};

TemporalGrid build_temporal_grid(double t_final, int coarse_steps, int fine_per_coarse);

// Element patch of radius k around a coarse element, truncated at the domain
// boundary. Active nodes are the ones strictly inside the patch and the
// domain; localized functions vanish on the patch boundary.
struct Patch {
  int center_element = -1;
  int radius = 0;
  bool saturated = false;  // patch covers the whole domain

  std::vector<int> coarse_elements;     // sorted
  std::vector<int> fine_elements;       // children of coarse_elements, sorted
  std::vector<int> fine_nodes_active;   // global fine node ids, sorted
  std::vector<int> coarse_nodes_active; // global coarse node ids, sorted

  // scatter maps between interior dof numberings
  std::vector<int> fine_dofs;        // local -> global fine interior dof
  std::vector<int> coarse_dofs;      // local -> global coarse interior dof
  std::vector<int> fine_dof_local;   // global fine interior dof -> local, -1 outside
  std::vector<int> coarse_dof_local; // global coarse interior dof -> local, -1 outside

  int fine_count() const { return static_cast<int>(fine_dofs.size()); }
  int coarse_count() const { return static_cast<int>(coarse_dofs.size()); }
};

// One layer of coarse elements around a set: all elements sharing a vertex.
std::vector<int> one_layer(const SpatialMesh& mesh, const std::vector<int>& elements);

Patch make_patch(const SpatialMeshPair& pair, int center_element, int radius);

// Smallest radius for which every patch covers the whole domain.
int saturating_radius(const SpatialMesh& coarse);

}  // namespace stlod
