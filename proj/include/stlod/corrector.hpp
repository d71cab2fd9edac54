#pragma once

#include <Eigen/SparseCholesky>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "stlod/assembly.hpp"
#include "stlod/interpolation.hpp"
#include "stlod/stfunction.hpp"

namespace stlod {

// A basis corrector is identified by the coarse element K whose space-time
// cell drives it, the coarse interval i of that cell, and the coarse basis
// function: spatial node times temporal pyramid index (i or i-1).
struct BlockKey {
  int element = 0;
  int interval = 0;
  int node = 0;
  int pyramid = 0;

  auto operator<=>(const BlockKey&) const = default;
};

// Chain of per-interval solutions xi_j, j = i .. i+len-1. Each interval
// starts from zero; the represented function adds a linear in-time ramp
// carrying the previous endpoint down to zero, plus a closing ramp after the
// last interval unless the chain hits the final time.
struct CorrectorBlock {
  BlockKey key;
  std::vector<Eigen::MatrixXd> intervals;  // each: active fine dofs x N_t, column m-1 = value at local step m
  double constraint_residual = 0.0;        // max over the chain of ||I_{H,k} xi_j(T_j)||_inf
};

// Patch-local matrices and cached factorizations for the sequential solves
// on one spatial patch.
struct PatchOperators {
  Patch patch;
  const SpatialMeshPair* pair = nullptr;
  const TemporalGrid* grid = nullptr;
  const Coefficient* coeff = nullptr;
  bool reuse_time_shift = false;

  Sparse M;        // patch mass, active x active
  Sparse MK;       // mass restricted to the center element
  std::map<int, Sparse> S;   // slab id -> patch stiffness
  std::map<int, Sparse> SK;  // slab id -> stiffness restricted to the center element
  Sparse interp;   // I_{H,k}: active coarse x active fine
  Sparse B;        // tau * I_{H,k}^T M_{H,k}: active fine x active coarse

  std::map<int, std::shared_ptr<Eigen::SimplicialLDLT<SparseCol>>> step_solver;
  struct SchurData {
    Eigen::MatrixXd matrix;  // I_{H,k} X_last with A X = B
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  };
  std::map<int, std::shared_ptr<SchurData>> schur;  // keyed by interval class

  int slab_of(int fine_step) const;
  int interval_class(int coarse_interval) const;
  const Sparse& stiffness(int slab);
  const Sparse& center_stiffness(int slab);
  Eigen::SimplicialLDLT<SparseCol>& solver(int slab);
  const SchurData& schur_data(int coarse_interval);
};

PatchOperators build_patch_operators(const SpatialMeshPair& pair, const TemporalGrid& grid,
                                     const Coefficient& coeff,
                                     const InterpolationOperator& interp, int K, int k,
                                     bool reuse_time_shift);

// Right-hand side of one constrained interval solve: a basis drive at the
// chain start and/or the carry terms of the previous endpoint.
struct IntervalRhs {
  const Eigen::VectorXd* basis_spatial = nullptr;  // patch-local hat values
  bool rising = true;
  const Eigen::VectorXd* carry = nullptr;  // xi_{j-1}(T_{j-1}), patch-local
};

struct IntervalSolveResult {
  Eigen::MatrixXd xi;       // active fine dofs x N_t
  Eigen::VectorXd lambda;   // active coarse dofs
  double constraint_residual = 0.0;
};

IntervalSolveResult solve_constrained_interval(PatchOperators& ops, int interval,
                                               const IntervalRhs& rhs);

CorrectorBlock compute_basis_corrector(PatchOperators& ops,
                                       const InterpolationOperator& interp, int interval,
                                       int node, int pyramid, int ell);

// Read view of a logical block: the stored chain (canonical under periodic
// reuse), how many intervals of it apply, and whether the closing ramp
// exists for this placement.
struct BlockView {
  const CorrectorBlock* block = nullptr;
  const Patch* patch = nullptr;
  int first_interval = 0;
  int length = 0;
  bool ramp = false;
  int node = 0;
  int pyramid = 0;
};

struct CorrectorOperator {
  int k = 0;
  int ell = 0;
  bool reuse_time_shift = false;
  bool zero_debug = false;  // diagnostics: treat all blocks as zero
  int coarse_steps = 0;
  int fine_per_coarse = 0;
  uint64_t mesh_fingerprint = 0;
  uint64_t grid_fingerprint = 0;
  uint64_t coeff_fingerprint = 0;

  std::map<BlockKey, CorrectorBlock> blocks;
  std::map<int, Patch> patches;  // per coarse element

  BlockView resolve(const BlockKey& logical, int ell_used = -1) const;
  void for_each_logical(const SpatialMeshPair& pair,
                        const std::function<void(const BlockKey&, const BlockView&)>& fn,
                        int ell_used = -1) const;
  double max_constraint_residual() const;
  size_t logical_block_count(const SpatialMeshPair& pair) const;
};

uint64_t mesh_pair_fingerprint(const SpatialMeshPair& pair);
uint64_t grid_fingerprint(const TemporalGrid& grid);

// Time-shift reuse of chains is valid when the coefficient period equals the
// coarse time step.
bool periodic_matches_coarse_step(const Coefficient& coeff, const TemporalGrid& grid);

// Basis functions whose support meets the space-time cell (K, i): the
// interior vertices of K paired with pyramid index i and, for i >= 2, i-1.
std::vector<std::pair<int, int>> overlapping_basis(const SpatialMeshPair& pair, int K,
                                                   int interval);

CorrectorOperator assemble_corrector_operator(const SpatialMeshPair& pair,
                                              const TemporalGrid& grid,
                                              const Coefficient& coeff, int k, int ell,
                                              int worker_count = 1,
                                              bool reuse_time_shift = true);

// Fine series of the function a block represents, sampled at the global fine
// steps it covers. Column s is the value at fine time first_step + s; column
// 0 (the chain start) is zero.
struct BlockSeries {
  int first_step = 0;  // fine node index of the chain start, = (i-1)*N_t
  Eigen::MatrixXd values;  // active fine dofs x (covered steps + 1)
};
BlockSeries block_series(const BlockView& view, const TemporalGrid& grid);

// Q v for a coarse space-time function given by nodal coefficients
// (coarse interior dofs x N_T, column i-1 for pyramid i).
SpaceTimeFunction apply_corrector(const CorrectorOperator& op, const SpatialMeshPair& pair,
                                  const TemporalGrid& grid,
                                  const Eigen::MatrixXd& coarse_values);

// Q Lambda for a single coarse basis function, optionally with a smaller
// temporal truncation than the operator was built with.
SpaceTimeFunction corrector_of_basis(const CorrectorOperator& op, const SpatialMeshPair& pair,
                                     const TemporalGrid& grid, int node, int pyramid,
                                     int ell_used = -1);

void save_corrector_cache(const std::string& path, const CorrectorOperator& op);
CorrectorOperator load_corrector_cache(const std::string& path, const SpatialMeshPair& pair,
                                       const TemporalGrid& grid, const Coefficient& coeff);

}  // namespace stlod
