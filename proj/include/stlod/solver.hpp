#pragma once

#include <Eigen/LU>
#include <memory>
#include <vector>

#include "stlod/analysis.hpp"
#include "stlod/corrector.hpp"

namespace stlod {

// Coarse space-time system: for test interval j and history offset m, block
// (j, m) pairs the corrected trial functions of interval j-m against the
// coarse tents of interval j. Support arithmetic keeps m within 0..ell, so a
// step of the sequential solve consumes at most ell+1 blocks. With a
// time-periodic coefficient and shift reuse the blocks repeat in j and are
// shared.
struct CoarseSystem {
  int n = 0;     // coarse interior dofs
  int N_T = 0;
  int ell = 0;
  bool periodic_blocks = false;
  uint64_t coeff_fingerprint = 0;

  // blocks[j-1][m], null when absent (m > j-1)
  std::vector<std::vector<std::shared_ptr<const Eigen::MatrixXd>>> blocks;
  std::vector<std::shared_ptr<Eigen::PartialPivLU<Eigen::MatrixXd>>> step_lu;  // per j, shared

  const Eigen::MatrixXd* block(int j, int m) const {
    if (j < 1 || j > N_T || m < 0 || m >= static_cast<int>(blocks[j - 1].size()))
      return nullptr;
    return blocks[j - 1][m] ? blocks[j - 1][m].get() : nullptr;
  }
};

CoarseSystem assemble_coarse_system(const CorrectorOperator& op, const SpatialMeshPair& pair,
                                    const TemporalGrid& grid, const Coefficient& coeff);

// F_j = integral of <f, coarse tent> over coarse interval j, accumulated from
// the fine-interval loads.
std::vector<Eigen::VectorXd> assemble_coarse_rhs(const RhsFunction& f,
                                                 const LoadAssembler& loads,
                                                 const InterpolationOperator& interp,
                                                 const TemporalGrid& grid);

struct MultiscaleSolution {
  Eigen::MatrixXd coarse;  // coarse interior dofs x N_T
};

MultiscaleSolution solve_multiscale(const CoarseSystem& system,
                                    const std::vector<Eigen::VectorXd>& rhs_blocks);

std::vector<MultiscaleSolution> solve_multi_rhs(
    const CoarseSystem& system, const std::vector<std::vector<Eigen::VectorXd>>& rhs_sets);

// (Id + Q) u: prolongation of the coarse pyramid expansion plus the corrector.
SpaceTimeFunction reconstruct_fine(const Eigen::MatrixXd& coarse_values,
                                   const CorrectorOperator& op, const SpatialMeshPair& pair,
                                   const TemporalGrid& grid,
                                   const InterpolationOperator& interp);

// Prolongation part alone (piecewise linear in coarse time, sampled at the
// fine steps).
SpaceTimeFunction prolong_coarse_solution(const Eigen::MatrixXd& coarse_values,
                                          const SpatialMeshPair& pair,
                                          const TemporalGrid& grid,
                                          const InterpolationOperator& interp);

// Fine reference: the space-time Petrov-Galerkin problem reduced to its
// Crank-Nicolson stepping form, with the coefficient frozen at each fine
// interval midpoint.
SpaceTimeFunction solve_reference_fine(const SpatialMesh& fine, const TemporalGrid& grid,
                                       const Coefficient& coeff, const RhsFunction& f);

}  // namespace stlod
