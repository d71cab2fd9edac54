#pragma once

#include <Eigen/Dense>

#include "stlod/corrector.hpp"
#include "stlod/solver.hpp"

// Independent reference implementations used only by tests. They favor
// directness over speed: dense or monolithic solves, plain loops.
namespace stlod::oracle {

// Drive of one constrained interval, rebuilt with plain loops (duplicates the
// production formula on purpose).
Eigen::MatrixXd interval_rhs_columns(PatchOperators& ops, int interval,
                                     const IntervalRhs& rhs);

// Solves the full saddle-point system of one coarse interval by a dense
// factorization: block-bidiagonal Crank-Nicolson rows, stacked multiplier
// columns, endpoint constraint row. Returns xi (active fine dofs x N_t).
Eigen::MatrixXd dense_kkt_interval(PatchOperators& ops, int interval,
                                   const IntervalRhs& rhs);

// Chain of dense interval solves mirroring compute_basis_corrector.
std::vector<Eigen::MatrixXd> dense_kkt_chain(PatchOperators& ops,
                                             const InterpolationOperator& interp,
                                             int interval, int node, int pyramid, int ell);

// Fine space-time Petrov-Galerkin system assembled as one sparse matrix over
// all fine steps and solved monolithically.
SpaceTimeFunction direct_spacetime_solve(const SpatialMesh& fine, const TemporalGrid& grid,
                                         const Coefficient& coeff, const RhsFunction& f);

// Basis corrector from one monolithic constrained solve on the full grid
// (all coarse intervals coupled), for the ideal-method cross-check.
SpaceTimeFunction monolithic_basis_corrector(const SpatialMeshPair& pair,
                                             const TemporalGrid& grid,
                                             const Coefficient& coeff,
                                             const InterpolationOperator& interp, int node,
                                             int pyramid);

// Space-time pairing of a fine trial function against the coarse tent of one
// test interval, by plain summation over the fine rows.
double pair_against_tent(const SpatialMeshPair& pair, const TemporalGrid& grid,
                         const Coefficient& coeff, const InterpolationOperator& interp,
                         const SpaceTimeFunction& w, int test_dof, int test_interval);

// Trial function P Lambda as a fine space-time series.
SpaceTimeFunction basis_function_series(const SpatialMeshPair& pair, const TemporalGrid& grid,
                                        const InterpolationOperator& interp, int node,
                                        int pyramid);

// Trial norm evaluated with 4-point Gauss quadrature in time and a dense
// Laplacian factorization.
double trial_norm_gauss(const SpatialMesh& fine, const TemporalGrid& grid,
                        const SpaceTimeFunction& u);

double l2h1_norm_gauss(const SpatialMesh& fine, const TemporalGrid& grid,
                       const SpaceTimeFunction& u);

}  // namespace stlod::oracle
