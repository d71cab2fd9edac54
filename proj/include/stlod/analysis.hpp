#pragma once

#include <Eigen/SparseCholesky>
#include <memory>

#include "stlod/corrector.hpp"
#include "stlod/stfunction.hpp"

namespace stlod {

// Fine-space matrices backing the discrete norms: the trial norm combines the
// dual norm of the time derivative with the gradient of the per-interval
// temporal mean.
struct NormContext {
  const SpatialMesh* mesh = nullptr;
  TemporalGrid grid;
  Sparse mass;   // interior
  Sparse k_lap;  // unit-coefficient stiffness, interior
  std::shared_ptr<Eigen::SimplicialLDLT<SparseCol>> lap_solver;
};

NormContext make_norm_context(const SpatialMesh& fine, const TemporalGrid& grid);

// Discrete dual norm sup_v <g, v> / ||grad v|| = sqrt(r^T K^-1 r), r = M g.
double hminus1_norm(const NormContext& ctx, const Eigen::VectorXd& g);

// sqrt( sum_i tau ||(u^i - u^{i-1})/tau||_{-1}^2 + tau ||grad (u^i + u^{i-1})/2||^2 )
double trial_norm(const NormContext& ctx, const SpaceTimeFunction& u);

// Piecewise-constant-in-time input: one spatial vector per fine interval.
double test_norm(const NormContext& ctx, const std::vector<Eigen::VectorXd>& interval_values);

// Exact integral of ||grad u(t)||^2 for piecewise linear u:
// (tau/3)(|a|^2 + a.b + |b|^2) per interval.
double l2h1_norm(const NormContext& ctx, const SpaceTimeFunction& u);

// A posteriori localization indicators. Both reduce to a generalized
// symmetric eigenvalue problem of dimension <= 6 over the local trial shape
// functions of the space-time cell (K, i).
double delta_estimator(const CorrectorOperator& op, const SpatialMeshPair& pair,
                       const TemporalGrid& grid, const NormContext& ctx,
                       const InterpolationOperator& interp, int K, int interval,
                       int ell_used = -1);

double theta_estimator(const CorrectorOperator& op, const SpatialMeshPair& pair,
                       const TemporalGrid& grid, const NormContext& ctx,
                       const InterpolationOperator& interp, int K, int interval,
                       int ell_used = -1);

// Shared Gram-matrix machinery, exposed so tests can cross-check the
// eigenvalue route against direct Rayleigh quotients.
struct EstimatorGrams {
  Eigen::MatrixXd out_delta;  // ring-restricted trial-norm Gram of the shape correctors
  Eigen::MatrixXd out_theta;  // end-slice gradient Gram
  Eigen::MatrixXd in;         // trial-norm Gram of the cut-off local shapes
  double theta_prefactor = 0.0;
};

EstimatorGrams estimator_grams(const CorrectorOperator& op, const SpatialMeshPair& pair,
                               const TemporalGrid& grid, const NormContext& ctx,
                               const InterpolationOperator& interp, int K, int interval,
                               int ell_used = -1);

// Largest generalized eigenvalue of G_out x = mu G_in x (mu = estimator^2).
double largest_generalized_eigenvalue(const Eigen::MatrixXd& g_out, const Eigen::MatrixXd& g_in,
                                      const std::string& where);

}  // namespace stlod
