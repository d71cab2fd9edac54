#include "stlod/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <set>

namespace stlod {

NormContext make_norm_context(const SpatialMesh& fine, const TemporalGrid& grid) {
  NormContext ctx;
  ctx.mesh = &fine;
  ctx.grid = grid;
  ctx.mass = mass_matrix(fine, DofSet::interior);
  ctx.k_lap = unit_stiffness(fine, DofSet::interior);
  ctx.lap_solver = std::make_shared<Eigen::SimplicialLDLT<SparseCol>>();
  ctx.lap_solver->compute(SparseCol(ctx.k_lap));
  if (ctx.lap_solver->info() != Eigen::Success)
    throw numerical_failure("norm context: Laplacian factorization failed");
  return ctx;
}

double hminus1_norm(const NormContext& ctx, const Eigen::VectorXd& g) {
  if (g.size() != ctx.mass.rows())
    throw invalid_argument("hminus1_norm: vector must hold interior dofs");
  const Eigen::VectorXd r = ctx.mass * g;
  const Eigen::VectorXd w = ctx.lap_solver->solve(r);
  return std::sqrt(std::max(0.0, r.dot(w)));
}

double trial_norm(const NormContext& ctx, const SpaceTimeFunction& u) {
  if (u.steps() != ctx.grid.total_fine_steps())
    throw invalid_argument("trial_norm: function does not match the time grid");
  const double tau = ctx.grid.fine_step;
  double acc = 0.0;
  for (int g = 1; g <= u.steps(); ++g) {
    const Eigen::VectorXd dot = (u.slices[g] - u.slices[g - 1]) / tau;
    const Eigen::VectorXd r = ctx.mass * dot;
    acc += tau * r.dot(ctx.lap_solver->solve(r));
    const Eigen::VectorXd mean = 0.5 * (u.slices[g] + u.slices[g - 1]);
    acc += tau * mean.dot(ctx.k_lap * mean);
  }
  return std::sqrt(std::max(0.0, acc));
}

double test_norm(const NormContext& ctx, const std::vector<Eigen::VectorXd>& interval_values) {
  if (static_cast<int>(interval_values.size()) != ctx.grid.total_fine_steps())
    throw invalid_argument("test_norm: one spatial vector per fine interval");
  const double tau = ctx.grid.fine_step;
  double acc = 0.0;
  for (const auto& v : interval_values) acc += tau * v.dot(ctx.k_lap * v);
  return std::sqrt(std::max(0.0, acc));
}

double l2h1_norm(const NormContext& ctx, const SpaceTimeFunction& u) {
  if (u.steps() != ctx.grid.total_fine_steps())
    throw invalid_argument("l2h1_norm: function does not match the time grid");
  const double tau = ctx.grid.fine_step;
  double acc = 0.0;
  for (int g = 1; g <= u.steps(); ++g) {
    const Eigen::VectorXd& a = u.slices[g - 1];
    const Eigen::VectorXd& b = u.slices[g];
    acc += (tau / 3.0) *
           (a.dot(ctx.k_lap * a) + a.dot(ctx.k_lap * b) + b.dot(ctx.k_lap * b));
  }
  return std::sqrt(std::max(0.0, acc));
}

namespace {

std::vector<int> patch_element_set(const SpatialMesh& coarse, int K, int radius) {
  std::vector<int> set = {K};
  for (int step = 0; step < radius; ++step) {
    if (static_cast<int>(set.size()) == coarse.element_count()) break;
    set = one_layer(coarse, set);
  }
  return set;
}

std::vector<int> fine_children_of(const SpatialMeshPair& pair, const std::vector<int>& coarse_elements) {
  std::vector<int> out;
  for (int e : coarse_elements)
    for (int c : pair.element_children[e]) out.push_back(c);
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::VectorXd scatter_to_global(const Patch& patch, const Eigen::Ref<const Eigen::VectorXd>& local,
                                  int global_size) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(global_size);
  for (size_t l = 0; l < patch.fine_dofs.size(); ++l)
    out[patch.fine_dofs[l]] = local[static_cast<int>(l)];
  return out;
}

}  // namespace

EstimatorGrams estimator_grams(const CorrectorOperator& op, const SpatialMeshPair& pair,
                               const TemporalGrid& grid, const NormContext& ctx,
                               const InterpolationOperator& interp, int K, int interval,
                               int ell_used) {
  if (interval < 1 || interval > grid.coarse_steps)
    throw invalid_argument("estimator: interval out of range");

  const auto shapes = overlapping_basis(pair, K, interval);
  const int ns = static_cast<int>(shapes.size());
  if (ns == 0)
    throw invalid_argument("estimator: element has no interior vertices");

  const int n_global = pair.fine.interior_count();
  const double tau = grid.fine_step;
  const int nt = grid.fine_per_coarse;

  // ring N^k(K) \ N^{k-3}(K), with N^0(K) = {K}; only defined for k >= 3
  std::vector<int> ring;
  if (op.k >= 3) {
    const auto outer = patch_element_set(pair.coarse, K, op.k);
    const auto inner = patch_element_set(pair.coarse, K, op.k - 3);
    std::set<int> inner_set(inner.begin(), inner.end());
    for (int e : outer)
      if (!inner_set.count(e)) ring.push_back(e);
  }

  const auto ring_children = fine_children_of(pair, ring);
  const auto center_children = pair.element_children[K];
  const Sparse mass_ring = mass_over_elements(pair.fine, ring_children, DofSet::interior);
  std::vector<double> ones_ring(ring_children.size(), 1.0);
  const Sparse lap_ring =
      stiffness_over_elements(pair.fine, ring_children, ones_ring, DofSet::interior);
  const Sparse mass_center = mass_over_elements(pair.fine, center_children, DofSet::interior);
  std::vector<double> ones_center(center_children.size(), 1.0);
  const Sparse lap_center =
      stiffness_over_elements(pair.fine, center_children, ones_center, DofSet::interior);

  std::vector<BlockView> views;
  std::vector<BlockSeries> series;
  for (auto [node, pyr] : shapes) {
    views.push_back(op.resolve({K, interval, node, pyr}, ell_used));
    series.push_back(block_series(views.back(), grid));
  }
  const int span = static_cast<int>(series[0].values.cols()) - 1;
  const bool zero = op.zero_debug;

  EstimatorGrams grams;
  grams.out_delta = Eigen::MatrixXd::Zero(ns, ns);
  grams.out_theta = Eigen::MatrixXd::Zero(ns, ns);
  grams.in = Eigen::MatrixXd::Zero(ns, ns);
  grams.theta_prefactor =
      pair.coarse.spacing / std::sqrt(grid.coarse_step) + std::sqrt(grid.coarse_step);

  // ring-restricted trial-norm Gram of the shape correctors
  if (!zero && op.k >= 3) {
    for (int s = 1; s <= span; ++s) {
      std::vector<Eigen::VectorXd> q(ns), y(ns), mean(ns), z(ns);
      for (int a = 0; a < ns; ++a) {
        const Eigen::VectorXd diff = scatter_to_global(
            *views[a].patch, (series[a].values.col(s) - series[a].values.col(s - 1)) / tau,
            n_global);
        q[a] = mass_ring * diff;
        y[a] = ctx.lap_solver->solve(q[a]);
        mean[a] = scatter_to_global(
            *views[a].patch, 0.5 * (series[a].values.col(s) + series[a].values.col(s - 1)),
            n_global);
        z[a] = lap_ring * mean[a];
      }
      for (int a = 0; a < ns; ++a)
        for (int b = a; b < ns; ++b) {
          const double v = tau * (q[a].dot(y[b]) + mean[a].dot(z[b]));
          grams.out_delta(a, b) += v;
          if (b != a) grams.out_delta(b, a) += v;
        }
    }
  }

  // gradient Gram of the chain end values at T_{i+len-1}
  if (!zero) {
    std::vector<Eigen::VectorXd> ends(ns);
    const int end_col = views[0].length * nt;
    for (int a = 0; a < ns; ++a)
      ends[a] = scatter_to_global(*views[a].patch, series[a].values.col(end_col), n_global);
    for (int a = 0; a < ns; ++a) {
      const Eigen::VectorXd ka = ctx.k_lap * ends[a];
      for (int b = a; b < ns; ++b) {
        grams.out_theta(a, b) = ka.dot(ends[b]);
        grams.out_theta(b, a) = grams.out_theta(a, b);
      }
    }
  }

  // trial-norm Gram of the cut-off shapes themselves: the dual part pairs the
  // element-masked load against the global Laplacian, the gradient part
  // integrates over K only
  {
    std::vector<Eigen::VectorXd> lam(ns), qk(ns), yk(ns), kk(ns);
    std::vector<double> slope(ns);
    for (int a = 0; a < ns; ++a) {
      lam[a] = Eigen::VectorXd::Zero(n_global);
      const int dof = pair.coarse.interior_index[shapes[a].first];
      for (SparseCol::InnerIterator it(interp.prolongation, dof); it; ++it)
        lam[a][it.row()] = it.value();
      slope[a] = (shapes[a].second == interval ? 1.0 : -1.0) / grid.coarse_step;
      qk[a] = mass_center * lam[a];
      yk[a] = ctx.lap_solver->solve(qk[a]);
      kk[a] = lap_center * lam[a];
    }
    auto tmean = [&](int a, int m) {
      return shapes[a].second == interval ? (m - 0.5) / nt : (nt - m + 0.5) / nt;
    };
    for (int a = 0; a < ns; ++a)
      for (int b = a; b < ns; ++b) {
        double v = nt * tau * slope[a] * slope[b] * qk[a].dot(yk[b]);
        double gram_t = 0.0;
        for (int m = 1; m <= nt; ++m) gram_t += tmean(a, m) * tmean(b, m);
        v += tau * gram_t * lam[a].dot(kk[b]);
        grams.in(a, b) += v;
        if (b != a) grams.in(b, a) += v;
      }
  }

  return grams;
}

double largest_generalized_eigenvalue(const Eigen::MatrixXd& g_out, const Eigen::MatrixXd& g_in,
                                      const std::string& where) {
  // The local shape Gram carries one structural null direction whenever both
  // temporal edges are present: the partition of unity times a constant time
  // profile is constant on the space-time cell, so its cut seminorm vanishes,
  // and so does its corrector drive. The quotient is evaluated on the
  // complement; a null direction with nonvanishing numerator is a genuine
  // failure.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> in_eig(g_in);
  if (in_eig.info() != Eigen::Success)
    throw numerical_failure("trial Gram eigensolve failed at " + where);
  const Eigen::VectorXd evals = in_eig.eigenvalues();
  const double emax = evals.cwiseAbs().maxCoeff();
  if (!(emax > 0.0)) throw numerical_failure("degenerate local trial Gram at " + where);

  const double cutoff = 1e-12 * emax;
  std::vector<int> keep;
  const double out_scale = std::max(g_out.cwiseAbs().maxCoeff(), 1e-300);
  for (int idx = 0; idx < evals.size(); ++idx) {
    if (evals[idx] > cutoff) {
      keep.push_back(idx);
    } else {
      const Eigen::VectorXd v = in_eig.eigenvectors().col(idx);
      if (v.dot(g_out * v) > 1e-8 * out_scale)
        throw numerical_failure("degenerate local trial Gram at " + where);
    }
  }
  if (keep.empty()) throw numerical_failure("degenerate local trial Gram at " + where);

  Eigen::MatrixXd basis(g_in.rows(), static_cast<int>(keep.size()));
  for (size_t c = 0; c < keep.size(); ++c)
    basis.col(static_cast<int>(c)) =
        in_eig.eigenvectors().col(keep[c]) / std::sqrt(evals[keep[c]]);
  const Eigen::MatrixXd reduced = basis.transpose() * g_out * basis;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> red(reduced);
  if (red.info() != Eigen::Success)
    throw numerical_failure("generalized eigenvalue solve failed at " + where);
  return std::max(0.0, red.eigenvalues().maxCoeff());
}

double delta_estimator(const CorrectorOperator& op, const SpatialMeshPair& pair,
                       const TemporalGrid& grid, const NormContext& ctx,
                       const InterpolationOperator& interp, int K, int interval,
                       int ell_used) {
  if (op.k < 3)
    throw invalid_argument("delta_estimator: the ring needs spatial radius k >= 3");
  const auto grams = estimator_grams(op, pair, grid, ctx, interp, K, interval, ell_used);
  if (op.zero_debug) return 0.0;
  const std::string where = "(K=" + std::to_string(K) + ", i=" + std::to_string(interval) + ")";
  return std::sqrt(largest_generalized_eigenvalue(grams.out_delta, grams.in, where));
}

double theta_estimator(const CorrectorOperator& op, const SpatialMeshPair& pair,
                       const TemporalGrid& grid, const NormContext& ctx,
                       const InterpolationOperator& interp, int K, int interval,
                       int ell_used) {
  const auto grams = estimator_grams(op, pair, grid, ctx, interp, K, interval, ell_used);
  if (op.zero_debug) return 0.0;
  const std::string where = "(K=" + std::to_string(K) + ", i=" + std::to_string(interval) + ")";
  return grams.theta_prefactor *
         std::sqrt(largest_generalized_eigenvalue(grams.out_theta, grams.in, where));
}

}  // namespace stlod
