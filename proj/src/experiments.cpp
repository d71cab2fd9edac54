#include "stlod/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "stlod/analysis.hpp"

namespace stlod::experiments {

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw io_error("write failed: " + path);
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Corrector blocks for a subset of space-time cells only; enough for decay
// studies around a single basis function.
CorrectorOperator build_partial_operator(const Workspace& w, const std::vector<int>& elements,
                                         const std::vector<int>& intervals, int k, int ell) {
  CorrectorOperator op;
  op.k = k;
  op.ell = ell;
  op.reuse_time_shift = false;
  op.coarse_steps = w.grid.coarse_steps;
  op.fine_per_coarse = w.grid.fine_per_coarse;
  op.mesh_fingerprint = mesh_pair_fingerprint(w.pair);
  op.grid_fingerprint = grid_fingerprint(w.grid);
  op.coeff_fingerprint = w.coeff.fingerprint();

  const bool share_step_data = periodic_matches_coarse_step(w.coeff, w.grid);
  for (int K : elements) {
    PatchOperators ops =
        build_patch_operators(w.pair, w.grid, w.coeff, w.interp, K, k, share_step_data);
    for (int i : intervals) {
      if (i < 1 || i > w.grid.coarse_steps) continue;
      for (auto [node, pyr] : overlapping_basis(w.pair, K, i)) {
        CorrectorBlock block = compute_basis_corrector(ops, w.interp, i, node, pyr, ell);
        op.blocks.emplace(block.key, std::move(block));
      }
    }
    op.patches.emplace(K, std::move(ops.patch));
  }
  return op;
}

SpaceTimeFunction basis_series(const Workspace& w, int node, int pyramid) {
  Eigen::MatrixXd unit =
      Eigen::MatrixXd::Zero(w.pair.coarse.interior_count(), w.grid.coarse_steps);
  unit(w.pair.coarse.interior_index[node], pyramid - 1) = 1.0;
  return prolong_coarse_solution(unit, w.pair, w.grid, w.interp);
}

double relative_difference(const NormContext& ctx, const SpaceTimeFunction& a,
                           const SpaceTimeFunction& b, double denom) {
  SpaceTimeFunction diff = a;
  diff -= b;
  return trial_norm(ctx, diff) / denom;
}

}  // namespace

Workspace make_workspace(const ExperimentConfig& config) {
  Workspace w;
  w.pair = build_mesh_pair(config.n_coarse, config.n_fine);
  w.grid = build_temporal_grid(config.t_final, config.coarse_steps, config.fine_per_coarse);
  const double extent = config.periodic ? w.grid.coarse_step : config.t_final;
  w.coeff = generate_random_coefficient(config.seed, config.eps_x, config.eps_t,
                                        config.coeff_low, config.coeff_high, config.periodic,
                                        extent);
  validate_resolution(w.coeff, w.pair.fine, w.grid);
  w.interp = build_quasi_interpolation(w.pair);
  return w;
}

void run_correctors(const ExperimentConfig& config, const std::string& out_path) {
  const Workspace w = make_workspace(config);
  const CorrectorOperator op =
      assemble_corrector_operator(w.pair, w.grid, w.coeff, config.resolved_k(), config.ell,
                                  config.workers, config.reuse);
  save_corrector_cache(out_path, op);
}

void run_solve(const ExperimentConfig& config, const std::string& cache_path,
               const std::string& out_csv) {
  const Workspace w = make_workspace(config);
  CorrectorOperator op =
      cache_path.empty()
          ? assemble_corrector_operator(w.pair, w.grid, w.coeff, config.resolved_k(),
                                        config.ell, config.workers, config.reuse)
          : load_corrector_cache(cache_path, w.pair, w.grid, w.coeff);
  op.zero_debug = config.zero_corrector;

  const CoarseSystem sys = assemble_coarse_system(op, w.pair, w.grid, w.coeff);
  const LoadAssembler loads(w.pair.fine, w.grid);
  const auto rhs = assemble_coarse_rhs(RhsFunction::constant(1.0), loads, w.interp, w.grid);
  const MultiscaleSolution sol = solve_multiscale(sys, rhs);

  std::string csv = "interval,node,value\n";
  for (int j = 1; j <= w.grid.coarse_steps; ++j)
    for (int x = 0; x < w.pair.coarse.interior_count(); ++x)
      csv += std::to_string(j) + "," + std::to_string(w.pair.coarse.interior_nodes[x]) + "," +
             g17(sol.coarse(x, j - 1)) + "\n";
  write_file(out_csv, csv);
}

DecayResult run_decay(const ExperimentConfig& config, const std::string& out_csv) {
  const Workspace w = make_workspace(config);
  const SpatialMesh& coarse = w.pair.coarse;

  const int center = coarse.node_id(coarse.cells_per_side / 2, coarse.cells_per_side / 2);
  if (coarse.boundary_mask[center])
    throw invalid_argument("decay: the centered node must be interior");
  const int pyramid = 1;

  std::vector<int> elements = coarse.node_elements[center];
  std::sort(elements.begin(), elements.end());
  std::vector<int> intervals = {1};
  if (w.grid.coarse_steps >= 2) intervals.push_back(2);

  const int k_sat = saturating_radius(coarse);
  const int full = w.grid.coarse_steps;
  const NormContext ctx = make_norm_context(w.pair.fine, w.grid);

  const CorrectorOperator op_sat = build_partial_operator(w, elements, intervals, k_sat, full);
  const SpaceTimeFunction q_full = corrector_of_basis(op_sat, w.pair, w.grid, center, pyramid);
  const double lambda_norm = trial_norm(ctx, basis_series(w, center, pyramid));

  DecayResult result;

  auto indicator_max = [&](const CorrectorOperator& op, bool delta, int ell_used) {
    double worst = 0.0;
    for (int K : elements)
      for (int i : intervals) {
        const double v =
            delta ? delta_estimator(op, w.pair, w.grid, ctx, w.interp, K, i, ell_used)
                  : theta_estimator(op, w.pair, w.grid, ctx, w.interp, K, i, ell_used);
        worst = std::max(worst, v);
      }
    return worst;
  };

  for (int k = 1; k <= std::min(config.decay_k_max, k_sat - 1); ++k) {
    const CorrectorOperator op_k = build_partial_operator(w, elements, intervals, k, full);
    const SpaceTimeFunction q_k = corrector_of_basis(op_k, w.pair, w.grid, center, pyramid);
    DecayRow row;
    row.param = k;
    row.rel_error = relative_difference(ctx, q_full, q_k, lambda_norm);
    if (k >= 3) {
      row.indicator = indicator_max(op_k, /*delta=*/true, -1);
      row.has_indicator = true;
    }
    result.spatial.push_back(row);
  }
  {
    // saturated radius: the localization error vanishes by construction
    const SpaceTimeFunction q_k = corrector_of_basis(op_sat, w.pair, w.grid, center, pyramid);
    DecayRow row;
    row.param = k_sat;
    row.rel_error = relative_difference(ctx, q_full, q_k, lambda_norm);
    row.indicator = indicator_max(op_sat, /*delta=*/true, -1);
    row.has_indicator = true;
    result.spatial.push_back(row);
  }

  for (int ell = 1; ell <= std::min(config.decay_ell_max, full); ++ell) {
    const SpaceTimeFunction q_ell =
        corrector_of_basis(op_sat, w.pair, w.grid, center, pyramid, ell);
    DecayRow row;
    row.param = ell;
    row.rel_error = relative_difference(ctx, q_full, q_ell, lambda_norm);
    row.indicator = indicator_max(op_sat, /*delta=*/false, ell);
    row.has_indicator = true;
    result.temporal.push_back(row);
  }

  std::string csv = "kind,param,rel_error,indicator\n";
  for (const auto& r : result.spatial)
    csv += "k," + std::to_string(r.param) + "," + g17(r.rel_error) + "," +
           (r.has_indicator ? g17(r.indicator) : "") + "\n";
  for (const auto& r : result.temporal)
    csv += "ell," + std::to_string(r.param) + "," + g17(r.rel_error) + "," +
           (r.has_indicator ? g17(r.indicator) : "") + "\n";
  write_file(out_csv, csv);
  return result;
}

ConvergenceResult run_convergence(const ExperimentConfig& config, const std::string& out_csv) {
  const double tau =
      config.t_final / (static_cast<double>(config.coarse_steps) * config.fine_per_coarse);

  ConvergenceResult result;
  std::vector<double> xs, ys_vtr, ys_l2h1;
  for (int e : config.h_exponents) {
    const double coarse_step = std::pow(2.0, -e);
    const double steps_d = config.t_final / coarse_step;
    const double per_coarse_d = coarse_step / tau;
    if (std::abs(steps_d - std::round(steps_d)) > 1e-9 ||
        std::abs(per_coarse_d - std::round(per_coarse_d)) > 1e-9)
      throw invalid_argument("convergence: 2^-" + std::to_string(e) +
                             " does not partition the time grid");

    ExperimentConfig level = config;
    level.n_coarse = e;
    level.coarse_steps = static_cast<int>(std::round(steps_d));
    level.fine_per_coarse = static_cast<int>(std::round(per_coarse_d));
    const Workspace w = make_workspace(level);

    const CorrectorOperator op = assemble_corrector_operator(
        w.pair, w.grid, w.coeff, level.resolved_k(), level.ell, level.workers, level.reuse);
    const CoarseSystem sys = assemble_coarse_system(op, w.pair, w.grid, w.coeff);
    const LoadAssembler loads(w.pair.fine, w.grid);
    const RhsFunction f = RhsFunction::constant(1.0);
    const auto rhs = assemble_coarse_rhs(f, loads, w.interp, w.grid);
    const MultiscaleSolution sol = solve_multiscale(sys, rhs);
    const SpaceTimeFunction approx = reconstruct_fine(sol.coarse, op, w.pair, w.grid, w.interp);

    const SpaceTimeFunction reference = solve_reference_fine(w.pair.fine, w.grid, w.coeff, f);
    const NormContext ctx = make_norm_context(w.pair.fine, w.grid);

    SpaceTimeFunction diff = approx;
    diff -= reference;
    ConvergenceRow row;
    row.exponent = e;
    row.rel_vtr = trial_norm(ctx, diff) / trial_norm(ctx, reference);
    row.rel_l2h1 = l2h1_norm(ctx, diff) / l2h1_norm(ctx, reference);
    result.rows.push_back(row);

    xs.push_back(-e);
    ys_vtr.push_back(std::log2(row.rel_vtr));
    ys_l2h1.push_back(std::log2(row.rel_l2h1));
  }

  result.slope_vtr = least_squares_slope(xs, ys_vtr);
  result.slope_l2h1 = least_squares_slope(xs, ys_l2h1);

  std::string csv = "H,rel_vtr,rel_l2h1\n";
  for (const auto& r : result.rows)
    csv += g17(std::pow(2.0, -r.exponent)) + "," + g17(r.rel_vtr) + "," + g17(r.rel_l2h1) + "\n";
  csv += "slope," + g17(result.slope_vtr) + "," + g17(result.slope_l2h1) + "\n";
  write_file(out_csv, csv);
  return result;
}

MultiRhsResult run_multirhs(const ExperimentConfig& config, const std::string& cache_path,
                            const std::string& out_csv) {
  const Workspace w = make_workspace(config);
  const CorrectorOperator op =
      cache_path.empty()
          ? assemble_corrector_operator(w.pair, w.grid, w.coeff, config.resolved_k(),
                                        config.ell, config.workers, config.reuse)
          : load_corrector_cache(cache_path, w.pair, w.grid, w.coeff);
  const CoarseSystem sys = assemble_coarse_system(op, w.pair, w.grid, w.coeff);
  const LoadAssembler loads(w.pair.fine, w.grid);

  // sources f = nodal(x) + a + b t + c t^2, one documented stream: per source
  // the three polynomial coefficients first, then the interior nodal values
  SplitMix64 rng(config.rhs_seed);
  std::vector<RhsFunction> sources(config.rhs_count);
  for (auto& f : sources) {
    f.time_poly = {rng.next_double(), rng.next_double(), rng.next_double()};
    f.nodal = Eigen::VectorXd::Zero(w.pair.fine.node_count());
    for (int dof = 0; dof < w.pair.fine.interior_count(); ++dof)
      f.nodal[w.pair.fine.interior_nodes[dof]] = rng.next_double();
  }

  // online phase: nothing here may touch fine-space systems or recompute blocks
  MultiRhsResult result;
  const uint64_t blocks_before = counters().corrector_blocks_computed.load();
  const uint64_t fine_before = counters().fine_space_solves.load();
  std::vector<MultiscaleSolution> solutions;
  solutions.reserve(sources.size());
  for (const auto& f : sources)
    solutions.push_back(solve_multiscale(sys, assemble_coarse_rhs(f, loads, w.interp, w.grid)));
  result.blocks_computed_during_online =
      counters().corrector_blocks_computed.load() - blocks_before;
  result.fine_solves_during_online = counters().fine_space_solves.load() - fine_before;

  // measurement phase
  const NormContext ctx = make_norm_context(w.pair.fine, w.grid);
  for (size_t r = 0; r < sources.size(); ++r) {
    const SpaceTimeFunction approx =
        reconstruct_fine(solutions[r].coarse, op, w.pair, w.grid, w.interp);
    const SpaceTimeFunction reference =
        solve_reference_fine(w.pair.fine, w.grid, w.coeff, sources[r]);
    SpaceTimeFunction diff = approx;
    diff -= reference;
    const double err = config.norm == "l2h1"
                           ? l2h1_norm(ctx, diff) / l2h1_norm(ctx, reference)
                           : trial_norm(ctx, diff) / trial_norm(ctx, reference);
    result.errors.push_back(err);
  }

  const double lo = *std::min_element(result.errors.begin(), result.errors.end());
  const double hi = *std::max_element(result.errors.begin(), result.errors.end());
  const double width = (hi - lo) / config.bins;
  std::vector<int> counts(config.bins, 0);
  for (double e : result.errors) {
    const int bin = width > 0.0 ? static_cast<int>((e - lo) / width) : 0;
    counts[std::clamp(bin, 0, config.bins - 1)]++;
  }
  std::string csv = "bin_left,count\n";
  for (int b = 0; b < config.bins; ++b)
    csv += g17(lo + b * width) + "," + std::to_string(counts[b]) + "\n";
  write_file(out_csv, csv);
  return result;
}

EstimateResult run_estimate(const ExperimentConfig& config, const std::string& cache_path,
                            const std::string& out_csv) {
  const Workspace w = make_workspace(config);
  CorrectorOperator op =
      cache_path.empty()
          ? assemble_corrector_operator(w.pair, w.grid, w.coeff, config.resolved_k(),
                                        config.ell, config.workers, config.reuse)
          : load_corrector_cache(cache_path, w.pair, w.grid, w.coeff);
  op.zero_debug = config.zero_corrector;
  if (op.k < 3)
    throw invalid_argument("estimate: the spatial indicator needs k >= 3");

  const NormContext ctx = make_norm_context(w.pair.fine, w.grid);
  EstimateResult result;
  for (const auto& [K, patch] : op.patches) {
    for (int i = 1; i <= w.grid.coarse_steps; ++i) {
      EstimateRow row;
      row.element = K;
      row.interval = i;
      row.delta = delta_estimator(op, w.pair, w.grid, ctx, w.interp, K, i);
      row.theta = theta_estimator(op, w.pair, w.grid, ctx, w.interp, K, i);
      result.delta_max = std::max(result.delta_max, row.delta);
      result.theta_max = std::max(result.theta_max, row.theta);
      result.rows.push_back(row);
    }
  }

  std::string csv = "element,interval,delta,theta\n";
  for (const auto& r : result.rows)
    csv += std::to_string(r.element) + "," + std::to_string(r.interval) + "," + g17(r.delta) +
           "," + g17(r.theta) + "\n";
  csv += "-1,-1," + g17(result.delta_max) + "," + g17(result.theta_max) + "\n";
  write_file(out_csv, csv);
  return result;
}

}  // namespace stlod::experiments
