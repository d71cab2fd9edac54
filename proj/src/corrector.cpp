#include "stlod/corrector.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <thread>

namespace stlod {

namespace {

constexpr char kMagic[9] = {'S', 'T', 'L', 'O', 'D', 'C', 'O', 'R', 'R'};
constexpr uint32_t kVersion = 1;

std::vector<double> slab_values(const SpatialMesh& mesh, const std::vector<int>& elements,
                                const Coefficient& coeff, int slab) {
  std::vector<double> vals(elements.size());
  for (size_t idx = 0; idx < elements.size(); ++idx) {
    const auto c = mesh.centroid(elements[idx]);
    const int cx = std::clamp(static_cast<int>(std::floor(c[0] * coeff.nx)), 0, coeff.nx - 1);
    const int cy = std::clamp(static_cast<int>(std::floor(c[1] * coeff.ny)), 0, coeff.ny - 1);
    vals[idx] = coeff.cell(cx, cy, slab);
  }
  return vals;
}

Sparse scatter_rows_cols(const Sparse& global, const std::vector<int>& rows,
                         const std::vector<int>& cols_local) {
  std::vector<Eigen::Triplet<double>> trips;
  for (size_t rl = 0; rl < rows.size(); ++rl) {
    const int rg = rows[rl];
    for (Sparse::InnerIterator it(global, rg); it; ++it) {
      const int cl = cols_local[it.col()];
      if (cl >= 0) trips.emplace_back(static_cast<int>(rl), cl, it.value());
    }
  }
  Sparse out(static_cast<int>(rows.size()), 0);
  out.resize(static_cast<int>(rows.size()),
             static_cast<int>(std::count_if(cols_local.begin(), cols_local.end(),
                                            [](int v) { return v >= 0; })));
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

}  // namespace

int PatchOperators::slab_of(int fine_step) const {
  return coeff->slab_index(grid->fine_midpoint(fine_step));
}

int PatchOperators::interval_class(int coarse_interval) const {
  return reuse_time_shift ? 0 : coarse_interval;
}

const Sparse& PatchOperators::stiffness(int slab) {
  auto it = S.find(slab);
  if (it == S.end()) {
    const auto vals = slab_values(pair->fine, patch.fine_elements, *coeff, slab);
    Sparse global = stiffness_over_elements(pair->fine, patch.fine_elements, vals,
                                            DofSet::interior);
    it = S.emplace(slab, scatter_rows_cols(global, patch.fine_dofs, patch.fine_dof_local)).first;
  }
  return it->second;
}

const Sparse& PatchOperators::center_stiffness(int slab) {
  auto it = SK.find(slab);
  if (it == SK.end()) {
    const auto& children = pair->element_children[patch.center_element];
    const auto vals = slab_values(pair->fine, children, *coeff, slab);
    Sparse global = stiffness_over_elements(pair->fine, children, vals, DofSet::interior);
    it = SK.emplace(slab, scatter_rows_cols(global, patch.fine_dofs, patch.fine_dof_local)).first;
  }
  return it->second;
}

Eigen::SimplicialLDLT<SparseCol>& PatchOperators::solver(int slab) {
  auto it = step_solver.find(slab);
  if (it == step_solver.end()) {
    const double tau = grid->fine_step;
    SparseCol mat = (M + (tau / 2.0) * stiffness(slab));
    auto solver = std::make_shared<Eigen::SimplicialLDLT<SparseCol>>();
    solver->compute(mat);
    if (solver->info() != Eigen::Success)
      throw numerical_failure("patch step matrix factorization failed, element " +
                              std::to_string(patch.center_element));
    it = step_solver.emplace(slab, std::move(solver)).first;
  }
  return *it->second;
}

PatchOperators build_patch_operators(const SpatialMeshPair& pair, const TemporalGrid& grid,
                                     const Coefficient& coeff,
                                     const InterpolationOperator& interp, int K, int k,
                                     bool reuse_time_shift) {
  PatchOperators ops;
  ops.patch = make_patch(pair, K, k);
  ops.pair = &pair;
  ops.grid = &grid;
  ops.coeff = &coeff;
  ops.reuse_time_shift = reuse_time_shift;

  const Patch& p = ops.patch;
  Sparse mass_global = mass_over_elements(pair.fine, p.fine_elements, DofSet::interior);
  ops.M = scatter_rows_cols(mass_global, p.fine_dofs, p.fine_dof_local);

  Sparse mk_global =
      mass_over_elements(pair.fine, pair.element_children[K], DofSet::interior);
  ops.MK = scatter_rows_cols(mk_global, p.fine_dofs, p.fine_dof_local);

  // I_{H,k}: rows and columns of the global operator scattered to the patch
  {
    std::vector<Eigen::Triplet<double>> trips;
    for (size_t rl = 0; rl < p.coarse_dofs.size(); ++rl) {
      const int rg = p.coarse_dofs[rl];
      for (Sparse::InnerIterator it(interp.matrix, rg); it; ++it) {
        const int cl = p.fine_dof_local[it.col()];
        if (cl >= 0) trips.emplace_back(static_cast<int>(rl), cl, it.value());
      }
    }
    ops.interp.resize(p.coarse_count(), p.fine_count());
    ops.interp.setFromTriplets(trips.begin(), trips.end());
    ops.interp.makeCompressed();
  }

  // B = tau * I_{H,k}^T M_{H,k}
  {
    Sparse mh_global = mass_over_elements(pair.coarse, p.coarse_elements, DofSet::interior);
    Sparse mh = scatter_rows_cols(mh_global, p.coarse_dofs, p.coarse_dof_local);
    ops.B = grid.fine_step * Sparse(ops.interp.transpose()) * mh;
  }

  return ops;
}

namespace {

// One Crank-Nicolson sweep over coarse interval j: row g couples the new
// value through (M + tau/2 S^g) and the old one through (M - tau/2 S^{g-1}).
Eigen::MatrixXd cn_sweep(PatchOperators& ops, int interval, const Eigen::MatrixXd& rhs,
                         const Eigen::VectorXd* subtract_every_step) {
  const int nf = ops.patch.fine_count();
  const int nt = ops.grid->fine_per_coarse;
  const double tau = ops.grid->fine_step;
  const int first = ops.grid->first_step_of(interval);

  Eigen::MatrixXd xi(nf, nt);
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(nf);
  for (int m = 1; m <= nt; ++m) {
    const int g = first + m - 1;
    Eigen::VectorXd b = rhs.cols() > 0 ? Eigen::VectorXd(rhs.col(m - 1))
                                       : Eigen::VectorXd(Eigen::VectorXd::Zero(nf));
    if (subtract_every_step) b -= *subtract_every_step;
    if (m > 1)
      b += ops.M * prev - (tau / 2.0) * (ops.stiffness(ops.slab_of(g - 1)) * prev);
    xi.col(m - 1) = ops.solver(ops.slab_of(g)).solve(b);
    prev = xi.col(m - 1);
  }
  return xi;
}

// Last block of X solving A X = B, for the Schur complement.
Eigen::MatrixXd multi_sweep_last(PatchOperators& ops, int interval) {
  const int nf = ops.patch.fine_count();
  const int nc = ops.patch.coarse_count();
  const int nt = ops.grid->fine_per_coarse;
  const double tau = ops.grid->fine_step;
  const int first = ops.grid->first_step_of(interval);

  Eigen::MatrixXd bdense = Eigen::MatrixXd(ops.B);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(nf, nc);
  for (int m = 1; m <= nt; ++m) {
    const int g = first + m - 1;
    Eigen::MatrixXd rhs = bdense;
    if (m > 1)
      rhs += ops.M * x - (tau / 2.0) * (ops.stiffness(ops.slab_of(g - 1)) * x);
    x = ops.solver(ops.slab_of(g)).solve(rhs);
  }
  return x;
}

}  // namespace

const PatchOperators::SchurData& PatchOperators::schur_data(int coarse_interval) {
  const int cls = interval_class(coarse_interval);
  auto it = schur.find(cls);
  if (it == schur.end()) {
    auto data = std::make_shared<SchurData>();
    Eigen::MatrixXd x_last = multi_sweep_last(*this, coarse_interval);
    data->matrix = interp * x_last;
    data->lu.compute(data->matrix);
    const auto& lu_mat = data->lu.matrixLU();
    if (data->matrix.rows() > 0) {
      const double dmax = lu_mat.diagonal().cwiseAbs().maxCoeff();
      const double dmin = lu_mat.diagonal().cwiseAbs().minCoeff();
      if (!(dmax > 0.0) || dmin < 1e-13 * dmax)
        throw numerical_failure("singular Schur complement on patch of element " +
                                std::to_string(patch.center_element));
    }
    it = schur.emplace(cls, std::move(data)).first;
  }
  return *it->second;
}

IntervalSolveResult solve_constrained_interval(PatchOperators& ops, int interval,
                                               const IntervalRhs& rhs) {
  const int nf = ops.patch.fine_count();
  const int nc = ops.patch.coarse_count();
  const int nt = ops.grid->fine_per_coarse;
  const double tau = ops.grid->fine_step;
  const int first = ops.grid->first_step_of(interval);

  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(nf, nt);

  if (rhs.basis_spatial) {
    const Eigen::VectorXd& lam = *rhs.basis_spatial;
    const Eigen::VectorXd mk_lam = ops.MK * lam;
    std::map<int, Eigen::VectorXd> sk_lam;
    auto sk = [&](int slab) -> const Eigen::VectorXd& {
      auto it = sk_lam.find(slab);
      if (it == sk_lam.end())
        it = sk_lam.emplace(slab, ops.center_stiffness(slab) * lam).first;
      return it->second;
    };
    for (int m = 1; m <= nt; ++m) {
      const int g = first + m - 1;
      const double th = rhs.rising ? static_cast<double>(m) / nt
                                   : static_cast<double>(nt - m) / nt;
      const double th_prev = rhs.rising ? static_cast<double>(m - 1) / nt
                                        : static_cast<double>(nt - m + 1) / nt;
      r.col(m - 1) -= (th - th_prev) * mk_lam + (tau / 2.0) * th * sk(ops.slab_of(g));
      if (th_prev != 0.0)
        r.col(m - 1) -= (tau / 2.0) * th_prev * sk(ops.slab_of(g - 1));
    }
  }

  if (rhs.carry) {
    const Eigen::VectorXd& e = *rhs.carry;
    const Eigen::VectorXd me = ops.M * e;
    std::map<int, Eigen::VectorXd> se;
    auto s_of = [&](int slab) -> const Eigen::VectorXd& {
      auto it = se.find(slab);
      if (it == se.end()) it = se.emplace(slab, ops.stiffness(slab) * e).first;
      return it->second;
    };
    for (int m = 1; m <= nt; ++m) {
      const int g = first + m - 1;
      const double ramp = static_cast<double>(nt - m) / nt;
      const double ramp_prev = static_cast<double>(nt - m + 1) / nt;
      r.col(m - 1) += (1.0 / nt) * me;
      if (ramp != 0.0) r.col(m - 1) -= (tau / 2.0) * ramp * s_of(ops.slab_of(g));
      r.col(m - 1) -= (tau / 2.0) * ramp_prev * s_of(ops.slab_of(g - 1));
    }
  }

  IntervalSolveResult out;
  if (nc == 0) {
    out.xi = cn_sweep(ops, interval, r, nullptr);
    out.lambda = Eigen::VectorXd::Zero(0);
    out.constraint_residual = 0.0;
    return out;
  }

  const Eigen::MatrixXd y = cn_sweep(ops, interval, r, nullptr);
  const auto& sd = ops.schur_data(interval);
  const Eigen::VectorXd target = ops.interp * y.col(nt - 1);
  Eigen::VectorXd lambda = sd.lu.solve(target);
  lambda += sd.lu.solve(target - sd.matrix * lambda);  // one refinement step

  const Eigen::VectorXd blam = ops.B * lambda;
  out.xi = cn_sweep(ops, interval, r, &blam);
  out.lambda = lambda;
  out.constraint_residual = (ops.interp * out.xi.col(nt - 1)).lpNorm<Eigen::Infinity>();
  return out;
}

CorrectorBlock compute_basis_corrector(PatchOperators& ops,
                                       const InterpolationOperator& interp, int interval,
                                       int node, int pyramid, int ell) {
  const SpatialMeshPair& pair = *ops.pair;
  const TemporalGrid& grid = *ops.grid;
  if (pyramid != interval && pyramid != interval - 1)
    throw invalid_argument("compute_basis_corrector: pyramid must be interval or interval-1");
  if (pyramid < 1 || interval < 1 || interval > grid.coarse_steps)
    throw invalid_argument("compute_basis_corrector: indices out of range");
  if (ell < 1) throw invalid_argument("compute_basis_corrector: ell must be >= 1");

  const int dof = pair.coarse.interior_index[node];
  if (dof < 0) throw invalid_argument("compute_basis_corrector: node is on the boundary");

  // coarse hat on the patch
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(ops.patch.fine_count());
  for (SparseCol::InnerIterator it(interp.prolongation, dof); it; ++it) {
    const int local = ops.patch.fine_dof_local[it.row()];
    if (local >= 0) lam[local] = it.value();
  }

  CorrectorBlock block;
  block.key = {ops.patch.center_element, interval, node, pyramid};
  const int len = std::min(ell, grid.coarse_steps - interval + 1);
  Eigen::VectorXd prev;
  for (int p = 0; p < len; ++p) {
    IntervalRhs rhs;
    if (p == 0) {
      rhs.basis_spatial = &lam;
      rhs.rising = pyramid == interval;
    } else {
      rhs.carry = &prev;
    }
    IntervalSolveResult res = solve_constrained_interval(ops, interval + p, rhs);
    block.constraint_residual = std::max(block.constraint_residual, res.constraint_residual);
    prev = res.xi.col(grid.fine_per_coarse - 1);
    block.intervals.push_back(std::move(res.xi));
  }
  counters().corrector_blocks_computed.fetch_add(1, std::memory_order_relaxed);
  return block;
}

uint64_t mesh_pair_fingerprint(const SpatialMeshPair& pair) {
  Fnv1a f;
  f.add_i64(pair.coarse.subdivision_exponent);
  f.add_i64(pair.fine.subdivision_exponent);
  return f.h;
}

uint64_t grid_fingerprint(const TemporalGrid& grid) {
  Fnv1a f;
  f.add_f64(grid.t_final);
  f.add_i64(grid.coarse_steps);
  f.add_i64(grid.fine_per_coarse);
  return f.h;
}

std::vector<std::pair<int, int>> overlapping_basis(const SpatialMeshPair& pair, int K,
                                                   int interval) {
  std::vector<std::pair<int, int>> out;
  for (int v : pair.coarse.elements[K]) {
    if (pair.coarse.boundary_mask[v]) continue;
    out.emplace_back(v, interval);
    if (interval >= 2) out.emplace_back(v, interval - 1);
  }
  return out;
}

bool periodic_matches_coarse_step(const Coefficient& coeff, const TemporalGrid& grid) {
  return coeff.time_periodic &&
         std::abs(coeff.period - grid.coarse_step) <= 1e-12 * grid.coarse_step;
}

CorrectorOperator assemble_corrector_operator(const SpatialMeshPair& pair,
                                              const TemporalGrid& grid,
                                              const Coefficient& coeff, int k, int ell,
                                              int worker_count, bool reuse_time_shift) {
  if (k < 1 || ell < 1)
    throw invalid_argument("assemble_corrector_operator: k and ell must be >= 1");
  validate_resolution(coeff, pair.fine, grid);

  CorrectorOperator op;
  op.k = k;
  op.ell = ell;
  op.reuse_time_shift = reuse_time_shift && periodic_matches_coarse_step(coeff, grid);
  op.coarse_steps = grid.coarse_steps;
  op.fine_per_coarse = grid.fine_per_coarse;
  op.mesh_fingerprint = mesh_pair_fingerprint(pair);
  op.grid_fingerprint = grid_fingerprint(grid);
  op.coeff_fingerprint = coeff.fingerprint();

  const InterpolationOperator interp = build_quasi_interpolation(pair);

  const int n_elements = pair.coarse.element_count();
  std::vector<std::vector<CorrectorBlock>> results(n_elements);
  std::vector<std::unique_ptr<Patch>> patches(n_elements);

  auto process_element = [&](int K) {
    std::vector<std::pair<int, int>> drives;  // (interval, pyramid) of chain starts
    bool any_interior_vertex = false;
    for (int v : pair.coarse.elements[K])
      if (!pair.coarse.boundary_mask[v]) any_interior_vertex = true;
    if (!any_interior_vertex) return;

    if (op.reuse_time_shift) {
      drives.emplace_back(1, 1);
      if (grid.coarse_steps >= 2) drives.emplace_back(2, 1);
    } else {
      for (int i = 1; i <= grid.coarse_steps; ++i) {
        drives.emplace_back(i, i);
        if (i >= 2) drives.emplace_back(i, i - 1);
      }
    }

    PatchOperators ops = build_patch_operators(pair, grid, coeff, interp, K, k,
                                               op.reuse_time_shift);
    for (auto [i, pyr] : drives) {
      for (int v : pair.coarse.elements[K]) {
        if (pair.coarse.boundary_mask[v]) continue;
        results[K].push_back(compute_basis_corrector(ops, interp, i, v, pyr, ell));
      }
    }
    patches[K] = std::make_unique<Patch>(std::move(ops.patch));
  };

  const int workers = std::max(1, worker_count);
  if (workers == 1) {
    for (int K = 0; K < n_elements; ++K) process_element(K);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int K = next.fetch_add(1); K < n_elements; K = next.fetch_add(1))
          process_element(K);
      });
    for (auto& t : pool) t.join();
  }

  for (int K = 0; K < n_elements; ++K) {
    if (patches[K]) op.patches.emplace(K, std::move(*patches[K]));
    for (auto& b : results[K]) op.blocks.emplace(b.key, std::move(b));
  }
  return op;
}

BlockView CorrectorOperator::resolve(const BlockKey& logical, int ell_used) const {
  const int ellu = ell_used < 0 ? ell : std::min(ell_used, ell);
  BlockKey storage = logical;
  if (reuse_time_shift) {
    storage = logical.pyramid == logical.interval
                  ? BlockKey{logical.element, 1, logical.node, 1}
                  : BlockKey{logical.element, 2, logical.node, 1};
  }
  auto it = blocks.find(storage);
  if (it == blocks.end())
    throw invalid_argument("corrector operator holds no block for the requested key");

  BlockView view;
  view.block = &it->second;
  view.patch = &patches.at(logical.element);
  view.first_interval = logical.interval;
  view.node = logical.node;
  view.pyramid = logical.pyramid;
  view.length = std::min(ellu, coarse_steps - logical.interval + 1);
  view.ramp = logical.interval + ellu - 1 < coarse_steps;
  return view;
}

void CorrectorOperator::for_each_logical(
    const SpatialMeshPair& pair,
    const std::function<void(const BlockKey&, const BlockView&)>& fn, int ell_used) const {
  for (int K = 0; K < pair.coarse.element_count(); ++K) {
    if (patches.find(K) == patches.end()) continue;
    for (int i = 1; i <= coarse_steps; ++i) {
      for (auto [node, pyr] : overlapping_basis(pair, K, i)) {
        const BlockKey key{K, i, node, pyr};
        fn(key, resolve(key, ell_used));
      }
    }
  }
}

size_t CorrectorOperator::logical_block_count(const SpatialMeshPair& pair) const {
  size_t n = 0;
  for_each_logical(pair, [&](const BlockKey&, const BlockView&) { ++n; });
  return n;
}

double CorrectorOperator::max_constraint_residual() const {
  double r = 0.0;
  for (const auto& [key, block] : blocks) r = std::max(r, block.constraint_residual);
  return r;
}

BlockSeries block_series(const BlockView& view, const TemporalGrid& grid) {
  const int nt = grid.fine_per_coarse;
  const int nf = view.patch->fine_count();
  const int span = (view.length + (view.ramp ? 1 : 0)) * nt;

  BlockSeries out;
  out.first_step = (view.first_interval - 1) * nt;
  out.values = Eigen::MatrixXd::Zero(nf, span + 1);
  for (int p = 0; p < view.length; ++p) {
    const Eigen::MatrixXd& xi = view.block->intervals[p];
    for (int m = 1; m <= nt; ++m) {
      out.values.col(p * nt + m) = xi.col(m - 1);
      if (p > 0) {
        const double ramp = static_cast<double>(nt - m) / nt;
        if (ramp != 0.0)
          out.values.col(p * nt + m) += ramp * view.block->intervals[p - 1].col(nt - 1);
      }
    }
  }
  if (view.ramp) {
    const Eigen::VectorXd tail = view.block->intervals[view.length - 1].col(nt - 1);
    for (int m = 1; m < nt; ++m) {
      const double ramp = static_cast<double>(nt - m) / nt;
      out.values.col(view.length * nt + m) = ramp * tail;
    }
    // final column stays zero: the ramp ends exactly at the next coarse node
  }
  return out;
}

SpaceTimeFunction apply_corrector(const CorrectorOperator& op, const SpatialMeshPair& pair,
                                  const TemporalGrid& grid,
                                  const Eigen::MatrixXd& coarse_values) {
  if (coarse_values.rows() != pair.coarse.interior_count() ||
      coarse_values.cols() != grid.coarse_steps)
    throw invalid_argument("apply_corrector: coefficient shape must be coarse dofs x N_T");

  SpaceTimeFunction out = SpaceTimeFunction::zero(pair.fine.interior_count(), grid);
  if (op.zero_debug) return out;

  op.for_each_logical(pair, [&](const BlockKey& key, const BlockView& view) {
    const int dof = pair.coarse.interior_index[key.node];
    const double w = coarse_values(dof, key.pyramid - 1);
    if (w == 0.0) return;
    const BlockSeries series = block_series(view, grid);
    const auto& dofs = view.patch->fine_dofs;
    for (int s = 1; s < series.values.cols(); ++s) {
      auto& slice = out.slices[series.first_step + s];
      for (size_t l = 0; l < dofs.size(); ++l)
        slice[dofs[l]] += w * series.values(static_cast<int>(l), s);
    }
  });
  return out;
}

SpaceTimeFunction corrector_of_basis(const CorrectorOperator& op, const SpatialMeshPair& pair,
                                     const TemporalGrid& grid, int node, int pyramid,
                                     int ell_used) {
  if (pyramid < 1 || pyramid > grid.coarse_steps)
    throw invalid_argument("corrector_of_basis: pyramid out of range");
  SpaceTimeFunction out = SpaceTimeFunction::zero(pair.fine.interior_count(), grid);
  if (op.zero_debug) return out;

  std::set<int> elements;
  for (int e : pair.coarse.node_elements[node]) elements.insert(e);

  for (int K : elements) {
    for (int i : {pyramid, pyramid + 1}) {
      if (i > grid.coarse_steps) continue;
      const BlockKey key{K, i, node, pyramid};
      const BlockView view = op.resolve(key, ell_used);
      const BlockSeries series = block_series(view, grid);
      const auto& dofs = view.patch->fine_dofs;
      for (int s = 1; s < series.values.cols(); ++s) {
        auto& slice = out.slices[series.first_step + s];
        for (size_t l = 0; l < dofs.size(); ++l)
          slice[dofs[l]] += series.values(static_cast<int>(l), s);
      }
    }
  }
  return out;
}

void save_corrector_cache(const std::string& path, const CorrectorOperator& op) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path);
  auto w = [&](const void* p, size_t n) { out.write(static_cast<const char*>(p), n); };

  w(kMagic, sizeof kMagic);
  w(&kVersion, sizeof kVersion);
  const int32_t header[4] = {op.k, op.ell, op.coarse_steps, op.fine_per_coarse};
  w(header, sizeof header);
  const uint8_t reuse = op.reuse_time_shift ? 1 : 0;
  w(&reuse, sizeof reuse);
  w(&op.mesh_fingerprint, sizeof op.mesh_fingerprint);
  w(&op.grid_fingerprint, sizeof op.grid_fingerprint);
  w(&op.coeff_fingerprint, sizeof op.coeff_fingerprint);
  const uint64_t count = op.blocks.size();
  w(&count, sizeof count);

  for (const auto& [key, block] : op.blocks) {
    const int32_t keydata[4] = {key.element, key.interval, key.node, key.pyramid};
    w(keydata, sizeof keydata);
    const int32_t nf = block.intervals.empty() ? 0 : static_cast<int32_t>(block.intervals[0].rows());
    const int32_t ni = static_cast<int32_t>(block.intervals.size());
    w(&nf, sizeof nf);
    w(&ni, sizeof ni);
    w(&block.constraint_residual, sizeof block.constraint_residual);
    for (const auto& xi : block.intervals)
      w(xi.data(), sizeof(double) * xi.size());
  }
  if (!out) throw io_error("write failed: " + path);
}

CorrectorOperator load_corrector_cache(const std::string& path, const SpatialMeshPair& pair,
                                       const TemporalGrid& grid, const Coefficient& coeff) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open for reading: " + path);
  auto r = [&](void* p, size_t n) {
    in.read(static_cast<char*>(p), n);
    if (!in) throw io_error("truncated corrector cache: " + path);
  };

  char magic[9];
  r(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw io_error("not a corrector cache: " + path);
  uint32_t version = 0;
  r(&version, sizeof version);
  if (version != kVersion) throw io_error("unsupported corrector cache version");

  CorrectorOperator op;
  int32_t header[4];
  r(header, sizeof header);
  op.k = header[0];
  op.ell = header[1];
  op.coarse_steps = header[2];
  op.fine_per_coarse = header[3];
  uint8_t reuse = 0;
  r(&reuse, sizeof reuse);
  op.reuse_time_shift = reuse != 0;
  r(&op.mesh_fingerprint, sizeof op.mesh_fingerprint);
  r(&op.grid_fingerprint, sizeof op.grid_fingerprint);
  r(&op.coeff_fingerprint, sizeof op.coeff_fingerprint);

  if (op.mesh_fingerprint != mesh_pair_fingerprint(pair))
    throw io_error("corrector cache mesh fingerprint mismatch: " + path);
  if (op.grid_fingerprint != grid_fingerprint(grid))
    throw io_error("corrector cache grid fingerprint mismatch: " + path);
  if (op.coeff_fingerprint != coeff.fingerprint())
    throw io_error("corrector cache coefficient fingerprint mismatch: " + path);
  if (op.coarse_steps != grid.coarse_steps || op.fine_per_coarse != grid.fine_per_coarse)
    throw io_error("corrector cache temporal layout mismatch: " + path);

  uint64_t count = 0;
  r(&count, sizeof count);
  for (uint64_t b = 0; b < count; ++b) {
    int32_t keydata[4];
    r(keydata, sizeof keydata);
    CorrectorBlock block;
    block.key = {keydata[0], keydata[1], keydata[2], keydata[3]};
    int32_t nf = 0, ni = 0;
    r(&nf, sizeof nf);
    r(&ni, sizeof ni);
    r(&block.constraint_residual, sizeof block.constraint_residual);

    auto pit = op.patches.find(block.key.element);
    if (pit == op.patches.end())
      pit = op.patches.emplace(block.key.element,
                               make_patch(pair, block.key.element, op.k)).first;
    if (pit->second.fine_count() != nf)
      throw io_error("corrector cache patch size mismatch: " + path);

    for (int32_t i = 0; i < ni; ++i) {
      Eigen::MatrixXd xi(nf, grid.fine_per_coarse);
      r(xi.data(), sizeof(double) * xi.size());
      block.intervals.push_back(std::move(xi));
    }
    op.blocks.emplace(block.key, std::move(block));
  }
  return op;
}

}  // namespace stlod
