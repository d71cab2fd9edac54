#include "stlod/solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace stlod {

namespace {

// Global-matrix pairing machinery for assembling A(w, tent) sums: products
// are accumulated column-by-column over the support of w, so the cost scales
// with the patch, not the domain.
struct PairingContext {
  const SpatialMeshPair* pair;
  const TemporalGrid* grid;
  const Coefficient* coeff;
  const InterpolationOperator* interp;
  SparseCol mass;
  std::map<int, SparseCol> stiff;

  int slab_of(int g) const { return coeff->slab_index(grid->fine_midpoint(g)); }

  const SparseCol& stiffness(int slab) {
    auto it = stiff.find(slab);
    if (it == stiff.end()) {
      std::vector<int> elements(pair->fine.element_count());
      for (int e = 0; e < pair->fine.element_count(); ++e) elements[e] = e;
      std::vector<double> vals(elements.size());
      for (size_t e = 0; e < elements.size(); ++e) {
        const auto c = pair->fine.centroid(static_cast<int>(e));
        const int cx = std::clamp(static_cast<int>(std::floor(c[0] * coeff->nx)), 0, coeff->nx - 1);
        const int cy = std::clamp(static_cast<int>(std::floor(c[1] * coeff->ny)), 0, coeff->ny - 1);
        vals[e] = coeff->cell(cx, cy, slab);
      }
      SparseCol s = SparseCol(
          stiffness_over_elements(pair->fine, elements, vals, DofSet::interior));
      it = stiff.emplace(slab, std::move(s)).first;
    }
    return it->second;
  }
};

struct Scratch {
  Eigen::VectorXd v;
  std::vector<int> dirty;

  explicit Scratch(int n) : v(Eigen::VectorXd::Zero(n)) {}
  void clear() {
    for (int i : dirty) v[i] = 0.0;
    dirty.clear();
  }
  void add(int i, double val) {
    if (val == 0.0) return;
    if (v[i] == 0.0) dirty.push_back(i);
    v[i] += val;
  }
};

void axpy_columns(const SparseCol& a, const std::vector<int>& support,
                  const Eigen::VectorXd& x, double factor, Scratch& out) {
  for (int c : support) {
    const double xv = factor * x[c];
    if (xv == 0.0) continue;
    for (SparseCol::InnerIterator it(a, c); it; ++it) out.add(static_cast<int>(it.row()), it.value() * xv);
  }
}

// One fine-interval pairing row applied to a step pair (w_curr at t_g, w_prev
// at t_{g-1}): M (w_curr - w_prev) + tau/2 (S^g w_curr + S^{g-1} w_prev).
void pair_row(PairingContext& pc, int g, const std::vector<int>& support,
              const Eigen::VectorXd& w_curr, const Eigen::VectorXd& w_prev, Scratch& q) {
  const double tau = pc.grid->fine_step;
  axpy_columns(pc.mass, support, w_curr, 1.0, q);
  axpy_columns(pc.mass, support, w_prev, -1.0, q);
  axpy_columns(pc.stiffness(pc.slab_of(g)), support, w_curr, tau / 2.0, q);
  if (g > 1) axpy_columns(pc.stiffness(pc.slab_of(g - 1)), support, w_prev, tau / 2.0, q);
}

double dot_with_hat(const SparseCol& prolong, int coarse_dof, const Scratch& q) {
  double acc = 0.0;
  for (SparseCol::InnerIterator it(prolong, coarse_dof); it; ++it)
    acc += it.value() * q.v[static_cast<int>(it.row())];
  return acc;
}

// Values of a chain piece over one coarse interval: column 0 at the interval
// start, columns 1..N_t at the local fine steps. piece == length means the
// closing ramp.
Eigen::MatrixXd piece_interval_values(const BlockView& view, int piece, int nt) {
  const int nf = view.patch->fine_count();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(nf, nt + 1);
  if (piece < view.length) {
    const Eigen::MatrixXd& xi = view.block->intervals[piece];
    if (piece > 0) {
      const Eigen::VectorXd prev_end = view.block->intervals[piece - 1].col(nt - 1);
      w.col(0) = prev_end;
      for (int m = 1; m <= nt; ++m)
        w.col(m) = xi.col(m - 1) + (static_cast<double>(nt - m) / nt) * prev_end;
    } else {
      for (int m = 1; m <= nt; ++m) w.col(m) = xi.col(m - 1);
    }
  } else {
    const Eigen::VectorXd tail = view.block->intervals[view.length - 1].col(nt - 1);
    w.col(0) = tail;
    for (int m = 1; m < nt; ++m) w.col(m) = (static_cast<double>(nt - m) / nt) * tail;
  }
  return w;
}

}  // namespace

CoarseSystem assemble_coarse_system(const CorrectorOperator& op, const SpatialMeshPair& pair,
                                    const TemporalGrid& grid, const Coefficient& coeff) {
  if (op.mesh_fingerprint != mesh_pair_fingerprint(pair) ||
      op.grid_fingerprint != grid_fingerprint(grid) ||
      op.coeff_fingerprint != coeff.fingerprint())
    throw invalid_argument("assemble_coarse_system: corrector operator fingerprint mismatch");

  const int n = pair.coarse.interior_count();
  const int NT = grid.coarse_steps;
  const int nt = grid.fine_per_coarse;
  const int ell = op.ell;

  CoarseSystem sys;
  sys.n = n;
  sys.N_T = NT;
  sys.ell = ell;
  sys.periodic_blocks = op.reuse_time_shift;
  sys.coeff_fingerprint = coeff.fingerprint();
  sys.blocks.assign(NT, {});

  PairingContext pc{&pair, &grid, &coeff, nullptr,
                    SparseCol(mass_matrix(pair.fine, DofSet::interior)), {}};
  const InterpolationOperator interp = build_quasi_interpolation(pair);
  const SparseCol& prolongation = interp.prolongation;

  // per-patch test node lists: interior coarse nodes that are vertices of a
  // patch element; for the uncorrected part, a two-layer neighborhood
  std::map<int, std::vector<int>> patch_tests;
  for (const auto& [K, patch] : op.patches) {
    std::set<int> dofs;
    for (int e : patch.coarse_elements)
      for (int v : pair.coarse.elements[e]) {
        const int d = pair.coarse.interior_index[v];
        if (d >= 0) dofs.insert(d);
      }
    patch_tests.emplace(K, std::vector<int>(dofs.begin(), dofs.end()));
  }
  std::vector<std::vector<int>> hat_tests(n);
  for (int x = 0; x < n; ++x) {
    const int node = pair.coarse.interior_nodes[x];
    std::vector<int> around(pair.coarse.node_elements[node]);
    around = one_layer(pair.coarse, one_layer(pair.coarse, around));
    std::set<int> dofs;
    for (int e : around)
      for (int v : pair.coarse.elements[e]) {
        const int d = pair.coarse.interior_index[v];
        if (d >= 0) dofs.insert(d);
      }
    hat_tests[x] = {dofs.begin(), dofs.end()};
  }

  // hat support lists and values of the prolongation columns
  std::vector<std::vector<int>> hat_support(n);
  std::vector<std::vector<double>> hat_values(n);
  for (int x = 0; x < n; ++x)
    for (SparseCol::InnerIterator it(prolongation, x); it; ++it) {
      hat_support[x].push_back(static_cast<int>(it.row()));
      hat_values[x].push_back(it.value());
    }

  Scratch q(pair.fine.interior_count());
  Eigen::VectorXd w_curr = Eigen::VectorXd::Zero(pair.fine.interior_count());
  Eigen::VectorXd w_prev = Eigen::VectorXd::Zero(pair.fine.interior_count());

  auto compute_block = [&](int j, int m) {
    auto block = std::make_shared<Eigen::MatrixXd>(Eigen::MatrixXd::Zero(n, n));
    const int i = j - m;
    const int first = grid.first_step_of(j);

    // uncorrected trial part: pyramid i meets tent j only for m in {0, 1}
    if (m <= 1) {
      for (int x = 0; x < n; ++x) {
        for (int mm = 1; mm <= nt; ++mm) {
          const int g = first + mm - 1;
          const double th = m == 0 ? static_cast<double>(mm) / nt
                                   : static_cast<double>(nt - mm) / nt;
          const double th_prev = m == 0 ? static_cast<double>(mm - 1) / nt
                                        : static_cast<double>(nt - mm + 1) / nt;
          q.clear();
          for (size_t l = 0; l < hat_support[x].size(); ++l) {
            w_curr[hat_support[x][l]] = th * hat_values[x][l];
            w_prev[hat_support[x][l]] = th_prev * hat_values[x][l];
          }
          pair_row(pc, g, hat_support[x], w_curr, w_prev, q);
          for (int r : hat_support[x]) {
            w_curr[r] = 0.0;
            w_prev[r] = 0.0;
          }
          for (int y : hat_tests[x]) (*block)(y, x) += dot_with_hat(prolongation, y, q);
        }
      }
    }

    // corrector parts
    if (!op.zero_debug) {
      for (const auto& [K, patch] : op.patches) {
        const auto& tests = patch_tests.at(K);
        for (int v : pair.coarse.elements[K]) {
          if (pair.coarse.boundary_mask[v]) continue;
          const int x = pair.coarse.interior_index[v];
          // the two chain families feeding trial pyramid i: the one driven on
          // interval i (rising edge) and, when it exists, the one driven on
          // interval i+1 (falling edge)
          for (int fam = 0; fam < 2; ++fam) {
            const int drive = fam == 0 ? i : i + 1;
            if (drive > NT || (fam == 1 && m == 0)) continue;
            const int piece = j - drive;
            const BlockView view = op.resolve({K, drive, v, i});
            if (piece > view.length || (piece == view.length && !view.ramp)) continue;
            const Eigen::MatrixXd w = piece_interval_values(view, piece, nt);
            for (int mm = 1; mm <= nt; ++mm) {
              const int g = first + mm - 1;
              q.clear();
              for (size_t l = 0; l < patch.fine_dofs.size(); ++l) {
                w_curr[patch.fine_dofs[l]] = w(static_cast<int>(l), mm);
                w_prev[patch.fine_dofs[l]] = w(static_cast<int>(l), mm - 1);
              }
              pair_row(pc, g, patch.fine_dofs, w_curr, w_prev, q);
              for (int r : patch.fine_dofs) {
                w_curr[r] = 0.0;
                w_prev[r] = 0.0;
              }
              for (int y : tests) (*block)(y, x) += dot_with_hat(prolongation, y, q);
            }
          }
        }
      }
    }
    return block;
  };

  std::map<std::pair<int, int>, std::shared_ptr<Eigen::MatrixXd>> memo;
  for (int j = 1; j <= NT; ++j) {
    sys.blocks[j - 1].resize(std::min(ell, j - 1) + 1);
    for (int m = 0; m <= std::min(ell, j - 1); ++m) {
      std::pair<int, int> key;
      if (op.reuse_time_shift) {
        key = {m, std::min(NT - (j - m), ell + 1)};
      } else {
        key = {j * (ell + 2), m};  // unique per (j, m)
      }
      auto it = memo.find(key);
      if (it == memo.end()) it = memo.emplace(key, compute_block(j, m)).first;
      sys.blocks[j - 1][m] = it->second;
    }
  }

  // one LU per distinct diagonal block
  std::map<const Eigen::MatrixXd*, std::shared_ptr<Eigen::PartialPivLU<Eigen::MatrixXd>>> lus;
  sys.step_lu.resize(NT);
  for (int j = 1; j <= NT; ++j) {
    const Eigen::MatrixXd* diag = sys.blocks[j - 1][0].get();
    auto it = lus.find(diag);
    if (it == lus.end()) {
      auto lu = std::make_shared<Eigen::PartialPivLU<Eigen::MatrixXd>>(*diag);
      const auto& lumat = lu->matrixLU();
      const double dmax = lumat.diagonal().cwiseAbs().maxCoeff();
      if (!(dmax > 0.0) || lumat.diagonal().cwiseAbs().minCoeff() < 1e-14 * dmax)
        throw numerical_failure("singular coarse step matrix at step " + std::to_string(j));
      it = lus.emplace(diag, std::move(lu)).first;
    }
    sys.step_lu[j - 1] = it->second;
  }

  return sys;
}

std::vector<Eigen::VectorXd> assemble_coarse_rhs(const RhsFunction& f,
                                                 const LoadAssembler& loads,
                                                 const InterpolationOperator& interp,
                                                 const TemporalGrid& grid) {
  std::vector<Eigen::VectorXd> out(grid.coarse_steps);
  for (int j = 1; j <= grid.coarse_steps; ++j) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(interp.prolongation.rows());
    for (int m = 1; m <= grid.fine_per_coarse; ++m)
      acc += loads.interval_load(f, grid.first_step_of(j) + m - 1);
    out[j - 1] = interp.prolongation.transpose() * acc;
  }
  return out;
}

MultiscaleSolution solve_multiscale(const CoarseSystem& system,
                                    const std::vector<Eigen::VectorXd>& rhs_blocks) {
  if (static_cast<int>(rhs_blocks.size()) != system.N_T)
    throw invalid_argument("solve_multiscale: one rhs block per coarse interval");

  MultiscaleSolution sol;
  sol.coarse = Eigen::MatrixXd::Zero(system.n, system.N_T);
  for (int j = 1; j <= system.N_T; ++j) {
    Eigen::VectorXd rhs = rhs_blocks[j - 1];
    if (rhs.size() != system.n)
      throw invalid_argument("solve_multiscale: rhs block size mismatch");
    for (int m = 1; m <= std::min(system.ell, j - 1); ++m) {
      const Eigen::MatrixXd* g = system.block(j, m);
      if (g) rhs -= (*g) * sol.coarse.col(j - m - 1);
    }
    sol.coarse.col(j - 1) = system.step_lu[j - 1]->solve(rhs);
    counters().coarse_space_solves.fetch_add(1, std::memory_order_relaxed);
  }
  return sol;
}

std::vector<MultiscaleSolution> solve_multi_rhs(
    const CoarseSystem& system, const std::vector<std::vector<Eigen::VectorXd>>& rhs_sets) {
  std::vector<MultiscaleSolution> out;
  out.reserve(rhs_sets.size());
  for (const auto& rhs : rhs_sets) out.push_back(solve_multiscale(system, rhs));
  return out;
}

SpaceTimeFunction prolong_coarse_solution(const Eigen::MatrixXd& coarse_values,
                                          const SpatialMeshPair& pair,
                                          const TemporalGrid& grid,
                                          const InterpolationOperator& interp) {
  if (coarse_values.rows() != pair.coarse.interior_count() ||
      coarse_values.cols() != grid.coarse_steps)
    throw invalid_argument("prolong_coarse_solution: shape must be coarse dofs x N_T");

  SpaceTimeFunction out = SpaceTimeFunction::zero(pair.fine.interior_count(), grid);
  const int nt = grid.fine_per_coarse;
  for (int g = 1; g <= grid.total_fine_steps(); ++g) {
    const int j = grid.coarse_of(g);
    const double theta = static_cast<double>(g - (j - 1) * nt) / nt;
    Eigen::VectorXd coarse = theta * coarse_values.col(j - 1);
    if (j >= 2) coarse += (1.0 - theta) * coarse_values.col(j - 2);
    out.slices[g] = interp.prolongation * coarse;
  }
  return out;
}

SpaceTimeFunction reconstruct_fine(const Eigen::MatrixXd& coarse_values,
                                   const CorrectorOperator& op, const SpatialMeshPair& pair,
                                   const TemporalGrid& grid,
                                   const InterpolationOperator& interp) {
  SpaceTimeFunction out = prolong_coarse_solution(coarse_values, pair, grid, interp);
  out += apply_corrector(op, pair, grid, coarse_values);
  return out;
}

SpaceTimeFunction solve_reference_fine(const SpatialMesh& fine, const TemporalGrid& grid,
                                       const Coefficient& coeff, const RhsFunction& f) {
  const LoadAssembler loads(fine, grid);
  const Sparse mass = mass_matrix(fine, DofSet::interior);

  std::map<int, Sparse> stiff;
  std::map<int, std::shared_ptr<Eigen::SimplicialLDLT<SparseCol>>> solver;
  const double tau = grid.fine_step;

  auto stiffness_of = [&](int g) -> const Sparse& {
    const int slab = coeff.slab_index(grid.fine_midpoint(g));
    auto it = stiff.find(slab);
    if (it == stiff.end())
      it = stiff.emplace(slab, stiffness_matrix(fine, coeff, grid, g, DofSet::interior)).first;
    return it->second;
  };
  auto solver_of = [&](int g) -> Eigen::SimplicialLDLT<SparseCol>& {
    const int slab = coeff.slab_index(grid.fine_midpoint(g));
    auto it = solver.find(slab);
    if (it == solver.end()) {
      auto s = std::make_shared<Eigen::SimplicialLDLT<SparseCol>>();
      s->compute(SparseCol(mass + (tau / 2.0) * stiffness_of(g)));
      if (s->info() != Eigen::Success)
        throw numerical_failure("reference solver: step factorization failed");
      it = solver.emplace(slab, std::move(s)).first;
    }
    return *it->second;
  };

  SpaceTimeFunction u = SpaceTimeFunction::zero(fine.interior_count(), grid);
  for (int g = 1; g <= grid.total_fine_steps(); ++g) {
    const Eigen::VectorXd& prev = u.slices[g - 1];
    Eigen::VectorXd b = loads.interval_load(f, g) + mass * prev -
                        (tau / 2.0) * (stiffness_of(g) * prev);
    u.slices[g] = solver_of(g).solve(b);
    counters().fine_space_solves.fetch_add(1, std::memory_order_relaxed);
  }
  return u;
}

}  // namespace stlod
