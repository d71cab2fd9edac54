#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "stlod/analysis.hpp"
#include "stlod/corrector.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace stlod;

namespace {

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(1e-300, b.lpNorm<Eigen::Infinity>());
  return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("corrector") {

TEST_CASE("patch-local matrices equal the global assemblies scattered to the patch") {
  auto d = testing::make_desk();
  const Sparse mass_global = mass_matrix(d.pair.fine, DofSet::interior);
  const Sparse stiff_global =
      stiffness_matrix(d.pair.fine, d.coeff, d.grid, 1, DofSet::interior);

  for (int K : {0, 18}) {
    PatchOperators ops = build_patch_operators(d.pair, d.grid, d.coeff, d.interp, K, 2, false);
    const Patch& p = ops.patch;
    const Sparse& stiff_local = ops.stiffness(d.coeff.slab_index(d.grid.fine_midpoint(1)));
    for (int a = 0; a < p.fine_count(); ++a)
      for (int b = 0; b < p.fine_count(); ++b) {
        CHECK(ops.M.coeff(a, b) ==
              doctest::Approx(mass_global.coeff(p.fine_dofs[a], p.fine_dofs[b]))
                  .epsilon(1e-14));
        CHECK(stiff_local.coeff(a, b) ==
              doctest::Approx(stiff_global.coeff(p.fine_dofs[a], p.fine_dofs[b]))
                  .epsilon(1e-13));
      }
    // interpolation rows scatter the same way
    for (int c = 0; c < p.coarse_count(); ++c)
      for (int a = 0; a < p.fine_count(); ++a)
        CHECK(ops.interp.coeff(c, a) ==
              d.interp.matrix.coeff(p.coarse_dofs[c], p.fine_dofs[a]));
  }
}

TEST_CASE("zero right-hand side yields zero solution and multiplier") {
  auto d = testing::make_desk();
  PatchOperators ops = build_patch_operators(d.pair, d.grid, d.coeff, d.interp, 18, 1, false);
  const IntervalSolveResult res = solve_constrained_interval(ops, 1, IntervalRhs{});
  CHECK(res.xi.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(res.lambda.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("endpoint constraint holds to 1e-9 for a basis drive") {
  auto d = testing::make_desk();
  for (int K : {0, 9, 18}) {
    PatchOperators ops = build_patch_operators(d.pair, d.grid, d.coeff, d.interp, K, 2, false);
    for (auto [node, pyr] : overlapping_basis(d.pair, K, 2)) {
      const CorrectorBlock block = compute_basis_corrector(ops, d.interp, 2, node, pyr, 2);
      CHECK(block.constraint_residual <= 1e-9);
    }
  }
}

TEST_CASE("sequential Schur solve matches the dense saddle-point factorization") {
  auto d = testing::make_desk();
  for (int K : {5, 18, 30}) {
    PatchOperators ops = build_patch_operators(d.pair, d.grid, d.coeff, d.interp, K, 1, false);
    for (auto [node, pyr] : overlapping_basis(d.pair, K, 2)) {
      const CorrectorBlock block = compute_basis_corrector(ops, d.interp, 2, node, pyr, 2);
      const auto oracle = oracle::dense_kkt_chain(ops, d.interp, 2, node, pyr, 2);
      REQUIRE(oracle.size() == block.intervals.size());
      for (size_t p = 0; p < oracle.size(); ++p)
        CHECK(rel_diff(block.intervals[p], oracle[p]) <= 1e-10);
    }
  }
}

TEST_CASE("single fine step per coarse interval reduces to one saddle solve") {
  const SpatialMeshPair pair = build_mesh_pair(2, 4);
  const TemporalGrid grid = build_temporal_grid(0.75, 3, 1);
  const Coefficient coeff =
      generate_random_coefficient(8, 0.25, 0.25, 0.01, 0.1, false, 0.75);
  const InterpolationOperator interp = build_quasi_interpolation(pair);

  PatchOperators ops = build_patch_operators(pair, grid, coeff, interp, 18, 1, false);
  const CorrectorBlock block = compute_basis_corrector(ops, interp, 1, 12, 1, 2);
  const auto oracle = oracle::dense_kkt_chain(ops, interp, 1, 12, 1, 2);
  for (size_t p = 0; p < oracle.size(); ++p)
    CHECK(rel_diff(block.intervals[p], oracle[p]) <= 1e-10);
}

TEST_CASE("saturated patch and full chain reproduce the unlocalized corrector") {
  auto d = testing::make_desk();
  const int K = 18;
  const int sat = saturating_radius(d.pair.coarse);

  PatchOperators ops_sat =
      build_patch_operators(d.pair, d.grid, d.coeff, d.interp, K, sat, false);
  PatchOperators ops_more =
      build_patch_operators(d.pair, d.grid, d.coeff, d.interp, K, sat + 3, false);
  const CorrectorBlock a =
      compute_basis_corrector(ops_sat, d.interp, 1, 12, 1, d.grid.coarse_steps);
  const CorrectorBlock b =
      compute_basis_corrector(ops_more, d.interp, 1, 12, 1, d.grid.coarse_steps);
  REQUIRE(a.intervals.size() == b.intervals.size());
  for (size_t p = 0; p < a.intervals.size(); ++p)
    CHECK(rel_diff(a.intervals[p], b.intervals[p]) == 0.0);
}

TEST_CASE("interval energies decay beyond the drive interval") {
  auto d = testing::make_desk();
  const int sat = saturating_radius(d.pair.coarse);
  PatchOperators ops = build_patch_operators(d.pair, d.grid, d.coeff, d.interp, 18, sat, false);
  const CorrectorBlock block =
      compute_basis_corrector(ops, d.interp, 1, 12, 1, d.grid.coarse_steps);
  REQUIRE(block.intervals.size() == 3);

  std::vector<double> energy;
  for (const auto& xi : block.intervals)
    energy.push_back(xi.col(d.grid.fine_per_coarse - 1).norm());
  // decay after the interval carrying the drive
  CHECK(energy[2] < energy[1]);
}

TEST_CASE("chain at the final interval has one block and no closing ramp") {
  auto d = testing::make_desk();
  const int last = d.grid.coarse_steps;
  PatchOperators ops = build_patch_operators(d.pair, d.grid, d.coeff, d.interp, 18, 1, false);
  const CorrectorBlock block = compute_basis_corrector(ops, d.interp, last, 12, last, 4);
  CHECK(block.intervals.size() == 1);

  const CorrectorOperator op =
      assemble_corrector_operator(d.pair, d.grid, d.coeff, 1, 4, 1, false);
  const BlockView view = op.resolve({18, last, 12, last});
  CHECK(view.length == 1);
  CHECK(!view.ramp);
  // one interval earlier the chain is clamped to two blocks and still no ramp
  const BlockView prev = op.resolve({18, last - 1, 12, last - 1});
  CHECK(prev.length == 2);
  CHECK(!prev.ramp);
}

TEST_CASE("operator covers the expected logical blocks") {
  auto d = testing::make_desk();
  const CorrectorOperator op =
      assemble_corrector_operator(d.pair, d.grid, d.coeff, 1, 2, 1, false);

  size_t expected = 0;
  for (int K = 0; K < d.pair.coarse.element_count(); ++K) {
    int interior_vertices = 0;
    for (int v : d.pair.coarse.elements[K])
      if (!d.pair.coarse.boundary_mask[v]) ++interior_vertices;
    // pyramids i and i-1 per interval, the first interval has no falling edge
    expected += interior_vertices * (1 + 2 * (d.grid.coarse_steps - 1));
  }
  CHECK(op.logical_block_count(d.pair) == expected);
  CHECK(op.blocks.size() == expected);

  // interior element, middle interval: three vertices times two pyramids
  const auto basis = overlapping_basis(d.pair, 18, 2);
  CHECK(basis.size() == 6);
  CHECK(overlapping_basis(d.pair, 18, 1).size() == 3);
}

TEST_CASE("assembly is independent of the worker count") {
  auto d = testing::make_desk();
  const CorrectorOperator a = assemble_corrector_operator(d.pair, d.grid, d.coeff, 1, 2, 1, false);
  const CorrectorOperator b = assemble_corrector_operator(d.pair, d.grid, d.coeff, 1, 2, 4, false);
  save_corrector_cache("workers_a.bin", a);
  save_corrector_cache("workers_b.bin", b);
  CHECK(file_bytes("workers_a.bin") == file_bytes("workers_b.bin"));
  std::remove("workers_a.bin");
  std::remove("workers_b.bin");
}

TEST_CASE("periodic coefficients allow exact time-shift reuse") {
  auto d = testing::make_desk(/*periodic=*/true);
  const CorrectorOperator direct =
      assemble_corrector_operator(d.pair, d.grid, d.coeff, 2, 2, 1, false);
  const CorrectorOperator shared =
      assemble_corrector_operator(d.pair, d.grid, d.coeff, 2, 2, 1, true);
  CHECK(shared.reuse_time_shift);
  CHECK(shared.blocks.size() < direct.blocks.size());

  direct.for_each_logical(d.pair, [&](const BlockKey& key, const BlockView& dv) {
    const BlockView sv = shared.resolve(key);
    REQUIRE(dv.length == sv.length);
    CHECK(dv.ramp == sv.ramp);
    for (int p = 0; p < dv.length; ++p)
      CHECK(rel_diff(sv.block->intervals[p], dv.block->intervals[p]) <= 1e-12);
  });
}

TEST_CASE("apply is linear and matches single-basis correctors") {
  auto d = testing::make_desk();
  const CorrectorOperator op =
      assemble_corrector_operator(d.pair, d.grid, d.coeff, 2, 2, 1, false);
  const int nc = d.pair.coarse.interior_count();

  const SpaceTimeFunction zero =
      apply_corrector(op, d.pair, d.grid, Eigen::MatrixXd::Zero(nc, d.grid.coarse_steps));
  for (const auto& s : zero.slices) CHECK(s.norm() == 0.0);

  // one unit coefficient reproduces that basis corrector
  Eigen::MatrixXd unit = Eigen::MatrixXd::Zero(nc, d.grid.coarse_steps);
  unit(4, 1) = 1.0;
  const SpaceTimeFunction via_apply = apply_corrector(op, d.pair, d.grid, unit);
  const SpaceTimeFunction direct =
      corrector_of_basis(op, d.pair, d.grid, d.pair.coarse.interior_nodes[4], 2);
  for (int g = 0; g <= d.grid.total_fine_steps(); ++g)
    CHECK((via_apply.slices[g] - direct.slices[g]).lpNorm<Eigen::Infinity>() <= 1e-15);

  // additivity
  SplitMix64 rng(3);
  Eigen::MatrixXd u(nc, d.grid.coarse_steps), v(nc, d.grid.coarse_steps);
  for (int i = 0; i < u.size(); ++i) {
    u.data()[i] = rng.next_double() - 0.5;
    v.data()[i] = rng.next_double() - 0.5;
  }
  SpaceTimeFunction sum = apply_corrector(op, d.pair, d.grid, u);
  sum += apply_corrector(op, d.pair, d.grid, v);
  const SpaceTimeFunction joint = apply_corrector(op, d.pair, d.grid, Eigen::MatrixXd(u + v));
  double scale = 0.0, err = 0.0;
  for (int g = 0; g <= d.grid.total_fine_steps(); ++g) {
    scale = std::max(scale, sum.slices[g].lpNorm<Eigen::Infinity>());
    err = std::max(err, (sum.slices[g] - joint.slices[g]).lpNorm<Eigen::Infinity>());
  }
  CHECK(err <= 1e-13 * scale);

  CHECK_THROWS_AS(apply_corrector(op, d.pair, d.grid, Eigen::MatrixXd::Zero(3, 3)),
                  invalid_argument);
}

TEST_CASE("cache files round-trip, rewrite identically, and refuse mismatches") {
  auto d = testing::make_desk();
  const CorrectorOperator op =
      assemble_corrector_operator(d.pair, d.grid, d.coeff, 1, 2, 1, false);

  save_corrector_cache("cache_a.bin", op);
  save_corrector_cache("cache_b.bin", op);
  CHECK(file_bytes("cache_a.bin") == file_bytes("cache_b.bin"));

  const CorrectorOperator loaded = load_corrector_cache("cache_a.bin", d.pair, d.grid, d.coeff);
  CHECK(loaded.blocks.size() == op.blocks.size());
  CHECK(loaded.k == op.k);
  CHECK(loaded.ell == op.ell);
  for (const auto& [key, block] : op.blocks) {
    const auto& other = loaded.blocks.at(key);
    REQUIRE(other.intervals.size() == block.intervals.size());
    for (size_t p = 0; p < block.intervals.size(); ++p)
      CHECK((other.intervals[p] - block.intervals[p]).lpNorm<Eigen::Infinity>() == 0.0);
  }

  const Coefficient other_coeff =
      generate_random_coefficient(43, 0.25, 0.125, 0.01, 0.1, false, d.grid.t_final);
  CHECK_THROWS_WITH_AS(load_corrector_cache("cache_a.bin", d.pair, d.grid, other_coeff),
                       doctest::Contains("coefficient fingerprint"), io_error);
  std::remove("cache_a.bin");
  std::remove("cache_b.bin");
}

}  // TEST_SUITE
