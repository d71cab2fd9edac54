"""Smoke tests for the python bindings: tiny instances, structural checks."""

import numpy as np
import pytest

import stlod


@pytest.fixture(scope="module")
def desk():
    pair = stlod.build_mesh_pair(2, 4)
    grid = stlod.build_temporal_grid(0.75, 3, 4)
    coeff = stlod.generate_random_coefficient(42, 0.25, 0.125, 0.01, 0.1, False, 0.75)
    interp = stlod.build_quasi_interpolation(pair)
    return pair, grid, coeff, interp


def test_mesh_counts():
    mesh = stlod.build_uniform_mesh(1)
    assert mesh.element_count == 8
    assert mesh.node_count == 9
    assert mesh.interior_count == 1

    mesh = stlod.build_uniform_mesh(2)
    assert mesh.element_count == 32
    assert mesh.node_count == 25
    assert mesh.interior_count == 9

    with pytest.raises(ValueError):
        stlod.build_uniform_mesh(0)


def test_temporal_grid_partition():
    grid = stlod.build_temporal_grid(1.25, 10, 16)
    assert grid.coarse_step == pytest.approx(0.125, abs=1e-14)
    assert grid.fine_step == pytest.approx(0.0078125, abs=1e-14)


def test_coefficient_determinism_and_bounds():
    a = stlod.generate_random_coefficient(7, 0.25, 0.25, 0.01, 0.1, True, 0.25)
    b = stlod.generate_random_coefficient(7, 0.25, 0.25, 0.01, 0.1, True, 0.25)
    assert a.values == b.values
    assert a.alpha >= 0.01 and a.beta < 0.1
    assert a.value_on(0.3, 0.7, 0.1) == a.value_on(0.3, 0.7, 0.35)


def test_patch_saturation():
    pair = stlod.build_mesh_pair(2, 4)
    patch = stlod.make_patch(pair, 5, stlod.saturating_radius(pair.coarse))
    assert patch.saturated
    assert len(patch.coarse_elements) == pair.coarse.element_count


def test_interpolation_projectivity(desk):
    pair, grid, coeff, interp = desk
    rng = np.random.default_rng(3)
    coarse = rng.standard_normal(pair.coarse.interior_count)
    roundtrip = interp.apply(interp.prolong(coarse))
    assert np.max(np.abs(roundtrip - coarse)) < 1e-12


def test_corrector_constraint_and_solve(desk):
    pair, grid, coeff, interp = desk
    op = stlod.assemble_corrector_operator(pair, grid, coeff, 2, 2)
    assert op.max_constraint_residual() <= 1e-9

    system = stlod.assemble_coarse_system(op, pair, grid, coeff)
    coarse = stlod.solve_multiscale(system, pair, grid, interp, 1.0)
    assert coarse.shape == (pair.coarse.interior_count, grid.coarse_steps)

    zero = stlod.solve_multiscale(system, pair, grid, interp, 0.0)
    assert np.max(np.abs(zero)) == 0.0

    # the reconstructed approximation tracks the fine reference
    approx = stlod.reconstruct_fine(coarse, op, pair, grid, interp)
    ref = stlod.solve_reference_fine(pair.fine, grid, coeff, 1.0)
    ctx = stlod.make_norm_context(pair.fine, grid)
    rel = stlod.trial_norm(ctx, approx - ref) / stlod.trial_norm(ctx, ref)
    assert 0.0 < rel < 0.8


def test_norms(desk):
    pair, grid, coeff, interp = desk
    ctx = stlod.make_norm_context(pair.fine, grid)
    zero = np.zeros((grid.coarse_steps * grid.fine_per_coarse + 1, pair.fine.interior_count))
    assert stlod.trial_norm(ctx, zero) == 0.0

    rng = np.random.default_rng(5)
    u = zero.copy()
    u[1:, :] = rng.standard_normal(u[1:, :].shape)
    assert stlod.trial_norm(ctx, 3.0 * u) == pytest.approx(3.0 * stlod.trial_norm(ctx, u), rel=1e-12)
    assert stlod.l2h1_norm(ctx, u) > 0.0


def test_cache_roundtrip(tmp_path, desk):
    pair, grid, coeff, interp = desk
    op = stlod.assemble_corrector_operator(pair, grid, coeff, 1, 2)
    path = str(tmp_path / "cache.bin")
    stlod.save_corrector_cache(path, op)
    loaded = stlod.load_corrector_cache(path, pair, grid, coeff)
    assert loaded.stored_blocks == op.stored_blocks

    other = stlod.generate_random_coefficient(43, 0.25, 0.125, 0.01, 0.1, False, 0.75)
    with pytest.raises(IOError):
        stlod.load_corrector_cache(path, pair, grid, other)
