"""Localized space-time multiscale solver for parabolic problems with
coefficients oscillating in space and time."""

from ._stlod import (
    CoarseSystem,
    Coefficient,
    CorrectorOperator,
    InterpolationOperator,
    NormContext,
    Patch,
    SpatialMesh,
    SpatialMeshPair,
    TemporalGrid,
    apply_corrector,
    assemble_coarse_system,
    assemble_corrector_operator,
    build_mesh_pair,
    build_quasi_interpolation,
    build_temporal_grid,
    build_uniform_mesh,
    delta_estimator,
    generate_random_coefficient,
    hminus1_norm,
    l2h1_norm,
    load_coefficient,
    load_corrector_cache,
    make_norm_context,
    make_patch,
    reconstruct_fine,
    saturating_radius,
    save_coefficient,
    save_corrector_cache,
    solve_multiscale,
    solve_reference_fine,
    theta_estimator,
    trial_norm,
)

__all__ = [
    "CoarseSystem",
    "Coefficient",
    "CorrectorOperator",
    "InterpolationOperator",
    "NormContext",
    "Patch",
    "SpatialMesh",
    "SpatialMeshPair",
    "TemporalGrid",
    "apply_corrector",
    "assemble_coarse_system",
    "assemble_corrector_operator",
    "build_mesh_pair",
    "build_quasi_interpolation",
    "build_temporal_grid",
    "build_uniform_mesh",
    "delta_estimator",
    "generate_random_coefficient",
    "hminus1_norm",
    "l2h1_norm",
    "load_coefficient",
    "load_corrector_cache",
    "make_norm_context",
    "make_patch",
    "reconstruct_fine",
    "saturating_radius",
    "save_coefficient",
    "save_corrector_cache",
    "solve_multiscale",
    "solve_reference_fine",
    "theta_estimator",
    "trial_norm",
]
