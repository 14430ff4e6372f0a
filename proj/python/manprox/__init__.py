"""Riemannian proximal gradient and proximal Newton methods for sparse PCA."""

from ._core import (
    Manifold,
    ManproxError,
    check_stationarity,
    default_step,
    gen_handcrafted,
    gen_random,
    gen_synthetic,
    objective,
    read_matrix,
    soft_threshold,
    solve,
    solve_tangent_prox,
    standardize_columns,
    write_matrix,
)

__all__ = [
    "Manifold",
    "ManproxError",
    "check_stationarity",
    "default_step",
    "gen_handcrafted",
    "gen_random",
    "gen_synthetic",
    "objective",
    "read_matrix",
    "soft_threshold",
    "solve",
    "solve_tangent_prox",
    "standardize_columns",
    "write_matrix",
]
