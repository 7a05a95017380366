"""Seeded smooth random fields used by experiments and tests.

Fields are truncated random cosine series with amplitudes decaying like
|k|^-2, so they are resolved on any grid with a few dozen points, and the
zero mode is dropped so the mean vanishes exactly.
"""

import numpy as np

from .domain import SpectralCoeffs, from_spectral, linf_norm

__all__ = ["random_mean_zero_field", "scale_to_linf"]


def random_mean_zero_field(grid, seed, max_mode=8, amplitude=1.0):
    """A mean-zero field from a seeded truncated cosine series.

    Deterministic given (grid, seed, max_mode, amplitude); coefficients of
    multi-index k are standard normals weighted by |k|_2^-2.
    """
    rng = np.random.default_rng(seed)
    kmax = min(max_mode + 1, *grid.points_per_axis)
    coeffs = np.zeros(grid.shape)
    block = tuple(slice(0, kmax) for _ in grid.shape)
    draws = rng.standard_normal((kmax,) * grid.domain.dim)
    ks = np.meshgrid(*(np.arange(kmax),) * grid.domain.dim, indexing="ij")
    ksq = sum(k.astype(float) ** 2 for k in ks)
    ksq[(0,) * grid.domain.dim] = np.inf  # zero mode stays zero: mean-free by construction
    coeffs[block] = amplitude * draws / ksq
    return from_spectral(SpectralCoeffs(grid, coeffs))


def scale_to_linf(field, target):
    """Rescale so the grid max of |u| equals ``target`` exactly."""
    peak = linf_norm(field)
    if peak == 0.0:
        raise ValueError("cannot rescale the zero field")
    field.values *= target / peak
    return field
