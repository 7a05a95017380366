"""Rectangular domains with Neumann cosine eigenstructure.

A scalar function on an interval or a rectangle is held either as nodal
values on a midpoint-shifted uniform grid (``Field``) or as coefficients in
the orthonormal Neumann eigenbasis (``SpectralCoeffs``).  With nodes at
x_j = (j + 1/2) L / M the type-II DCT is an exact orthogonal map onto the
first M cosine modes per axis, so transforms round-trip to rounding error
and the discrete Parseval identity holds exactly.

Basis convention (per axis, length L):

    f_0(x) = 1/sqrt(L),   f_k(x) = sqrt(2/L) cos(k pi x / L)   k >= 1

so that sum_k c_k^2 equals the quadrature of u^2, coefficient 0 carries
the mean (c_0 = mean * sqrt(volume)), and the eigenvalue of multi-index k
is sum_i (k_i pi / L_i)^2.
"""

from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np
from scipy import fft as sfft

from .errors import NonFiniteError, NonpositiveLengthError

__all__ = [
    "Domain",
    "Grid",
    "Field",
    "SpectralCoeffs",
    "make_domain",
    "make_grid",
    "fine_grid",
    "neumann_eigenvalues",
    "to_spectral",
    "from_spectral",
    "pad_coeffs",
    "truncate_coeffs",
    "gradient_values",
    "integrate",
    "mean",
    "grad_norm_sq",
    "lp_norm",
    "linf_norm",
    "min_value",
    "field_from_function",
]


@dataclass(frozen=True)
class Domain:
    """A product domain [0, L_1] x ... x [0, L_dim]."""

    lengths: tuple

    def __post_init__(self):
        if len(self.lengths) not in (1, 2):
            raise ValueError(f"only 1-D and 2-D domains are supported, got {len(self.lengths)} axes")
        if any(not np.isfinite(L) or L <= 0 for L in self.lengths):
            raise NonpositiveLengthError(f"axis lengths must be positive, got {self.lengths}")

    @cached_property
    def dim(self):
        return len(self.lengths)

    @cached_property
    def volume(self):
        return float(np.prod(self.lengths))

    def dilated(self, factor):
        """The domain scaled by ``factor`` about the origin."""
        if factor <= 0:
            raise NonpositiveLengthError("dilation factor must be positive")
        return Domain(tuple(factor * L for L in self.lengths))


def make_domain(dim, lengths):
    """Build a validated domain; ``dim`` must match ``len(lengths)``."""
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    lengths = tuple(float(L) for L in lengths)
    if len(lengths) != dim:
        raise ValueError(f"expected {dim} lengths, got {len(lengths)}")
    return Domain(lengths)


@dataclass(frozen=True)
class Grid:
    """Midpoint-shifted collocation grid on a Domain.

    Nodes on axis i sit at (j + 1/2) L_i / M_i, which avoids boundary
    duplication and makes the DCT-II orthogonal on the retained modes.
    """

    domain: Domain
    points_per_axis: tuple

    def __post_init__(self):
        if len(self.points_per_axis) != self.domain.dim:
            raise ValueError("points_per_axis must have one entry per axis")
        if any(int(m) != m or m < 4 for m in self.points_per_axis):
            raise ValueError(f"need at least 4 points per axis, got {self.points_per_axis}")

    @cached_property
    def shape(self):
        return tuple(self.points_per_axis)

    @cached_property
    def npoints(self):
        return int(np.prod(self.points_per_axis))

    @cached_property
    def cell_volume(self):
        return self.domain.volume / self.npoints

    @cached_property
    def axis_nodes(self):
        return tuple(
            (np.arange(m) + 0.5) * L / m
            for m, L in zip(self.points_per_axis, self.domain.lengths)
        )

    @cached_property
    def eigenvalues(self):
        """lambda_k = sum_i (k_i pi / L_i)^2 for every retained multi-index."""
        per_axis = [
            (np.arange(m) * np.pi / L) ** 2
            for m, L in zip(self.points_per_axis, self.domain.lengths)
        ]
        lam = per_axis[0]
        for nxt in per_axis[1:]:
            lam = lam[..., None] + nxt
        return lam

    def meshgrid(self):
        return np.meshgrid(*self.axis_nodes, indexing="ij")


def make_grid(domain, points_per_axis):
    if np.isscalar(points_per_axis):
        points_per_axis = (int(points_per_axis),) * domain.dim
    return Grid(domain, tuple(int(m) for m in points_per_axis))


def fine_grid(grid, factor=2):
    """The same domain sampled ``factor`` times more densely per axis."""
    return Grid(grid.domain, tuple(int(round(m * factor)) for m in grid.points_per_axis))


@dataclass
class Field:
    """Nodal values of a scalar function on a grid. Entries must be finite."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteError("field contains NaN or Inf entries")

    def copy(self):
        return Field(self.grid, self.values.copy())


@dataclass
class SpectralCoeffs:
    """Coefficients in the orthonormal cosine eigenbasis of a grid."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(f"coeffs shape {self.coeffs.shape} != grid shape {self.grid.shape}")

    @property
    def eigenvalues(self):
        return self.grid.eigenvalues

    def copy(self):
        return SpectralCoeffs(self.grid, self.coeffs.copy())


def neumann_eigenvalues(domain, cutoff):
    """The (multi-index, eigenvalue) pairs with k_i < cutoff, ordered by eigenvalue.

    Multi-index 0 carries eigenvalue exactly 0; the smallest positive entry
    equals (pi / max_i L_i)^2.
    """
    if cutoff < 2:
        raise ValueError("cutoff must be at least 2")
    pairs = []
    for idx in product(range(cutoff), repeat=domain.dim):
        lam = sum((k * np.pi / L) ** 2 for k, L in zip(idx, domain.lengths))
        pairs.append((idx, float(lam)))
    pairs.sort(key=lambda kv: (kv[1], kv[0]))
    return pairs


def to_spectral(field):
    """Forward transform; exact (to rounding) on band-limited fields."""
    scale = np.sqrt(field.grid.cell_volume)
    coeffs = scale * sfft.dctn(field.values, type=2, norm="ortho")
    return SpectralCoeffs(field.grid, coeffs)


def from_spectral(coeffs):
    scale = np.sqrt(coeffs.grid.cell_volume)
    values = sfft.idctn(coeffs.coeffs / scale, type=2, norm="ortho")
    return Field(coeffs.grid, values)


def pad_coeffs(coeffs, target_grid):
    """Zero-extend coefficients onto a finer grid of the same domain.

    Because the basis functions are grid-independent, padding represents the
    identical function sampled more densely.
    """
    if target_grid.domain != coeffs.grid.domain:
        raise ValueError("padding must stay on the same domain")
    out = np.zeros(target_grid.shape)
    out[tuple(slice(0, m) for m in coeffs.grid.shape)] = coeffs.coeffs
    return SpectralCoeffs(target_grid, out)


def truncate_coeffs(coeffs, target_grid):
    """Drop modes beyond the target grid's band (spectral projection)."""
    if target_grid.domain != coeffs.grid.domain:
        raise ValueError("truncation must stay on the same domain")
    sl = tuple(slice(0, m) for m in target_grid.shape)
    return SpectralCoeffs(target_grid, coeffs.coeffs[sl].copy())


def _sine_eval_axis(arr, axis, npoints):
    """Evaluate an orthonormal sine series on midpoint nodes along one axis.

    ``arr`` holds the coefficient of sin(k pi x / L) at index k (entry 0
    unused); DST-II index i corresponds to wavenumber k = i + 1.  Uses the
    same ortho normalization as the cosine transforms, so callers divide by
    sqrt(cell_volume) exactly as in ``from_spectral``.
    """
    shifted = np.roll(arr, -1, axis=axis)
    idx = [slice(None)] * arr.ndim
    idx[axis] = npoints - 1
    shifted[tuple(idx)] = 0.0
    return sfft.idst(shifted, type=2, norm="ortho", axis=axis)


def gradient_values(coeffs, target_grid=None):
    """Per-axis derivative values, evaluated spectrally on ``target_grid``.

    Differentiating the cosine series gives a sine series per axis, which is
    evaluated exactly on the (possibly finer) midpoint grid.
    """
    grid = coeffs.grid
    target = target_grid or grid
    padded = pad_coeffs(coeffs, target) if target is not grid else coeffs
    scale = np.sqrt(target.cell_volume)
    out = []
    for axis, (m, L) in enumerate(zip(target.points_per_axis, target.domain.lengths)):
        k = np.arange(m) * np.pi / L
        shape = [1] * target.domain.dim
        shape[axis] = m
        d = -padded.coeffs * k.reshape(shape)
        vals = _sine_eval_axis(d, axis, m)
        # remaining axes are still cosine series
        for other in range(target.domain.dim):
            if other != axis:
                vals = sfft.idct(vals, type=2, norm="ortho", axis=other)
        out.append(vals / scale)
    return out


def integrate(field):
    """Quadrature with uniform weights; exact for resolved cosine modes."""
    return float(field.values.sum() * field.grid.cell_volume)


def mean(field):
    return integrate(field) / field.grid.domain.volume


def grad_norm_sq(obj):
    """int |grad u|^2 via Parseval: sum_k lambda_k c_k^2."""
    coeffs = obj if isinstance(obj, SpectralCoeffs) else to_spectral(obj)
    return float(np.sum(coeffs.grid.eigenvalues * coeffs.coeffs**2))


def lp_norm(field, p):
    """Grid-quadrature L^p norm; ``p = np.inf`` gives the grid max of |u|."""
    if np.isinf(p):
        return linf_norm(field)
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float((np.sum(np.abs(field.values) ** p) * field.grid.cell_volume) ** (1.0 / p))


def linf_norm(field):
    return float(np.max(np.abs(field.values)))


def min_value(field):
    return float(np.min(field.values))


def field_from_function(grid, fn):
    """Sample ``fn`` (vectorized over coordinate arrays) on the grid nodes."""
    return Field(grid, np.asarray(fn(*grid.meshgrid()), dtype=float))
