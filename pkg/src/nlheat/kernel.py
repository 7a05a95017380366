"""Neumann heat kernel on boxes: eigen-expansion, constants, and estimates.

On a product domain the kernel factorizes axis by axis,

    K(t, x, y) = prod_i K_1d(t, x_i, y_i; L_i),

with each 1-D factor summed over cosine modes.  Truncation keeps every mode
with lambda_k * t <= LAMBDA_T_CUTOFF, so the dropped per-mode weight is
below exp(-40) ~ 4e-18 and a geometric tail bound is recorded.

The module also evaluates the dilation-invariant supremum

    H = sup_{t>0, x}  t^(N/2) * (K(t, x, x) - 1/|Omega|)

on finite log-time/corner-aware grids, the first positive eigenvalue of
the unit-volume ball (via a bracketed Bessel-derivative root), and the
explicit small-data amplitude thresholds built from these constants.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import Domain, Field, from_spectral, integrate, linf_norm, lp_norm, mean, to_spectral

__all__ = [
    "LAMBDA_T_CUTOFF",
    "KernelConstants",
    "KernelEval",
    "MarginReport",
    "lambda1",
    "kernel_eval",
    "k0_diag",
    "estimate_H",
    "default_time_grid",
    "default_diag_points",
    "lambda1_star",
    "rho_r",
    "rho_global",
    "decay_prefactor",
    "compute_constants",
    "linear_heat_evolve",
    "verify_lp_lq",
    "holder_product_check",
]

LAMBDA_T_CUTOFF = 40.0


def lambda1(domain):
    """First positive Neumann eigenvalue: (pi / longest axis)^2."""
    return (np.pi / max(domain.lengths)) ** 2


@dataclass(frozen=True)
class KernelEval:
    """One truncated kernel evaluation with its recorded tail bound."""

    t: float
    x: tuple
    y: tuple
    value: float
    truncation: int
    tail_bound: float


@dataclass
class KernelConstants:
    """Constants of a domain plus provenance of the estimation grids."""

    domain: Domain
    lambda1: float
    H: float
    lambda1_star: float
    rho_r: dict
    estimation_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.domain.dim
        if self.lambda1 <= 0:
            raise ValueError("lambda1 must be positive")
        if self.H < (4 * np.pi) ** (-n / 2.0) - 1e-9:
            raise ValueError("H estimate below its universal lower bound")
        if self.lambda1 * self.domain.volume ** (2.0 / n) > self.lambda1_star * (1 + 1e-9):
            raise ValueError("isoperimetric eigenvalue inequality violated")
        if any(v <= 0 for v in self.rho_r.values()):
            raise ValueError("amplitude thresholds must be positive")


def _axis_truncation(L, t):
    """Smallest k_max with lambda_{k_max+1} t > cutoff (>= 1 mode kept)."""
    return max(1, int(np.ceil(np.sqrt(LAMBDA_T_CUTOFF / t) * L / np.pi)))


def _kernel_1d(L, t, x, y, kmax):
    k = np.arange(1, kmax + 1)
    lam = (k * np.pi / L) ** 2
    s = np.sum(np.exp(-lam * t) * np.cos(k * np.pi * x / L) * np.cos(k * np.pi * y / L))
    return 1.0 / L + (2.0 / L) * s


def _tail_1d(L, t, kmax):
    """Geometric bound on the dropped modes of one axis factor."""
    lam_next = ((kmax + 1) * np.pi / L) ** 2
    ratio = math.exp(-(2 * kmax + 3) * (np.pi / L) ** 2 * t)
    head = math.exp(-lam_next * t)
    return (2.0 / L) * head / max(1e-300, 1.0 - ratio)


def kernel_eval(domain, t, x, y, truncation=None):
    """Truncated K(t, x, y) with per-axis products and a tail bound.

    ``truncation`` is a per-axis mode count; it is auto-raised whenever the
    requested value keeps modes with weight above exp(-cutoff).
    """
    if t <= 0:
        raise ValueError("kernel time must be positive")
    x = tuple(np.atleast_1d(x).astype(float))
    y = tuple(np.atleast_1d(y).astype(float))
    if len(x) != domain.dim or len(y) != domain.dim:
        raise ValueError("point dimension mismatch")
    for xi, yi, L in zip(x, y, domain.lengths):
        if not (0.0 <= xi <= L and 0.0 <= yi <= L):
            raise ValueError("points must lie in the closed domain")
    value = 1.0
    tail = 0.0
    kmax_used = 0
    for xi, yi, L in zip(x, y, domain.lengths):
        kmax = _axis_truncation(L, t)
        if truncation is not None:
            kmax = max(kmax, int(truncation))
        fac = _kernel_1d(L, t, xi, yi, kmax)
        fac_tail = _tail_1d(L, t, kmax)
        # |prod (f_i + e_i) - prod f_i| <= sum e_i * prod_upper
        tail = tail * (abs(fac) + fac_tail) + fac_tail * abs(value)
        value *= fac
        kmax_used = max(kmax_used, kmax)
    return KernelEval(t=float(t), x=x, y=y, value=float(value), truncation=kmax_used, tail_bound=float(tail))


def _k0_axis_sum(L, t, pts, truncation=None):
    """Centered axis sum (2/L) sum_{k>=1} e^{-lambda_k t} cos^2(k pi x / L).

    Summing the nonconstant modes directly avoids the cancellation of
    K - 1/|Omega| when the kernel is exponentially close to uniform.
    """
    kmax = _axis_truncation(L, t)
    if truncation is not None:
        kmax = max(kmax, int(truncation))
    k = np.arange(1, kmax + 1)
    w = np.exp(-((k * np.pi / L) ** 2) * t)
    cs = np.cos(np.outer(k, np.asarray(pts, dtype=float) / L) * np.pi) ** 2
    return (2.0 / L) * (w @ cs)


def k0_diag(domain, t, x, truncation=None):
    """K(t, x, x) - 1/|Omega| without forming the difference explicitly."""
    if t <= 0:
        raise ValueError("kernel time must be positive")
    x = tuple(np.atleast_1d(x).astype(float))
    sums = [
        float(_k0_axis_sum(L, t, [xi], truncation)[0])
        for xi, L in zip(x, domain.lengths)
    ]
    if domain.dim == 1:
        return sums[0]
    l1, l2 = domain.lengths
    return sums[0] * sums[1] + sums[0] / l2 + sums[1] / l1


def default_time_grid(domain, n=120, t_min_scale=1e-8):
    """Log-spaced times from t_min_scale * (longest axis)^2 up to 10/lambda1.

    Scaling the lower endpoint with the squared diameter keeps the grid
    covariant under dilation, which makes the H estimate dilation-invariant
    by construction.
    """
    lmax = max(domain.lengths)
    return np.geomspace(t_min_scale * lmax**2, 10.0 / lambda1(domain), n)


def default_diag_points(domain, per_axis=5):
    """Per-axis diagonal sample points: corners, midpoint, and quartiles.

    The supremum of t^(N/2) K_0(t, x, x) is attained toward the boundary,
    so corners must be present.
    """
    pts = []
    for L in domain.lengths:
        fr = np.linspace(0.0, 1.0, per_axis)
        pts.append(fr * L)
    return pts


def estimate_H(domain, t_grid=None, x_grid=None, truncation=None):
    """Grid maximum of t^(N/2) (K(t,x,x) - 1/|Omega|).

    Monotone nondecreasing under refinement of either grid (it is a max over
    a superset).  The finite-t grid slightly underestimates the supremum;
    with the default grids the gap is about sqrt(t_min) for an interval.
    """
    if t_grid is None:
        t_grid = default_time_grid(domain)
    if x_grid is None:
        x_grid = default_diag_points(domain)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or any(len(ax) == 0 for ax in x_grid):
        raise ValueError("estimation grids must be nonempty")
    n = domain.dim
    best = -np.inf
    for t in t_grid:
        sums = [
            _k0_axis_sum(L, t, ax_pts, truncation)
            for ax_pts, L in zip(x_grid, domain.lengths)
        ]
        if n == 1:
            diag = sums[0]
        else:
            l1, l2 = domain.lengths
            diag = np.multiply.outer(sums[0], sums[1])
            diag += np.multiply.outer(sums[0] / l2, np.ones_like(sums[1]))
            diag += np.multiply.outer(np.ones_like(sums[0]), sums[1] / l1)
        best = max(best, t ** (n / 2.0) * float(np.max(diag)))
    return float(best)


def _bessel_j0(x):
    """Power series for J0; adequate on the bracketing interval."""
    term = 1.0
    total = 1.0
    m = 0
    while abs(term) > 1e-18:
        m += 1
        term *= -(x * x / 4.0) / (m * m)
        total += term
    return total


def _bessel_j1(x):
    term = x / 2.0
    total = term
    m = 0
    while abs(term) > 1e-18:
        m += 1
        term *= -(x * x / 4.0) / (m * (m + 1))
        total += term
    return total


def lambda1_star(dim):
    """First positive Neumann eigenvalue of the unit-volume ball.

    dim=1: interval of length 1, pi^2.  dim=2: disk of radius 1/sqrt(pi),
    so pi * j'^2 where j' is the first positive root of J1', found by
    bisection on [1.5, 2.5].
    """
    if dim == 1:
        return np.pi**2
    if dim != 2:
        raise ValueError("only dimensions 1 and 2 are supported")
    fn = lambda x: _bessel_j0(x) - _bessel_j1(x) / x  # J1'(x)
    lo, hi = 1.5, 2.5
    flo = fn(lo)
    if flo * fn(hi) >= 0:
        raise RuntimeError("Bessel-derivative root not bracketed")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if flo * fn(mid) <= 0:
            hi = mid
        else:
            lo, flo = mid, fn(mid)
    root = 0.5 * (lo + hi)
    return np.pi * root**2


def _gamma_nr(n, r):
    return (1.0 + math.exp(-1.0) / (2.0 * (1.0 - n / (2.0 * r)))) ** r * 2.0 ** (r - 1) * r ** (-n / 2.0)


def rho_r(constants, r):
    """Closed-form amplitude threshold for global existence at exponent r.

    rho_r = lambda1/(4r) * exp(-(gamma_{N,r} lambda1^{N/2} |Omega| H)^{2/N})
    with gamma_{N,r} = (1 + e^{-1}/(2(1 - N/2r)))^r 2^{r-1} r^{-N/2};
    requires r > N/2 and r >= 2.
    """
    n = constants.domain.dim
    if not (r > n / 2.0 and r >= 2.0):
        raise ValueError(f"need r > N/2 and r >= 2, got r={r} in dimension {n}")
    lam1 = constants.lambda1
    inner = _gamma_nr(n, r) * lam1 ** (n / 2.0) * constants.domain.volume * constants.H
    return lam1 / (4.0 * r) * math.exp(-(inner ** (2.0 / n)))


def rho_global(constants):
    """Amplitude threshold of the dimension-only form.

    rho / lambda1 = 1/(2N) * exp(-gamma_N lambda1*(N) H^{2/N}) with
    gamma_N = 2^7 / N.
    """
    n = constants.domain.dim
    gamma_n = 2.0**7 / n
    expo = gamma_n * constants.lambda1_star * constants.H ** (2.0 / n)
    return constants.lambda1 / (2.0 * n) * math.exp(-expo)


def decay_prefactor(constants, r, u0_linf):
    """C(r) in the exponential-decay bound for t >= 1."""
    n = constants.domain.dim
    return (
        2.0 ** ((r - 1.0) / r)
        * constants.domain.volume ** (1.0 / r)
        * constants.H ** (1.0 / r)
        * (1.0 + 2.0 * u0_linf / (1.0 - n / (2.0 * r)))
    )


def compute_constants(domain, r_values=(2.0,), t_grid=None, x_grid=None):
    """Estimate every kernel constant of a domain in one bundle."""
    if t_grid is None:
        t_grid = default_time_grid(domain)
    if x_grid is None:
        x_grid = default_diag_points(domain)
    h_est = estimate_H(domain, t_grid, x_grid)
    consts = KernelConstants(
        domain=domain,
        lambda1=lambda1(domain),
        H=h_est,
        lambda1_star=lambda1_star(domain.dim),
        rho_r={},
        estimation_meta={
            "t_min": float(np.min(t_grid)),
            "t_max": float(np.max(t_grid)),
            "t_points": int(len(t_grid)),
            "x_points_per_axis": tuple(len(ax) for ax in x_grid),
            "lambda_t_cutoff": LAMBDA_T_CUTOFF,
        },
    )
    consts.rho_r = {float(r): rho_r(consts, r) for r in r_values}
    KernelConstants.__post_init__(consts)  # re-check with thresholds filled
    return consts


def linear_heat_evolve(u0, t):
    """Exact heat semigroup in eigenspace: c_k(t) = c_k(0) exp(-lambda_k t)."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    c = to_spectral(u0)
    c.coeffs = c.coeffs * np.exp(-c.grid.eigenvalues * t)
    return from_spectral(c)


@dataclass(frozen=True)
class MarginReport:
    """Both sides of an inequality and its slack (rhs - lhs)."""

    lhs: float
    rhs: float
    slack: float
    satisfied: bool
    detail: str = ""


def verify_lp_lq(u0, t, p, q, h_const, rel_tol=1e-12):
    """Smoothing estimate for the mean-zero heat flow.

    Compares ||v(t)||_q against (2^{p-1} H t^{-N/2})^{1/p - 1/q} ||u0||_p,
    where v is the linear evolution of u0; requires 1 < p <= q and a
    mean-free u0.
    """
    if not (p > 1 and (np.isinf(q) or q >= p)):
        raise ValueError("need 1 < p <= q (q may be inf)")
    if t <= 0:
        raise ValueError("time must be positive")
    scale = max(1.0, lp_norm(u0, 2))
    if abs(mean(u0)) > 1e-12 * scale:
        raise ValueError("u0 must be mean-zero")
    n = u0.grid.domain.dim
    v = linear_heat_evolve(u0, t)
    lhs = lp_norm(v, q)
    exponent = 1.0 / p - (0.0 if np.isinf(q) else 1.0 / q)
    rhs = (2.0 ** (p - 1) * h_const * t ** (-n / 2.0)) ** exponent * lp_norm(u0, p)
    slack = rhs - lhs
    return MarginReport(lhs=lhs, rhs=rhs, slack=slack, satisfied=slack >= -rel_tol * abs(rhs))


def holder_product_check(f, alpha, beta, rel_tol=1e-12):
    """Moment-product inequality: int|f|^a * int|f|^b <= |Omega| int|f|^(a+b)."""
    if alpha < 1 or beta < 1:
        raise ValueError("exponents must be >= 1")
    vol = f.grid.domain.volume
    ia = integrate(Field(f.grid, np.abs(f.values) ** alpha))
    ib = integrate(Field(f.grid, np.abs(f.values) ** beta))
    iab = integrate(Field(f.grid, np.abs(f.values) ** (alpha + beta)))
    lhs = ia * ib
    rhs = vol * iab
    slack = rhs - lhs
    return MarginReport(lhs=lhs, rhs=rhs, slack=slack, satisfied=slack >= -rel_tol * abs(rhs))
