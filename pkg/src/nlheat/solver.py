"""Adaptive spectral time integrator for the mean-conserving reaction flow.

The evolution is u_t - Lap(u) = |u|^p - mean(|u|^p) with Neumann walls, so
the spatial mean of u is a conserved quantity.  The linear part is applied
exactly per mode through the integrating factor exp(-lambda_k dt); the
reaction is explicit, either first order (``imex1``, an exponential Euler
update) or second order (``etd2``, a two-stage exponential integrator).
Conservation is enforced structurally: spectral mode 0 of both the state
and the reaction term is assigned exactly 0 every step.

Blow-up is diagnosed, not proven: a run is declared ``blowup`` only when
the amplitude passes ``u_max`` while the adaptive step has collapsed to the
floor, and the reported end time comes from a power-law fit of the growth
of F(t) = int u^2 over its final decade.
"""

import csv
import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .domain import (
    Field,
    SpectralCoeffs,
    fine_grid,
    from_spectral,
    grad_norm_sq,
    lp_norm,
    make_grid,
    mean,
    pad_coeffs,
    to_spectral,
)
from .errors import NonFiniteError

__all__ = [
    "SolverConfig",
    "SolverState",
    "Diagnostics",
    "Outcome",
    "OutcomeKind",
    "MonitorReport",
    "nonlinear_term",
    "energy",
    "make_state",
    "step",
    "simulate",
    "fit_blowup_tail",
    "write_trajectory_csv",
    "resolution_amplitude",
    "monitor_energy_decay",
    "monitor_F_identity",
    "monitor_F_lower_bound",
    "monitor_min_principle",
    "monitor_inf_monotone",
    "monitor_L2_bound",
    "scaling_covariance_check",
    "energy_positivity_check",
]

SCHEMES = ("imex1", "etd2")


@dataclass
class SolverConfig:
    """Time-stepping parameters for one run."""

    grid: object
    p: float
    t_end: float
    dt_init: float = 1e-4
    dt_min: float = 1e-9
    dt_max: float = 1e-2
    cfl: float = 0.05
    u_max: float = 1e6
    dealias: bool = True
    scheme: str = "imex1"

    def __post_init__(self):
        if self.p <= 1:
            raise ValueError("nonlinearity exponent p must exceed 1")
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if self.u_max <= 0 or self.t_end <= 0:
            raise ValueError("u_max and t_end must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")

    @property
    def fine_factor(self):
        """Grid extension for evaluating the reaction without aliasing.

        A factor-2 grid integrates products of degree p+1 exactly for
        integer p <= 3; non-integer powers are not band-limited and the
        2x grid controls (not eliminates) their aliasing.
        """
        if not self.dealias:
            return 1
        if float(self.p).is_integer() and self.p > 3:
            return int(np.ceil((self.p + 1) / 2))
        return 2


@dataclass
class SolverState:
    """Live integration state; coeffs[0...] is exactly 0 at every step."""

    t: float
    coeffs: SpectralCoeffs
    step_index: int = 0
    last_dt: float = 0.0


@dataclass(frozen=True)
class Diagnostics:
    """Per-step scalars streamed into the trajectory."""

    t: float
    E: float
    F: float
    linf: float
    umin: float
    lp: float
    grad2: float
    dF_dt_rhs: float
    dt: float


class OutcomeKind(str, enum.Enum):
    COMPLETED = "Completed"
    BLOWUP = "BlowUp"
    STEP_FLOOR = "StepFloor"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    T_estimate: float = None
    reason: str = ""


def _zero_mean_mode(arr):
    """Pin spectral mode 0 to exactly zero (conservation enforcement)."""
    arr[(0,) * arr.ndim] = 0.0
    return arr


def _fine_values(coeffs, factor):
    if factor == 1:
        return from_spectral(coeffs)
    return from_spectral(pad_coeffs(coeffs, fine_grid(coeffs.grid, factor)))


def _reaction_coeffs(coeffs, p, factor):
    """Spectral coefficients of |u|^p - mean(|u|^p), mode 0 pinned to 0."""
    uf = _fine_values(coeffs, factor)
    q = to_spectral(Field(uf.grid, np.abs(uf.values) ** p))
    sl = tuple(slice(0, m) for m in coeffs.grid.shape)
    out = q.coeffs[sl].copy()
    return _zero_mean_mode(out)


def nonlinear_term(u, p, dealias=True):
    """The reaction field |u|^p - mean(|u|^p) as seen by the solver."""
    if p <= 1:
        raise ValueError("nonlinearity exponent p must exceed 1")
    c = to_spectral(u)
    factor = 2 if dealias else 1
    out = _reaction_coeffs(c, p, factor)
    return from_spectral(SpectralCoeffs(u.grid, out))


def energy(u, p, dealias=True):
    """E(u) = int [ 1/2 |grad u|^2 - u|u|^p / (p+1) ] with dealiased quadrature."""
    coeffs = u if isinstance(u, SpectralCoeffs) else to_spectral(u)
    factor = 2 if dealias else 1
    uf = _fine_values(coeffs, factor)
    cubic = float(np.sum(uf.values * np.abs(uf.values) ** p) * uf.grid.cell_volume)
    return 0.5 * grad_norm_sq(coeffs) - cubic / (p + 1.0)


def _diagnostics(coeffs, p, factor, t, dt):
    uf = _fine_values(coeffs, factor)
    w = uf.grid.cell_volume
    grad2 = grad_norm_sq(coeffs)
    cubic = float(np.sum(uf.values * np.abs(uf.values) ** p) * w)
    e_val = 0.5 * grad2 - cubic / (p + 1.0)
    return Diagnostics(
        t=t,
        E=e_val,
        F=float(np.sum(coeffs.coeffs**2)),
        linf=float(np.max(np.abs(uf.values))),
        umin=float(np.min(uf.values)),
        lp=float((np.sum(np.abs(uf.values) ** p) * w) ** (1.0 / p)),
        grad2=grad2,
        dF_dt_rhs=-(p + 1.0) * e_val + 0.5 * (p - 1.0) * grad2,
        dt=dt,
    )


def _phi1(z):
    out = np.ones_like(z)
    small = np.abs(z) < 1e-8
    zs = z[~small]
    out[~small] = np.expm1(zs) / zs
    out[small] = 1.0 + z[small] / 2.0
    return out


def _phi2(z):
    out = np.full_like(z, 0.5)
    small = np.abs(z) < 1e-6
    zs = z[~small]
    out[~small] = (np.expm1(zs) - zs) / zs**2
    out[small] = 0.5 + z[small] / 6.0
    return out


def make_state(u0, config):
    """Initial state from a mean-zero field; mode 0 is hard-zeroed."""
    c = to_spectral(u0)
    scale = max(1.0, lp_norm(u0, 2))
    if abs(mean(u0)) > 1e-12 * scale:
        raise ValueError("initial data must be mean-zero")
    _zero_mean_mode(c.coeffs)
    return SolverState(t=0.0, coeffs=c, step_index=0, last_dt=0.0)


def _propose_dt(linf, config):
    # explicit-reaction stability: the linear part is exact per mode, so the
    # step is limited only by the reaction amplitude |u|^(p-1)
    return config.cfl / max(1.0, linf ** (config.p - 1.0))


def step(state, config, dt=None):
    """One accepted step; raises NonFiniteError if coefficients escape."""
    c = state.coeffs.coeffs
    lam = state.coeffs.grid.eigenvalues
    if dt is None:
        uf = _fine_values(state.coeffs, config.fine_factor)
        linf = float(np.max(np.abs(uf.values)))
        dt = min(max(_propose_dt(linf, config), config.dt_min), config.dt_max)
    z = -lam * dt
    decay = np.exp(z)
    n1 = _reaction_coeffs(state.coeffs, config.p, config.fine_factor)
    if config.scheme == "imex1":
        new = decay * c + dt * _phi1(z) * n1
    else:
        stage = decay * c + dt * _phi1(z) * n1
        _zero_mean_mode(stage)
        if not np.all(np.isfinite(stage)):
            raise NonFiniteError(f"stage coefficients non-finite at t={state.t}")
        n2 = _reaction_coeffs(SpectralCoeffs(state.coeffs.grid, stage), config.p, config.fine_factor)
        new = stage + dt * _phi2(z) * (n2 - n1)
    _zero_mean_mode(new)
    if not np.all(np.isfinite(new)):
        raise NonFiniteError(f"coefficients non-finite at t={state.t}")
    return SolverState(
        t=state.t + dt,
        coeffs=SpectralCoeffs(state.coeffs.grid, new),
        step_index=state.step_index + 1,
        last_dt=dt,
    )


def fit_blowup_tail(traj):
    """Power-law fit of F' against F over the final decade of growth.

    Returns (T_estimate, fitted_exponent).  If the tail does not look
    superlinear the current time is returned with exponent nan.
    """
    ts = np.array([d.t for d in traj])
    fs = np.array([d.F for d in traj])
    if len(ts) < 5 or fs[-1] <= 0:
        return ts[-1] if len(ts) else 0.0, float("nan")
    fp = np.gradient(fs, ts)
    mask = (fs >= fs[-1] / 10.0) & (fp > 0)
    if mask.sum() < 4:
        mask = fp > 0
    if mask.sum() < 4:
        return ts[-1], float("nan")
    gamma, logc = np.polyfit(np.log(fs[mask]), np.log(fp[mask]), 1)
    if gamma <= 1.02:
        return ts[-1], float(gamma)
    remaining = fs[-1] ** (1.0 - gamma) / (np.exp(logc) * (gamma - 1.0))
    return float(ts[-1] + remaining), float(gamma)


def simulate(u0, config, sample_times=(), on_step=None):
    """Integrate to t_end, streaming diagnostics.

    The adaptive step lands exactly on every requested sample time.  The run
    ends as Completed (t reached t_end), BlowUp (amplitude above u_max with
    the step at its floor, or a non-finite excursion from that state), or
    StepFloor (step collapse without amplitude growth - a resolution flag,
    never silently continued).
    """
    state = make_state(u0, config)
    factor = config.fine_factor
    traj = [_diagnostics(state.coeffs, config.p, factor, 0.0, 0.0)]
    if on_step is not None:
        on_step(state)
    targets = sorted({float(s) for s in sample_times if 0 < s <= config.t_end} | {config.t_end})
    eps_t = 1e-12 * config.t_end
    while state.t < config.t_end - eps_t:
        linf = traj[-1].linf
        dt_prop = _propose_dt(linf, config)
        if dt_prop < 2.0 * config.dt_min:
            if linf > config.u_max:
                t_est, gamma = fit_blowup_tail(traj)
                return traj, Outcome(
                    OutcomeKind.BLOWUP,
                    T_estimate=t_est,
                    reason=f"amplitude {linf:.3e} above threshold with step at floor; fitted growth exponent {gamma:.3f}",
                )
            return traj, Outcome(
                OutcomeKind.STEP_FLOOR,
                reason=f"adaptive step collapsed to {dt_prop:.3e} at amplitude {linf:.3e}; refine the grid or lower dt_min",
            )
        next_target = next(s for s in targets if s > state.t + eps_t)
        dt = min(max(dt_prop, config.dt_min), config.dt_max, next_target - state.t)
        try:
            state = step(state, config, dt=dt)
        except NonFiniteError:
            if linf > config.u_max:
                t_est, gamma = fit_blowup_tail(traj)
                return traj, Outcome(
                    OutcomeKind.BLOWUP,
                    T_estimate=t_est,
                    reason=f"non-finite excursion past amplitude threshold; fitted growth exponent {gamma:.3f}",
                )
            return traj, Outcome(
                OutcomeKind.STEP_FLOOR,
                reason="non-finite coefficients without amplitude growth; resolution failure",
            )
        traj.append(_diagnostics(state.coeffs, config.p, factor, state.t, state.last_dt))
        if on_step is not None:
            on_step(state)
    return traj, Outcome(OutcomeKind.COMPLETED, reason=f"reached t_end={config.t_end}")


TRAJECTORY_HEADER = ["t", "E", "F", "linf", "umin", "lp", "grad2", "dF_dt_rhs", "dt"]


def _fmt(x):
    return f"{x:.17g}"


def write_trajectory_csv(path, traj, outcome):
    """Deterministic CSV: 17 significant digits, LF endings, key-value footer."""
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for d in traj:
            writer.writerow([_fmt(getattr(d, k)) for k in TRAJECTORY_HEADER])
        fh.write(f"# kind {outcome.kind.value}\n")
        if outcome.T_estimate is not None:
            fh.write(f"# T_estimate {_fmt(outcome.T_estimate)}\n")
        fh.write(f"# reason {outcome.reason}\n")


@dataclass(frozen=True)
class MonitorReport:
    """Outcome of one runtime invariant check over a trajectory."""

    name: str
    applicable: bool
    passed: bool
    worst: float = float("nan")
    detail: str = ""

    @property
    def status(self):
        if not self.applicable:
            return "not_applicable"
        return "pass" if self.passed else "fail"


def monitor_energy_decay(traj, tol_scale=1e-8):
    """E must be nonincreasing step to step, up to tol_scale*(1+|E_0|)."""
    if len(traj) < 2:
        return MonitorReport("energy_decay", False, True, detail="fewer than 2 samples")
    e_vals = np.array([d.E for d in traj])
    tol = tol_scale * (1.0 + abs(e_vals[0]))
    increments = np.diff(e_vals)
    worst = float(increments.max())
    return MonitorReport(
        "energy_decay",
        True,
        worst <= tol,
        worst=worst,
        detail=f"worst per-step increase {worst:.3e} vs tolerance {tol:.3e}",
    )


def _nonuniform_derivative(values, ts):
    """Second-order three-point derivative on a possibly nonuniform grid."""
    return np.gradient(values, ts, edge_order=2)


def monitor_F_identity(traj, p, rel_tol=1e-3, amplitude_cut=None):
    """Central-difference F'/2 against the stored -(p+1)E + (p-1)/2 int|grad u|^2.

    Samples with amplitude above ``amplitude_cut`` (near blow-up) are
    excluded: the identity degrades there with the time resolution.
    """
    if len(traj) < 3:
        return MonitorReport("F_identity", False, True, detail="fewer than 3 samples")
    ts = np.array([d.t for d in traj])
    fs = np.array([d.F for d in traj])
    rhs = np.array([d.dF_dt_rhs for d in traj])
    linf = np.array([d.linf for d in traj])
    half_fp = 0.5 * _nonuniform_derivative(fs, ts)
    keep = np.ones(len(ts), dtype=bool)
    keep[0] = keep[-1] = False  # one-sided stencils at the ends
    if amplitude_cut is not None:
        resolved = len(_resolved_prefix(traj, amplitude_cut))
        keep[resolved:] = False
        if resolved:
            keep[resolved - 1] = False  # its central stencil reaches past the cut
    if not keep.any():
        return MonitorReport("F_identity", False, True, detail="no usable interior samples")
    scale = np.maximum(np.maximum(np.abs(rhs[keep]), np.abs(half_fp[keep])), 1e-30)
    rel = np.abs(half_fp[keep] - rhs[keep]) / scale
    worst = float(rel.max())
    return MonitorReport(
        "F_identity",
        True,
        worst <= rel_tol,
        worst=worst,
        detail=f"max relative mismatch {worst:.3e} over {int(keep.sum())} samples",
    )


def monitor_F_lower_bound(traj, p, lambda1_val, rel_tol=0.01):
    """With E(0) <= 0 the L2 mass obeys F(t) >= F(0) exp((p-1) lambda1 t)."""
    if not traj or traj[0].E > 0 or traj[0].F == 0:
        return MonitorReport("F_exponential_lower_bound", False, True, detail="requires E(0) <= 0 and nonzero data")
    ts = np.array([d.t for d in traj])
    fs = np.array([d.F for d in traj])
    bound = fs[0] * np.exp((p - 1.0) * lambda1_val * ts)
    ratio = fs / bound
    worst = float(ratio.min())
    return MonitorReport(
        "F_exponential_lower_bound",
        True,
        worst >= 1.0 - rel_tol,
        worst=worst,
        detail=f"min F(t)/bound = {worst:.6f}",
    )


def resolution_amplitude(grid, p, cells_per_width=4.0):
    """Amplitude beyond which a focusing profile outruns the grid.

    The focusing width shrinks like amplitude^(-(p-1)/2); requiring at
    least ``cells_per_width`` cells across it caps the trustworthy
    amplitude at (M_min / cells_per_width)^(2/(p-1)).
    """
    m_min = min(
        m / L for m, L in zip(grid.points_per_axis, grid.domain.lengths)
    ) * min(grid.domain.lengths)
    return float(max(1.0, m_min / cells_per_width) ** (2.0 / (p - 1.0)))


def _resolved_prefix(traj, amplitude_cut):
    """Samples up to the first loss of spatial resolution."""
    if amplitude_cut is None:
        return traj
    out = []
    for d in traj:
        if d.linf > amplitude_cut:
            break
        out.append(d)
    return out


def monitor_min_principle(traj, p, tol=1e-9, amplitude_cut=None):
    """Floor on u when the comparison hypotheses hold on the initial data.

    Variant L2 (needs p <= 2, E(0) <= 0, u0 >= -||u0||_2): u stays above
    -||u(t)||_2.  Variant Lp (needs E(0) <= 0, u0 >= -||u0||_p): u stays
    above the running -sup_s ||u(s)||_p.  Samples past ``amplitude_cut``
    are not asserted: the floor is a statement about the flow, not about
    aliasing artifacts of an unresolved focusing profile.
    """
    traj = _resolved_prefix(traj, amplitude_cut)
    if not traj:
        return MonitorReport("min_principle", False, True, detail="empty trajectory")
    first = traj[0]
    l2_hyp = p <= 2.0 and first.E <= 0 and first.F > 0 and first.umin >= -np.sqrt(first.F) - tol
    lp_hyp = first.E <= 0 and first.lp > 0 and first.umin >= -first.lp - tol
    if not (l2_hyp or lp_hyp):
        return MonitorReport("min_principle", False, True, detail="hypotheses not met on initial data")
    worst = np.inf
    ok = True
    running_lp = 0.0
    for d in traj:
        running_lp = max(running_lp, d.lp)
        if l2_hyp:
            margin = d.umin + np.sqrt(d.F) + tol * (1 + np.sqrt(d.F))
            worst = min(worst, margin)
            ok &= margin > 0
        if lp_hyp:
            margin = d.umin + running_lp + tol * (1 + running_lp)
            worst = min(worst, margin)
            ok &= margin > 0
    which = "L2" if l2_hyp else ""
    which += "+Lp" if lp_hyp and l2_hyp else ("Lp" if lp_hyp else "")
    return MonitorReport(
        "min_principle",
        True,
        bool(ok),
        worst=float(worst),
        detail=f"variant {which}; min margin {worst:.3e}",
    )


def monitor_inf_monotone(traj, p, tol_scale=1e-6, amplitude_cut=None):
    """inf_x u must be nondecreasing on windows where it sits below -||u||_p."""
    traj = _resolved_prefix(traj, amplitude_cut)
    if not traj:
        return MonitorReport("inf_monotone", False, True, detail="empty trajectory")
    inside = [d.umin < -d.lp for d in traj]
    if not any(inside):
        return MonitorReport("inf_monotone", False, True, detail="window never entered")
    ok = True
    worst = np.inf
    windows = 0
    exit_time = None
    i = 0
    n = len(traj)
    while i < n:
        if not inside[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and inside[j + 1]:
            j += 1
        windows += 1
        for a, b in zip(range(i, j), range(i + 1, j + 1)):
            drop = traj[b].umin - traj[a].umin + tol_scale * (1 + abs(traj[a].umin))
            worst = min(worst, drop)
            ok &= drop > 0
        if j + 1 < n:
            exit_time = traj[j + 1].t
        i = j + 1
    detail = f"{windows} window(s); worst increment margin {worst:.3e}"
    if exit_time is not None:
        detail += f"; last window exit at t={exit_time:.6g}"
    return MonitorReport("inf_monotone", True, bool(ok), worst=float(worst), detail=detail)


def monitor_L2_bound(traj, rel_tol=1e-8):
    """F(t) <= (F(0) + E(0) + C0) e^t where C0 = -min E over the window."""
    if not traj:
        return MonitorReport("L2_exponential_bound", False, True, detail="empty trajectory")
    e_vals = np.array([d.E for d in traj])
    if not np.all(np.isfinite(e_vals)):
        return MonitorReport("L2_exponential_bound", False, True, detail="energy not finite over the window")
    c0 = max(0.0, -float(e_vals.min()))
    ts = np.array([d.t for d in traj])
    fs = np.array([d.F for d in traj])
    prefactor = fs[0] + e_vals[0] + c0
    bound = prefactor * np.exp(ts)
    margin = bound * (1 + rel_tol) + rel_tol - fs
    worst = float(margin.min())
    return MonitorReport(
        "L2_exponential_bound",
        True,
        worst >= 0.0,
        worst=worst,
        detail=f"C0={c0:.3e}; min slack {worst:.3e}",
    )


def energy_positivity_check(u0, lambda1_val, tol=1e-10):
    """For p=2, amplitude at most 1.5*lambda1 forces nonnegative energy."""
    linf = float(np.max(np.abs(u0.values)))
    if linf > 1.5 * lambda1_val:
        return MonitorReport("energy_positivity_small_data", False, True, detail="amplitude above 1.5*lambda1")
    e_val = energy(u0, 2.0)
    floor = -tol * (1.0 + grad_norm_sq(u0))
    return MonitorReport(
        "energy_positivity_small_data",
        True,
        e_val >= floor,
        worst=e_val,
        detail=f"E(u0)={e_val:.3e} with floor {floor:.3e}",
    )


def scaling_covariance_check(u0, lam, config, compare_times, rel_tol=1e-4):
    """Two-run check of the dilation covariance of the flow.

    If u solves the equation on Omega, then lam^(2/(p-1)) u(lam^2 t, lam x)
    solves it on Omega/lam.  Both runs are integrated independently and
    compared pointwise (midpoint grids nest exactly under this map when both
    use the same point count).
    """
    if lam <= 0:
        raise ValueError("scaling factor must be positive")
    p = config.p
    alpha = lam ** (2.0 / (p - 1.0))
    base_grid = config.grid
    small_domain = base_grid.domain.dilated(1.0 / lam)
    small_grid = make_grid(small_domain, base_grid.points_per_axis)
    v0 = Field(small_grid, alpha * u0.values.copy())

    compare_times = sorted(compare_times)
    big_cfg = replace(config, t_end=lam**2 * max(compare_times))
    small_cfg = replace(
        config,
        grid=small_grid,
        t_end=max(compare_times),
        dt_min=config.dt_min / lam**2,
        dt_init=config.dt_init / lam**2,
        dt_max=config.dt_max / lam**2,
    )

    big_samples = {}

    def grab_big(state):
        for s in compare_times:
            if abs(state.t - lam**2 * s) <= 1e-12 * max(1.0, lam**2 * s):
                big_samples[s] = from_spectral(state.coeffs).values.copy()

    small_samples = {}

    def grab_small(state):
        for s in compare_times:
            if abs(state.t - s) <= 1e-12 * max(1.0, s):
                small_samples[s] = from_spectral(state.coeffs).values.copy()

    _, out_big = simulate(u0, big_cfg, sample_times=[lam**2 * s for s in compare_times], on_step=grab_big)
    _, out_small = simulate(v0, small_cfg, sample_times=compare_times, on_step=grab_small)
    if out_big.kind != OutcomeKind.COMPLETED or out_small.kind != OutcomeKind.COMPLETED:
        return MonitorReport(
            "scaling_covariance",
            False,
            True,
            detail=f"runs did not complete ({out_big.kind.value}, {out_small.kind.value})",
        )
    worst = 0.0
    for s in compare_times:
        ref = alpha * big_samples[s]
        got = small_samples[s]
        denom = np.linalg.norm(ref) or 1.0
        worst = max(worst, float(np.linalg.norm(got - ref) / denom))
    return MonitorReport(
        "scaling_covariance",
        True,
        worst <= rel_tol,
        worst=worst,
        detail=f"max relative L2 discrepancy {worst:.3e} across {len(compare_times)} times",
    )
