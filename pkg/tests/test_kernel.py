"""Heat-kernel constants and semigroup estimates.

Independent oracles used here:
  * method-of-images Gaussian sums for the 1-D interval kernel,
  * scipy.special.jnp_zeros for the Bessel-derivative root,
  * mpmath 50-digit re-evaluation of the closed-form thresholds.
"""

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from nlheat.domain import (
    Field,
    field_from_function,
    lp_norm,
    make_domain,
    make_grid,
)
from nlheat.kernel import (
    KernelConstants,
    k0_diag,
    compute_constants,
    decay_prefactor,
    default_diag_points,
    default_time_grid,
    estimate_H,
    holder_product_check,
    kernel_eval,
    lambda1,
    lambda1_star,
    linear_heat_evolve,
    rho_global,
    rho_r,
    verify_lp_lq,
)
from nlheat.random_fields import random_mean_zero_field

PI = np.pi


def images_kernel_1d(t, x, y, length=1.0, images=12):
    """Method-of-images oracle for the interval kernel."""
    s = 0.0
    for n in range(-images, images + 1):
        s += np.exp(-((x - y - 2 * n * length) ** 2) / (4 * t))
        s += np.exp(-((x + y - 2 * n * length) ** 2) / (4 * t))
    return s / np.sqrt(4 * PI * t)


UNIT = make_domain(1, [1.0])


class TestKernelEval:
    def test_long_time_reaches_uniform_state(self):
        ev = kernel_eval(UNIT, 10.0, [0.3], [0.3])
        assert ev.value == pytest.approx(1.0, abs=1e-12)

    def test_short_time_matches_images_oracle(self):
        ev = kernel_eval(UNIT, 1e-3, [0.0], [0.0])
        oracle = images_kernel_1d(1e-3, 0.0, 0.0)
        assert ev.value == pytest.approx(oracle, rel=1e-3)
        assert ev.value == pytest.approx(2 / np.sqrt(4 * PI * 1e-3), rel=1e-3)

    @pytest.mark.parametrize("t,x", [(0.02, 0.0), (0.1, 0.37), (0.5, 1.0)])
    def test_images_oracle_across_interval(self, t, x):
        ev = kernel_eval(UNIT, t, [x], [x])
        assert ev.value == pytest.approx(images_kernel_1d(t, x, x), rel=1e-10)

    @given(seed=st.integers(0, 1000))
    @settings(max_examples=10, deadline=None)
    def test_column_integrates_to_one(self, seed):
        rng = np.random.default_rng(seed)
        t = float(rng.uniform(0.005, 1.0))
        x = float(rng.uniform(0.0, 1.0))
        ys = (np.arange(256) + 0.5) / 256
        vals = np.array([kernel_eval(UNIT, t, [x], [y]).value for y in ys])
        assert vals.sum() / 256 == pytest.approx(1.0, abs=1e-10)

    def test_symmetry_in_arguments(self):
        d = make_domain(2, [2.0, 1.0])
        a, b = (0.3, 0.2), (1.7, 0.9)
        assert kernel_eval(d, 0.05, a, b).value == pytest.approx(
            kernel_eval(d, 0.05, b, a).value, rel=1e-12
        )

    def test_refinement_within_tail_bound(self):
        ev = kernel_eval(UNIT, 0.01, [0.5], [0.5])
        refined = kernel_eval(UNIT, 0.01, [0.5], [0.5], truncation=2 * ev.truncation)
        assert abs(refined.value - ev.value) <= ev.tail_bound + 1e-15

    def test_2d_kernel_is_axis_product(self):
        d = make_domain(2, [2.0, 1.0])
        ev = kernel_eval(d, 0.07, (0.4, 0.25), (1.1, 0.8))
        f1 = kernel_eval(make_domain(1, [2.0]), 0.07, [0.4], [1.1]).value
        f2 = kernel_eval(make_domain(1, [1.0]), 0.07, [0.25], [0.8]).value
        assert ev.value == pytest.approx(f1 * f2, rel=1e-12)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            kernel_eval(UNIT, 0.0, [0.2], [0.2])
        with pytest.raises(ValueError):
            kernel_eval(UNIT, 0.1, [1.2], [0.2])


class TestHConstant:
    def test_unit_interval_value(self):
        # small-t corner limit of sqrt(t) K_0 is 2/sqrt(4 pi) = pi^{-1/2}
        h = estimate_H(UNIT)
        assert h == pytest.approx(PI ** (-0.5), abs=1e-3)

    @pytest.mark.parametrize(
        "domain",
        [UNIT, make_domain(1, [2.5]), make_domain(2, [1.0, 1.0]), make_domain(2, [3.0, 0.5])],
    )
    def test_universal_lower_bound(self, domain):
        n = domain.dim
        assert estimate_H(domain) >= (4 * PI) ** (-n / 2.0) - 1e-9

    @pytest.mark.parametrize("factor", [2.0, 0.3])
    @pytest.mark.parametrize("base", [UNIT, make_domain(2, [1.0, 0.5])])
    def test_dilation_invariance(self, base, factor):
        h0 = estimate_H(base)
        h1 = estimate_H(base.dilated(factor))
        assert h1 == pytest.approx(h0, rel=1e-3)

    def test_monotone_under_grid_refinement(self):
        t0 = default_time_grid(UNIT, n=40)
        x0 = default_diag_points(UNIT, per_axis=3)
        coarse = estimate_H(UNIT, t0, x0)
        # supersets: insert geometric midpoints in t, add octile points in x
        t1 = np.sort(np.concatenate([t0, np.sqrt(t0[:-1] * t0[1:])]))
        x1 = [np.sort(np.concatenate([ax, np.linspace(0, 1, 9)])) for ax in x0]
        finer = estimate_H(UNIT, t1, x1)
        assert finer >= coarse - 1e-15

    def test_small_t_cross_validates_against_images(self):
        # at the corner, sqrt(t) K_0 from the expansion must match the oracle
        for t in (1e-6, 1e-4):
            ours = kernel_eval(UNIT, t, [0.0], [0.0]).value
            assert ours == pytest.approx(images_kernel_1d(t, 0.0, 0.0), rel=1e-12)

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            estimate_H(UNIT, t_grid=np.array([]))


class TestBallEigenvalue:
    def test_dimension_one(self):
        assert lambda1_star(1) == pytest.approx(PI**2, rel=1e-15)

    def test_dimension_two_matches_bessel_oracle(self):
        root_oracle = special.jnp_zeros(1, 1)[0]
        assert lambda1_star(2) == pytest.approx(PI * root_oracle**2, abs=1e-9)
        assert lambda1_star(2) == pytest.approx(10.6499, abs=1e-3)

    def test_unsupported_dimension(self):
        with pytest.raises(ValueError):
            lambda1_star(3)

    @given(a=st.floats(0.2, 4.0), b=st.floats(0.2, 4.0))
    @settings(max_examples=30, deadline=None)
    def test_isoperimetric_bound_on_rectangles(self, a, b):
        d = make_domain(2, [a, b])
        assert lambda1(d) * d.volume <= lambda1_star(2) * (1 + 1e-12)

    def test_spec_rectangle_case(self):
        d = make_domain(2, [2.0, 0.5])
        assert lambda1(d) == pytest.approx(PI**2 / 4)
        assert lambda1(d) * d.volume ** (2 / 2) <= lambda1_star(2)


class TestThresholds:
    def unit_constants(self):
        return compute_constants(UNIT, r_values=(2.0, 3.0))

    def test_positive_and_below_prefactor(self):
        consts = self.unit_constants()
        for r, val in consts.rho_r.items():
            assert 0 < val < consts.lambda1 / (4 * r)

    def test_extended_precision_oracle_r2(self):
        consts = self.unit_constants()
        mpmath.mp.dps = 50
        lam1 = mpmath.pi**2
        h = mpmath.mpf(float(consts.H))
        r = mpmath.mpf(2)
        gamma = (1 + mpmath.e**-1 / (2 * (1 - mpmath.mpf(1) / (2 * r)))) ** r * 2 ** (r - 1) / mpmath.sqrt(r)
        oracle = lam1 / (4 * r) * mpmath.exp(-((gamma * mpmath.sqrt(lam1) * h) ** 2))
        assert consts.rho_r[2.0] == pytest.approx(float(oracle), rel=1e-12)

    def test_dilation_scaling(self):
        base = self.unit_constants()
        dil = compute_constants(UNIT.dilated(2.0), r_values=(2.0,))
        assert dil.rho_r[2.0] == pytest.approx(base.rho_r[2.0] / 4.0, rel=1e-3)

    def test_global_threshold_bounded(self):
        consts = self.unit_constants()
        rho = rho_global(consts)
        n = consts.domain.dim
        assert 0 < rho <= consts.lambda1 / (2 * n)

    @pytest.mark.parametrize("domain", [UNIT, make_domain(2, [1.0, 1.0])])
    def test_global_threshold_consistent_with_family(self, domain):
        consts = compute_constants(domain)
        n = domain.dim
        gamma_nr = (1 + np.exp(-1) / (2 * (1 - n / (4.0 * n)))) ** (2 * n) * 2 ** (2 * n - 1) * (2 * n) ** (-n / 2)
        assert gamma_nr ** (2.0 / n) <= 2**7 / n
        assert rho_global(consts) <= rho_r(consts, 2 * n)

    def test_r_domain_validated(self):
        consts = self.unit_constants()
        with pytest.raises(ValueError):
            rho_r(consts, 1.5)

    def test_decay_prefactor_value(self):
        consts = self.unit_constants()
        u0_linf = consts.rho_r[2.0]
        c = decay_prefactor(consts, 2.0, u0_linf)
        expect = 2**0.5 * consts.H**0.5 * (1 + 2 * u0_linf / 0.75)
        assert c == pytest.approx(expect, rel=1e-14)

    def test_constants_invariants_enforced(self):
        with pytest.raises(ValueError):
            KernelConstants(UNIT, lambda1=-1.0, H=1.0, lambda1_star=PI**2, rho_r={})
        with pytest.raises(ValueError):
            KernelConstants(UNIT, lambda1=PI**2, H=0.01, lambda1_star=PI**2, rho_r={})


class TestLinearEvolution:
    def test_time_zero_is_identity(self):
        g = make_grid(UNIT, 64)
        u = random_mean_zero_field(g, 1)
        v = linear_heat_evolve(u, 0.0)
        assert np.max(np.abs(v.values - u.values)) < 1e-14

    def test_single_mode_decay(self):
        g = make_grid(UNIT, 64)
        u = field_from_function(g, lambda x: np.cos(PI * x))
        v = linear_heat_evolve(u, 1.0)
        assert np.max(np.abs(v.values - np.exp(-(PI**2)) * u.values)) < 1e-14

    @given(seed=st.integers(0, 500))
    @settings(max_examples=20, deadline=None)
    def test_l2_nonincreasing(self, seed):
        g = make_grid(UNIT, 64)
        u = random_mean_zero_field(g, seed)
        norms = [lp_norm(linear_heat_evolve(u, t), 2) for t in (0.0, 0.05, 0.2, 1.0)]
        assert all(a >= b - 1e-13 for a, b in zip(norms, norms[1:]))

    def test_semigroup_composition(self):
        g = make_grid(make_domain(2, [2.0, 1.0]), (24, 16))
        u = random_mean_zero_field(g, 9)
        two_step = linear_heat_evolve(linear_heat_evolve(u, 0.07), 0.13)
        one_step = linear_heat_evolve(u, 0.2)
        scale = np.max(np.abs(one_step.values)) or 1.0
        assert np.max(np.abs(two_step.values - one_step.values)) <= 1e-12 * max(1.0, scale)

    def test_mean_preserved(self):
        g = make_grid(UNIT, 32)
        u = Field(g, np.full(32, 2.0) + random_mean_zero_field(g, 3).values)
        v = linear_heat_evolve(u, 0.3)
        assert float(v.values.mean()) == pytest.approx(2.0, rel=1e-13)


class TestWeightedDiagonalDecay:
    def test_k0_diag_matches_kernel_eval(self):
        for t in (0.01, 0.3):
            for x in (0.0, 0.42):
                direct = kernel_eval(UNIT, t, [x], [x]).value - 1.0
                assert k0_diag(UNIT, t, [x]) == pytest.approx(direct, rel=1e-10, abs=1e-12)
        d2 = make_domain(2, [2.0, 1.0])
        pt = (0.3, 0.9)
        direct = kernel_eval(d2, 0.05, pt, pt).value - 1.0 / d2.volume
        assert k0_diag(d2, 0.05, pt) == pytest.approx(direct, rel=1e-10)

    def test_exp_weighted_diagonal_nonincreasing_after_one(self):
        lam1 = lambda1(UNIT)
        ts = np.geomspace(1.0, 30.0 / lam1, 30)
        for x in (0.0, 0.31, 1.0):
            vals = [np.exp(lam1 * (t - 1.0)) * k0_diag(UNIT, t, [x]) for t in ts]
            diffs = np.diff(vals)
            assert np.all(diffs <= 1e-10 * max(abs(v) for v in vals))


class TestSmoothingEstimate:
    @pytest.mark.parametrize("pq", [(2.0, np.inf), (2.0, 4.0), (3.0, 3.0)])
    @pytest.mark.parametrize("t", [0.01, 0.1, 1.0])
    def test_random_fields_have_nonnegative_slack(self, pq, t):
        p, q = pq
        g = make_grid(UNIT, 128)
        h = estimate_H(UNIT)
        for seed in range(50):
            u = random_mean_zero_field(g, seed)
            rep = verify_lp_lq(u, t, p, q, h)
            assert rep.satisfied and rep.slack >= 0.0

    def test_equal_exponents_reduce_to_contraction(self):
        g = make_grid(UNIT, 128)
        u = random_mean_zero_field(g, 4)
        rep = verify_lp_lq(u, 0.2, 2.5, 2.5, estimate_H(UNIT))
        assert rep.rhs == pytest.approx(lp_norm(u, 2.5), rel=1e-13)
        assert rep.satisfied

    def test_large_time_trivially_satisfied(self):
        g = make_grid(UNIT, 64)
        u = random_mean_zero_field(g, 8)
        rep = verify_lp_lq(u, 50.0, 2.0, np.inf, estimate_H(UNIT))
        assert rep.lhs < 1e-12 and rep.satisfied

    def test_mean_zero_required(self):
        g = make_grid(UNIT, 64)
        u = Field(g, np.ones(64))
        with pytest.raises(ValueError):
            verify_lp_lq(u, 0.1, 2.0, 4.0, 1.0)


class TestMomentProduct:
    def test_constant_is_equality(self):
        g = make_grid(make_domain(2, [2.0, 1.0]), (8, 8))
        rep = holder_product_check(Field(g, np.full((8, 8), 1.7)), 2.0, 3.0)
        assert rep.lhs == pytest.approx(rep.rhs, rel=1e-12)

    @pytest.mark.parametrize("ab", [(1.0, 1.0), (2.0, 3.0), (1.5, 2.5)])
    def test_random_fields(self, ab):
        g = make_grid(UNIT, 96)
        for seed in range(100):
            u = random_mean_zero_field(g, seed)
            rep = holder_product_check(u, *ab)
            assert rep.satisfied

    def test_cosine_exact_values(self):
        # oracle: int cos^2 = 1/2 each factor -> lhs 1/4; int cos^4 = 3/8
        g = make_grid(UNIT, 128)
        u = field_from_function(g, lambda x: np.cos(PI * x))
        rep = holder_product_check(u, 2.0, 2.0)
        assert rep.lhs == pytest.approx(0.25, abs=1e-12)
        assert rep.rhs == pytest.approx(0.375, abs=1e-12)

    def test_exponent_below_one_rejected(self):
        g = make_grid(UNIT, 16)
        with pytest.raises(ValueError):
            holder_product_check(Field(g, np.ones(16)), 0.5, 2.0)
