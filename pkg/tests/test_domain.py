"""Transforms, quadrature, and norms on boxes.

Expected values marked as oracle-derived were computed with
scipy.integrate.quad against the continuum integrands and frozen here.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nlheat.domain import (
    Domain,
    Field,
    SpectralCoeffs,
    field_from_function,
    fine_grid,
    from_spectral,
    grad_norm_sq,
    gradient_values,
    integrate as field_integrate,
    linf_norm,
    lp_norm,
    make_domain,
    make_grid,
    mean,
    min_value,
    neumann_eigenvalues,
    pad_coeffs,
    to_spectral,
)
from nlheat.errors import NonFiniteError, NonpositiveLengthError
from nlheat.random_fields import random_mean_zero_field

PI = np.pi


def unit_interval_grid(m=128):
    return make_grid(make_domain(1, [1.0]), m)


class TestDomainConstruction:
    def test_unit_interval(self):
        d = make_domain(1, [1.0])
        assert d.dim == 1
        assert d.volume == 1.0

    def test_rectangle_volume_is_product(self):
        d = make_domain(2, [2.0, 1.0])
        assert d.volume == 2.0

    def test_negative_length_rejected(self):
        with pytest.raises(NonpositiveLengthError):
            make_domain(1, [-1.0])

    def test_zero_length_rejected(self):
        with pytest.raises(NonpositiveLengthError):
            make_domain(2, [1.0, 0.0])

    def test_bad_dim_rejected(self):
        with pytest.raises(ValueError):
            make_domain(3, [1.0, 1.0, 1.0])
        with pytest.raises(ValueError):
            make_domain(2, [1.0])

    def test_grid_needs_four_points(self):
        with pytest.raises(ValueError):
            make_grid(make_domain(1, [1.0]), 3)

    def test_field_rejects_nan(self):
        g = unit_interval_grid(8)
        with pytest.raises(NonFiniteError):
            Field(g, np.full(8, np.nan))

    def test_field_rejects_shape_mismatch(self):
        g = unit_interval_grid(8)
        with pytest.raises(ValueError):
            Field(g, np.zeros(9))


class TestEigenvalues:
    def test_unit_interval_first_modes(self):
        pairs = neumann_eigenvalues(make_domain(1, [1.0]), 4)
        assert pairs[0] == ((0,), 0.0)
        assert pairs[1][1] == pytest.approx(PI**2, rel=1e-15)

    def test_unit_square_multiplicity_two(self):
        pairs = neumann_eigenvalues(make_domain(2, [1.0, 1.0]), 3)
        assert pairs[0][1] == 0.0
        assert pairs[1][1] == pytest.approx(PI**2)
        assert pairs[2][1] == pytest.approx(PI**2)
        assert {pairs[1][0], pairs[2][0]} == {(1, 0), (0, 1)}

    def test_rectangle_longest_axis_sets_gap(self):
        pairs = neumann_eigenvalues(make_domain(2, [2.0, 1.0]), 3)
        positive = [lam for _, lam in pairs if lam > 0]
        assert min(positive) == pytest.approx(PI**2 / 4)

    def test_grid_eigenvalue_table_matches_listing(self):
        d = make_domain(2, [2.0, 1.0])
        g = make_grid(d, (4, 4))
        for idx, lam in neumann_eigenvalues(d, 4):
            assert g.eigenvalues[idx] == pytest.approx(lam, abs=1e-14)

    def test_cutoff_validated(self):
        with pytest.raises(ValueError):
            neumann_eigenvalues(make_domain(1, [1.0]), 1)


class TestTransforms:
    def test_constant_field_has_only_mode_zero(self):
        g = unit_interval_grid(32)
        c = to_spectral(Field(g, np.full(32, 3.0)))
        assert c.coeffs[0] == pytest.approx(3.0, rel=1e-14)  # 3 * sqrt(volume)
        assert np.max(np.abs(c.coeffs[1:])) < 1e-13

    def test_single_cosine_mode_is_pure(self):
        d = make_domain(2, [2.0, 1.0])
        g = make_grid(d, (16, 8))
        u = field_from_function(g, lambda x, y: np.cos(PI * x / 2.0))
        c = to_spectral(u).coeffs
        mask = np.zeros_like(c, dtype=bool)
        mask[1, 0] = True
        assert abs(c[1, 0]) > 0.5
        assert np.max(np.abs(c[~mask])) < 1e-12

    @given(seed=st.integers(0, 10_000), m=st.sampled_from([4, 5, 16, 33, 128]))
    @settings(max_examples=40, deadline=None)
    def test_round_trip_identity_1d(self, seed, m):
        g = unit_interval_grid(m)
        rng = np.random.default_rng(seed)
        u = Field(g, rng.standard_normal(m))
        back = from_spectral(to_spectral(u))
        scale = np.max(np.abs(u.values)) or 1.0
        assert np.max(np.abs(back.values - u.values)) <= 1e-12 * scale

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=15, deadline=None)
    def test_round_trip_identity_2d(self, seed):
        g = make_grid(make_domain(2, [1.5, 0.5]), (12, 7))
        rng = np.random.default_rng(seed)
        u = Field(g, rng.standard_normal(g.shape))
        back = from_spectral(to_spectral(u))
        assert np.max(np.abs(back.values - u.values)) <= 1e-12 * np.max(np.abs(u.values))

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_parseval_inner_product(self, seed):
        g = unit_interval_grid(64)
        u = random_mean_zero_field(g, seed)
        v = random_mean_zero_field(g, seed + 77)
        uv = field_integrate(Field(g, u.values * v.values))
        spec = float(np.sum(to_spectral(u).coeffs * to_spectral(v).coeffs))
        assert uv == pytest.approx(spec, rel=1e-12, abs=1e-14)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_zero_mode_zero_means_mean_zero(self, seed):
        g = unit_interval_grid(32)
        rng = np.random.default_rng(seed)
        c = rng.standard_normal(32)
        c[0] = 0.0
        u = from_spectral(SpectralCoeffs(g, c))
        assert abs(mean(u)) < 1e-13

    def test_padding_preserves_function(self):
        g = unit_interval_grid(16)
        u = random_mean_zero_field(g, 3)
        cf = pad_coeffs(to_spectral(u), fine_grid(g, 2))
        uf = from_spectral(cf)
        # compare on shared physical content: integrals and norms
        assert field_integrate(uf) == pytest.approx(field_integrate(u), abs=1e-13)
        assert lp_norm(uf, 2) == pytest.approx(lp_norm(u, 2), rel=1e-13)


class TestQuadrature:
    def test_constant_integral(self):
        g = make_grid(make_domain(2, [2.0, 1.0]), (8, 8))
        assert field_integrate(Field(g, np.full((8, 8), 2.0))) == pytest.approx(4.0, abs=1e-14)

    def test_cosine_integrates_to_zero(self):
        g = unit_interval_grid(64)
        u = field_from_function(g, lambda x: np.cos(PI * x))
        assert abs(field_integrate(u)) < 1e-14

    def test_cos_squared_half(self):
        # oracle: quad(cos^2(pi x), 0, 1) = 0.5
        val, _ = integrate.quad(lambda x: np.cos(PI * x) ** 2, 0, 1)
        g = unit_interval_grid(64)
        u = field_from_function(g, lambda x: np.cos(PI * x) ** 2)
        assert field_integrate(u) == pytest.approx(val, abs=1e-14)
        assert val == pytest.approx(0.5, abs=1e-12)

    def test_integral_equals_mean_times_volume(self):
        g = make_grid(make_domain(2, [2.0, 0.5]), (8, 8))
        u = random_mean_zero_field(g, 5)
        u.values += 1.3
        assert field_integrate(u) == pytest.approx(mean(u) * 1.0, rel=1e-13)


class TestGradientNorm:
    def test_constant_has_zero_gradient(self):
        g = unit_interval_grid(16)
        assert grad_norm_sq(Field(g, np.full(16, 2.5))) == 0.0

    def test_cosine_mode_value(self):
        # oracle: quad(pi^2 sin^2(pi x), 0, 1) = pi^2 / 2
        val, _ = integrate.quad(lambda x: (PI * np.sin(PI * x)) ** 2, 0, 1)
        g = unit_interval_grid(64)
        u = field_from_function(g, lambda x: np.cos(PI * x))
        assert grad_norm_sq(u) == pytest.approx(val, rel=1e-13)
        assert val == pytest.approx(PI**2 / 2, rel=1e-12)

    def test_parseval_additivity_over_modes(self):
        g = unit_interval_grid(64)
        u1 = field_from_function(g, lambda x: np.cos(PI * x))
        u2 = field_from_function(g, lambda x: np.cos(3 * PI * x))
        both = Field(g, u1.values + u2.values)
        assert grad_norm_sq(both) == pytest.approx(grad_norm_sq(u1) + grad_norm_sq(u2), rel=1e-13)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_discrete_poincare(self, seed):
        g = make_grid(make_domain(2, [2.0, 1.0]), (16, 12))
        u = random_mean_zero_field(g, seed)
        lam1 = (PI / 2.0) ** 2
        fluct = lp_norm(u, 2) ** 2
        assert grad_norm_sq(u) >= lam1 * fluct * (1 - 1e-10)

    def test_gradient_values_match_analytic(self):
        g = unit_interval_grid(32)
        u = field_from_function(g, lambda x: np.cos(2 * PI * x))
        (du,) = gradient_values(to_spectral(u), fine_grid(g, 2))
        xf = fine_grid(g, 2).axis_nodes[0]
        assert np.max(np.abs(du + 2 * PI * np.sin(2 * PI * xf))) < 1e-10

    def test_gradient_values_match_analytic_2d(self):
        g = make_grid(make_domain(2, [2.0, 1.0]), (16, 12))
        u = field_from_function(g, lambda x, y: np.cos(PI * x / 2.0) * np.cos(2 * PI * y))
        dux, duy = gradient_values(to_spectral(u))
        xx, yy = g.meshgrid()
        assert np.max(np.abs(dux + PI / 2 * np.sin(PI * xx / 2) * np.cos(2 * PI * yy))) < 1e-10
        assert np.max(np.abs(duy + 2 * PI * np.cos(PI * xx / 2) * np.sin(2 * PI * yy))) < 1e-10


class TestNorms:
    def test_constant_l2_on_volume_two(self):
        g = make_grid(make_domain(2, [2.0, 1.0]), (8, 8))
        assert lp_norm(Field(g, np.ones((8, 8))), 2) == pytest.approx(np.sqrt(2.0), rel=1e-14)

    def test_linf_of_cosine(self):
        g = unit_interval_grid(128)
        u = field_from_function(g, lambda x: np.cos(PI * x))
        assert linf_norm(u) == pytest.approx(1.0, abs=1e-3)

    def test_l2_of_cosine(self):
        # oracle: sqrt(quad(cos^2)) = sqrt(1/2)
        val = np.sqrt(integrate.quad(lambda x: np.cos(PI * x) ** 2, 0, 1)[0])
        g = unit_interval_grid(64)
        u = field_from_function(g, lambda x: np.cos(PI * x))
        assert lp_norm(u, 2) == pytest.approx(val, rel=1e-13)

    def test_min_value(self):
        g = unit_interval_grid(128)
        u = field_from_function(g, lambda x: np.cos(PI * x))
        assert min_value(u) == pytest.approx(-1.0, abs=1e-3)

    def test_p_below_one_rejected(self):
        g = unit_interval_grid(8)
        with pytest.raises(ValueError):
            lp_norm(Field(g, np.ones(8)), 0.5)

    def test_l2_squared_equals_integral_of_square(self):
        g = unit_interval_grid(64)
        u = random_mean_zero_field(g, 11)
        sq = Field(g, u.values**2)
        assert lp_norm(u, 2) ** 2 == pytest.approx(field_integrate(sq), rel=1e-13)
