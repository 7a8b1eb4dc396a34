import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import lambertw

from conftest import bisect, d_gamma_ref
from gtlab.errors import DomainError
from gtlab.special import (
    Branch,
    SolutionKind,
    binary_entropy_bits,
    d_gamma,
    d_gamma_inverse,
    intersection_phi,
    intersection_solve,
    lambert_w,
    lambert_w0,
    lambert_w_m1,
)

INV_E = math.exp(-1)


def residual_ok(w, x):
    return np.abs(w * np.exp(w) - x) <= np.maximum(1e-12, 1e-12 * np.abs(x))


class TestLambertW:
    def test_principal_fixed_points(self):
        assert lambert_w0(0.0) == 0.0
        assert lambert_w0(math.e) == pytest.approx(1.0, abs=1e-15)
        assert lambert_w0(-INV_E) == pytest.approx(-1.0, abs=1e-12)

    def test_lower_fixed_points(self):
        assert lambert_w_m1(-INV_E) == pytest.approx(-1.0, abs=1e-12)
        assert lambert_w_m1(-2 * math.exp(-2)) == pytest.approx(-2.0, abs=1e-14)

    def test_lower_against_bisection(self):
        ref = bisect(lambda w: w * math.exp(w) + 0.1, -50.0, -1.0)
        assert ref == pytest.approx(-3.5772, abs=5e-5)
        assert lambert_w_m1(-0.1) == pytest.approx(ref, abs=1e-12)

    def test_branch_point_slack(self):
        assert lambert_w0(-INV_E - 5e-15) == pytest.approx(-1.0, abs=1e-6)
        assert lambert_w_m1(-INV_E - 5e-15) == pytest.approx(-1.0, abs=1e-6)
        with pytest.raises(DomainError):
            lambert_w0(-INV_E - 1e-12)
        with pytest.raises(DomainError):
            lambert_w_m1(-INV_E - 1e-12)

    @pytest.mark.parametrize("x", [0.0, 1e-3, 5.0])
    def test_lower_rejects_non_negative(self, x):
        with pytest.raises(DomainError):
            lambert_w_m1(x)

    def test_nan_rejected(self):
        with pytest.raises(DomainError):
            lambert_w0(float("nan"))

    def test_vectorised_shape_and_branch_ranges(self):
        x = np.linspace(-INV_E, 0, 50, endpoint=False).reshape(5, 10)
        w0, wm = lambert_w0(x), lambert_w_m1(x)
        assert w0.shape == wm.shape == (5, 10)
        assert np.all(w0 >= -1) and np.all(wm <= -1)
        assert isinstance(lambert_w0(1.0), float)

    def test_dispatch(self):
        assert lambert_w(1.0, Branch.PRINCIPAL) == lambert_w0(1.0)
        assert lambert_w(-0.2, Branch.LOWER) == lambert_w_m1(-0.2)

    def test_against_scipy(self):
        x = np.concatenate([np.linspace(-INV_E + 1e-3, 50, 2001), np.logspace(-200, 250, 500)])
        ref = lambertw(x, 0).real
        assert np.allclose(lambert_w0(x), ref, rtol=1e-13, atol=1e-15)
        xm = np.concatenate([np.linspace(-INV_E + 1e-3, -1e-9, 2001), -np.logspace(-250, -1, 500)])
        refm = lambertw(xm, -1).real
        assert np.allclose(lambert_w_m1(xm), refm, rtol=1e-13)

    def test_near_branch_point_series(self):
        eps = np.logspace(-16, -6, 60)
        x = -INV_E + eps
        for f in (lambert_w0, lambert_w_m1):
            w = f(x)
            assert np.all(np.abs(w * np.exp(w) - x) <= 2e-16 + 1e-12 * np.abs(x))

    def test_extreme_arguments(self):
        w = lambert_w0(1e300)
        assert w + math.log(w) == pytest.approx(300 * math.log(10), rel=1e-15)
        w = lambert_w_m1(-1e-300)
        assert w + math.log(-w) == pytest.approx(-300 * math.log(10), rel=1e-15)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(min_value=-INV_E, max_value=1e12, allow_nan=False))
    def test_principal_residual_property(self, x):
        w = lambert_w0(x)
        assert w >= -1
        assert residual_ok(w, x)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(min_value=-INV_E, max_value=-1e-300, allow_nan=False))
    def test_lower_residual_property(self, x):
        w = lambert_w_m1(x)
        assert w <= -1
        assert residual_ok(w, x)


class TestDGamma:
    def test_examples(self):
        assert d_gamma(1.0, 1.0) == 0.0
        assert d_gamma(0.3, 0.0) == 0.3
        assert d_gamma(2.0, 4.0) == pytest.approx(4 * math.log(2) - 2, abs=1e-15)
        assert d_gamma(2.0, 4.0) == pytest.approx(0.77259, abs=5e-6)
        assert d_gamma(2.0, 4.0) == pytest.approx(2 * d_gamma(1.0, 2.0), abs=1e-15)

    @pytest.mark.parametrize("gamma,t", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.1)])
    def test_domain(self, gamma, t):
        with pytest.raises(DomainError):
            d_gamma(gamma, t)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(1e-6, 1e3), st.floats(0, 1e3))
    def test_matches_direct_formula(self, gamma, t):
        ref = d_gamma_ref(gamma, t)
        assert d_gamma(gamma, t) == pytest.approx(ref, rel=1e-9, abs=1e-9 * (gamma + t))

    @settings(max_examples=300, deadline=None)
    @given(st.floats(1e-6, 1e3), st.floats(0, 1e3))
    def test_non_negative_and_zero_at_gamma(self, gamma, t):
        assert d_gamma(gamma, t) >= 0
        assert d_gamma(gamma, gamma) == 0

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1e-3, 1e2), st.floats(1e-3, 1e2))
    def test_scaling_identity(self, a, t):
        lhs = d_gamma(a, t)
        rhs = a * d_gamma(1.0, t / a)
        assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1e-3, 1e2))
    def test_increasing_above_gamma(self, gamma):
        t = gamma * np.linspace(1.0, 20.0, 200)
        assert np.all(np.diff(d_gamma(gamma, t)) > 0)

    def test_inverse_round_trip(self):
        gamma = 0.37
        y = np.linspace(0, 0.36, 40)
        up = d_gamma_inverse(gamma, y, upper=True)
        lo = d_gamma_inverse(gamma, y, upper=False)
        assert np.all(up >= gamma) and np.all(lo <= gamma)
        assert np.allclose(d_gamma(gamma, up), y, atol=1e-13)
        assert np.allclose(d_gamma(gamma, lo), y, atol=1e-13)
        assert d_gamma_inverse(gamma, 0.5, upper=False) == 0.0

    def test_inverse_against_bisection(self):
        gamma, y = 0.8, 0.25
        ref = bisect(lambda t: d_gamma_ref(gamma, t) - y, gamma, 10.0)
        assert d_gamma_inverse(gamma, y) == pytest.approx(ref, abs=1e-12)
        ref = bisect(lambda t: d_gamma_ref(gamma, t) - y, 1e-300, gamma)
        assert d_gamma_inverse(gamma, y, upper=False) == pytest.approx(ref, abs=1e-12)


class TestBinaryEntropy:
    def test_examples(self):
        assert binary_entropy_bits(0.5) == 1.0
        assert binary_entropy_bits(0.0) == 0.0
        assert binary_entropy_bits(1.0) == 0.0
        ref = -0.11 * math.log2(0.11) - 0.89 * math.log2(0.89)
        assert binary_entropy_bits(0.11) == pytest.approx(ref, abs=1e-15)
        assert binary_entropy_bits(0.11) == pytest.approx(0.49992, abs=5e-6)

    @given(st.floats(0, 1))
    def test_symmetric(self, r):
        assert binary_entropy_bits(r) == pytest.approx(binary_entropy_bits(1 - r), abs=1e-14)

    @pytest.mark.parametrize("r", [-0.01, 1.01])
    def test_domain(self, r):
        with pytest.raises(DomainError):
            binary_entropy_bits(r)


def admissible_inputs(rng, count):
    for _ in range(count):
        g1 = rng.uniform(0.01, 3.0)
        g2 = g1 * rng.uniform(1.0, 6.0)
        c = rng.choice([rng.uniform(0.0, 5.0), 1.0, rng.uniform(0.98, 1.02)])
        dmax = c * d_gamma_ref(g2, g1)
        d = rng.uniform(0.0, dmax) if dmax > 0 else 0.0
        yield g1, g2, c, d


def bisection_root(g1, g2, c, d):
    phi = lambda t: d_gamma_ref(g1, t) - c * d_gamma_ref(g2, t) + d
    if phi(g1) >= 0:
        return g1
    return bisect(phi, g1, g2)


class TestIntersection:
    def test_unit_slope_example(self):
        sol = intersection_solve(0.5, 1.0, 1.0, 0.0)
        assert sol.kind is SolutionKind.ROOT
        assert sol.t_star == pytest.approx(0.5 / math.log(2), abs=1e-14)
        assert sol.t_star == pytest.approx(bisection_root(0.5, 1.0, 1.0, 0.0), abs=1e-12)

    def test_zero_slope_example(self):
        sol = intersection_solve(0.5, 1.0, 0.0, 0.0)
        assert sol.has_root and sol.t_star == pytest.approx(0.5, abs=1e-15)

    def test_no_root_example(self):
        sol = intersection_solve(0.5, 1.0, 0.1, 1.0)
        assert sol.kind is SolutionKind.NO_ROOT
        expected = 1 - 0.1 * (0.5 * math.log(0.5) + 0.5)
        assert sol.min_value == pytest.approx(expected, abs=1e-15)
        assert sol.min_value == pytest.approx(0.98466, abs=5e-6)

    def test_echoes_inputs(self):
        sol = intersection_solve(0.25, 2.0, 3.0, 0.1)
        assert (sol.gamma1, sol.gamma2, sol.c, sol.d) == (0.25, 2.0, 3.0, 0.1)

    def test_equal_gammas(self):
        sol = intersection_solve(0.7, 0.7, 2.0, 0.0)
        assert sol.has_root and sol.t_star == 0.7
        assert not intersection_solve(0.7, 0.7, 2.0, 0.1).has_root

    @pytest.mark.parametrize(
        "args", [(0.0, 1.0, 1.0, 0.0), (1.0, 0.5, 1.0, 0.0), (0.5, 1.0, -1.0, 0.0), (0.5, 1.0, 1.0, -0.1)]
    )
    def test_domain(self, args):
        with pytest.raises(DomainError):
            intersection_solve(*args)

    def test_against_bisection(self):
        rng = np.random.default_rng(2024)
        for g1, g2, c, d in admissible_inputs(rng, 300):
            sol = intersection_solve(g1, g2, c, d)
            assert sol.has_root
            assert g1 <= sol.t_star <= g2
            assert abs(intersection_phi(sol.t_star, g1, g2, c, d)) <= 1e-10
            assert sol.t_star == pytest.approx(bisection_root(g1, g2, c, d), abs=1e-8)

    @settings(max_examples=300, deadline=None)
    @given(
        st.floats(0.01, 5.0),
        st.floats(1.0, 10.0),
        st.floats(0.0, 6.0),
        st.floats(0.0, 2.0),
    )
    def test_classification_matches_sign_test(self, g1, ratio, c, d):
        g2 = g1 * ratio
        sol = intersection_solve(g1, g2, c, d)
        gap = c * d_gamma(g2, g1)
        assert sol.has_root == (d <= gap)
        if not sol.has_root:
            assert sol.min_value == pytest.approx(d - gap) and sol.min_value > 0
