import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from speclab import numerics as nm


class TestPolyRoots:
    def test_quadratic(self):
        # x^2 + 1
        rep = nm.poly_roots([1, 0, 1])
        got = sorted(rep.roots, key=lambda z: z.imag)
        assert np.allclose(got, [-1j, 1j], atol=1e-12)

    def test_triple_root_flagged(self):
        # (x-1)^3 = -1 + 3x - 3x^2 + x^3
        rep = nm.poly_roots([-1, 3, -3, 1], cluster_tol=1e-4)
        assert np.allclose(rep.roots, 1.0, atol=1e-4)
        assert np.all(rep.multiplicities == 3)

    def test_against_companion_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(8):
            deg = int(rng.integers(3, 12))
            c = rng.standard_normal(deg + 1) + 1j * rng.standard_normal(deg + 1)
            rep = nm.poly_roots(c)
            oracle = np.sort_complex(np.roots(c[::-1]))
            mine = np.sort_complex(rep.roots)
            assert np.allclose(mine, oracle, atol=1e-8)

    def test_residuals_small(self):
        c = np.array([2.0, -1.0, 0.5j, 1.0, 3.0 + 1j])
        rep = nm.poly_roots(c)
        scale = np.max(np.abs(c))
        assert np.all(rep.residuals <= 1e-10 * scale * 10)


class TestSeries:
    def test_shift(self):
        # p(x) = 1 + 2x + 3x^2 around a=2: p(2+t)
        c = nm.polyshift([1, 2, 3], 2.0)
        t = 0.37
        assert np.isclose(nm.polyval(c, t), nm.polyval([1, 2, 3], 2.0 + t))

    def test_sqrt_and_inv(self):
        a = np.array([4.0, 1.0, -0.5, 0.25])
        s = nm.series_sqrt(a, 8)
        back = nm.series_mul(s, s, 8)
        assert np.allclose(back[:4], a, atol=1e-12)
        inv = nm.series_inv(a, 8)
        one = nm.series_mul(a, inv, 8)
        assert np.isclose(one[0], 1.0) and np.allclose(one[1:], 0.0, atol=1e-12)

    def test_sqrt_branch(self):
        a = np.array([4.0, 1.0])
        s = nm.series_sqrt(a, 4, branch=-2.0)
        assert np.isclose(s[0], -2.0)


class TestQuadrature:
    def test_circle_dz_over_z(self):
        c = nm.circle(0.0, 1.0)
        res = nm.integrate_function(lambda z: 1.0 / z, c)
        assert abs(res.value - 2j * np.pi) < 1e-12
        assert res.error >= abs(res.value - 2j * np.pi) or res.error < 1e-12

    def test_cubic_segment(self):
        c = nm.Contour([nm.Line(0.0, 1.0)])
        res = nm.integrate_function(lambda z: z ** 3, c)
        assert abs(res.value - 0.25) < 1e-14
        assert res.error >= abs(res.value - 0.25) or res.error < 1e-13

    def test_oscillatory_estimate_conservative(self):
        c = nm.Contour([nm.Line(0.0, 1.0)])
        res = nm.integrate_function(lambda z: np.exp(8j * np.pi * z), c)
        exact = (np.exp(8j * np.pi) - 1.0) / (8j * np.pi)
        assert abs(res.value - exact) <= max(res.error, 1e-12)

    def test_sqrt_end_parametrization(self):
        # integral of 1/sqrt(z) from 1 to 0 along the real axis ( = -2 )
        seg = nm.Line(1.0, 0.0, sqrt_end="end")
        res = nm.integrate_function(lambda z: 1.0 / np.sqrt(z + 0j), nm.Contour([seg]))
        assert abs(res.value - (-2.0)) < 1e-10


class TestCircleJet:
    def test_simple_pole(self):
        jet = nm.circle_jet(lambda e: 1.0 / e, 0.5)
        assert abs(jet.residue - 1.0) < 1e-12
        others = [jet.coef(m) for m in range(0, 13)]
        assert np.all(np.abs(others) < 1e-12)

    def test_exponential(self):
        jet = nm.circle_jet(np.exp, 0.5)
        import math
        for k in range(0, 10):
            assert abs(jet.coef(k) - 1.0 / math.factorial(k)) < 1e-12

    def test_rho_robustness(self):
        fn = lambda e: np.exp(e) / (e - 2.0)
        j1 = nm.circle_jet(fn, 0.5, m_pos=40)
        j2 = nm.circle_jet(fn, 0.25, m_pos=40)
        for m in range(-1, 8):
            assert abs(j1.coef(m) - j2.coef(m)) < 1e-9

    def test_tail_failure_raises(self):
        with pytest.raises(nm.JetError):
            nm.circle_jet(lambda e: 1.0 / (e - 0.500001), 0.5, n_samples=64)


class TestSolveDense:
    def test_identity(self):
        x, cond = nm.solve_dense(np.eye(3), np.array([1.0, 2.0, 3.0]))
        assert np.allclose(x, [1, 2, 3])
        assert cond < 1.0 + 1e-12

    def test_known_inverse(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([1.0, 1.0])
        x, _ = nm.solve_dense(a, b)
        assert np.allclose(x, np.array([-1.0, 1.0]))

    def test_singular_raises(self):
        with pytest.raises(nm.SingularSystemError):
            nm.solve_dense(np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([1.0, 2.0]))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=1000))
def test_roots_reconstruct_polynomial(deg, seed):
    rng = np.random.default_rng(seed)
    roots = rng.standard_normal(deg) + 1j * rng.standard_normal(deg)
    c = np.array([1.0 + 0j])
    for r in roots:
        c = nm.polymul(c, [-r, 1.0])
    rep = nm.poly_roots(c)
    assert np.allclose(np.sort_complex(rep.roots), np.sort_complex(roots), atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2000))
def test_series_sqrt_roundtrip_property(seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    a[0] = a[0] + 3.0  # keep the constant term away from zero
    s = nm.series_sqrt(a, 10)
    back = nm.series_mul(s, s, 10)
    assert np.allclose(back[:6], a, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2000),
       st.floats(min_value=-2.0, max_value=2.0),
       st.floats(min_value=-2.0, max_value=2.0))
def test_polyshift_evaluation_property(seed, re, im):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    a = complex(re, im)
    shifted = nm.polyshift(c, a)
    t = 0.3 - 0.2j
    assert abs(nm.polyval(shifted, t) - nm.polyval(c, a + t)) < 1e-9
