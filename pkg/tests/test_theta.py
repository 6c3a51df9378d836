import numpy as np
import pytest

from speclab.theta import HalfCharacteristic, Theta, ThetaError, zero_char


OM1 = np.array([[0.3 + 1.1j]])
OM2 = np.array([[0.25 + 0.9j, 0.1 + 0.15j], [0.1 + 0.15j, -0.2 + 1.3j]])


def q_series_theta(z, tau, d1, d2, nmax=60):
    """Independent one-dimensional characteristic theta sum."""
    total = 0.0 + 0.0j
    for n in range(-nmax, nmax + 1):
        p = n + d1
        total += np.exp(1j * np.pi * p * p * tau + 2j * np.pi * p * (z + d2))
    return total


class TestGenus1:
    @pytest.mark.parametrize("bits", range(4))
    def test_against_q_series(self, bits):
        th = Theta(OM1)
        d1, d2 = 0.5 * (bits & 1), 0.5 * (bits >> 1)
        ch = HalfCharacteristic((d1,), (d2,))
        tau = OM1[0, 0]
        for z in (0.11 + 0.21j, -0.73 + 0.4j, 1.83 - 2.12j):
            mine = th.value(np.array([[z]]), ch)[0]
            ref = q_series_theta(z, tau, d1, d2)
            # the q-series reference carries ~1e-16 * (largest term) noise
            term_scale = float(np.exp(np.pi * 1.1 * (abs(z.imag) / 1.1 + 1) ** 2))
            assert abs(mine - ref) <= 1e-12 * max(1.0, abs(ref)) + 1e-14 * term_scale

    def test_gradient_vs_fd(self):
        th = Theta(OM1)
        ch = HalfCharacteristic((0.5,), (0.5,))
        z = 0.3 + 0.1j
        h = 1e-6
        e = th.eval(np.array([[z]]), ch, derivs=2)
        fd = (th.value(np.array([[z + h]]), ch)[0] - th.value(np.array([[z - h]]), ch)[0]) / (2 * h)
        assert abs(e["grad"][0, 0] - fd) < 1e-7
        h2 = 1e-4
        fd2 = (th.value(np.array([[z + h2]]), ch)[0] - 2 * th.value(np.array([[z]]), ch)[0]
               + th.value(np.array([[z - h2]]), ch)[0]) / h2 ** 2
        assert abs(e["hess"][0, 0, 0] - fd2) < 1e-4


class TestGenus2:
    def test_parity(self):
        th = Theta(OM2)
        z = np.array([[0.21 - 0.34j, -0.11 + 0.27j]])
        even = th.value(z, zero_char(2))[0]
        even_m = th.value(-z, zero_char(2))[0]
        assert abs(even - even_m) < 1e-12 * abs(even)
        odd = HalfCharacteristic((0.5, 0.5), (0.5, 0.0))
        assert odd.parity_odd
        vo = th.value(z, odd)[0]
        vo_m = th.value(-z, odd)[0]
        assert abs(vo + vo_m) < 1e-12 * max(1.0, abs(vo))

    def test_quasi_periodicity(self):
        th = Theta(OM2)
        z = np.array([0.17 + 0.05j, -0.33 + 0.4j])
        for mvec in ([1, 0], [0, 1], [2, -1]):
            mv = np.array(mvec, dtype=float)
            lhs = th.value((z + th.om @ mv + np.array([1.0, -2.0]))[None, :])[0]
            pref = np.exp(-1j * np.pi * mv @ th.om @ mv - 2j * np.pi * mv @ z)
            rhs = pref * th.value(z[None, :])[0]
            assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))

    def test_reduction_consistency_large_argument(self):
        th = Theta(OM2)
        z = np.array([3.7 - 4.1j, -2.9 + 5.3j])
        # brute: unreduced sum with a big box
        g = 2
        rng = np.arange(-14, 15)
        grids = np.meshgrid(rng, rng, indexing="ij")
        pts = np.stack([x.ravel() for x in grids], axis=1).astype(float)
        quad = np.einsum("pi,ij,pj->p", pts, th.om, pts)
        vals = np.exp(1j * np.pi * quad + 2j * np.pi * pts @ z)
        ref = vals.sum()
        mine = th.value(z[None, :])[0]
        assert abs(mine - ref) <= 1e-9 * abs(ref)

    def test_gradient_hessian_vs_fd(self):
        th = Theta(OM2)
        ch = HalfCharacteristic((0.5, 0.0), (0.5, 0.5))
        z = np.array([0.12 + 0.31j, -0.22 - 0.14j])
        e = th.eval(z[None, :], ch, derivs=2)
        h = 1e-6
        for i in range(2):
            dz = np.zeros(2, dtype=complex)
            dz[i] = h
            fd = (th.value((z + dz)[None, :], ch)[0] - th.value((z - dz)[None, :], ch)[0]) / (2 * h)
            assert abs(e["grad"][0, i] - fd) < 1e-6
        dz0 = np.array([h, 0.0], dtype=complex)
        dz1 = np.array([0.0, h], dtype=complex)
        fd01 = (th.value((z + dz0 + dz1)[None, :], ch)[0]
                - th.value((z + dz0 - dz1)[None, :], ch)[0]
                - th.value((z - dz0 + dz1)[None, :], ch)[0]
                + th.value((z - dz0 - dz1)[None, :], ch)[0]) / (4 * h * h)
        assert abs(e["hess"][0, 0, 1] - fd01) < 1e-4

    def test_odd_char_selection_deterministic(self):
        th = Theta(OM2)
        ch1 = th.odd_nonsingular_char()
        ch2 = th.odd_nonsingular_char()
        assert ch1 == ch2 and ch1.parity_odd

    def test_imag_not_positive_definite_rejected(self):
        with pytest.raises(ThetaError):
            Theta(np.array([[0.3 - 1.0j]]))
