"""Riemann theta functions with half-integer characteristics.

theta[d](z | Om) = sum_{n in Z^g} e( pi i p'Om p + 2 pi i p'(z + d2) ),  p = n + d1.

Direct lattice sum over a box sized from the smallest eigenvalue of Im Om,
after reducing z by the period lattice; the reduction prefactor

    theta[d](z + Om m + k) = e( 2 pi i d1'k - pi i m'Om m - 2 pi i m'(z + d2) ) theta[d](z)

is applied exactly, so returned values (and gradients / Hessians in the
original argument) are those of the unreduced input. Arguments are (N, g)
batches; one pass produces value, gradient and Hessian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ThetaError(RuntimeError):
    pass


LATTICE_CAP = 4_000_000
TAIL_TOL = 1e-14


@dataclass(frozen=True)
class HalfCharacteristic:
    """Half-integer characteristic delta = (d1, d2), entries in {0, 1/2}."""

    d1: tuple
    d2: tuple

    @property
    def parity_odd(self):
        return int(round(4.0 * float(np.dot(self.d1, self.d2)))) % 2 == 1

    @staticmethod
    def enumerate(g):
        out = []
        for bits in range(4 ** g):
            d = [(bits >> k) & 1 for k in range(2 * g)]
            d1 = tuple(0.5 * b for b in d[:g])
            d2 = tuple(0.5 * b for b in d[g:])
            out.append(HalfCharacteristic(d1, d2))
        out.sort(key=lambda c: (c.d1, c.d2))
        return out


def zero_char(g):
    return HalfCharacteristic((0.0,) * g, (0.0,) * g)


class Theta:
    """Lattice-sum evaluator bound to one period matrix."""

    def __init__(self, omega, tail_tol=TAIL_TOL):
        om = np.atleast_2d(np.asarray(omega, dtype=complex))
        g = om.shape[0]
        if om.shape != (g, g):
            raise ThetaError("period matrix must be square")
        if np.max(np.abs(om - om.T)) > 1e-8 * max(1.0, float(np.max(np.abs(om)))):
            raise ThetaError("period matrix not symmetric")
        t = 0.5 * (om.imag + om.imag.T)
        evals = np.linalg.eigvalsh(t)
        if float(np.min(evals)) <= 0:
            raise ThetaError("Im(period matrix) not positive definite")
        self.om = om
        self.g = g
        self.t = t
        self.tinv = np.linalg.inv(t)
        self.lam_min = float(np.min(evals))
        self.tail_tol = tail_tol
        self._lattice_cache = {}

    def _lattice(self, d1, cmax):
        r0 = math.sqrt(-math.log(self.tail_tol) / (math.pi * self.lam_min))
        bound = int(math.ceil(r0 + cmax + 1.0))
        key = (tuple(np.round(np.asarray(d1), 6)), bound)
        if key in self._lattice_cache:
            return self._lattice_cache[key]
        if (2 * bound + 1) ** self.g > LATTICE_CAP:
            raise ThetaError("lattice enumeration cap exceeded")
        rng = np.arange(-bound, bound + 1)
        grids = np.meshgrid(*([rng] * self.g), indexing="ij")
        pts = np.stack([x.ravel() for x in grids], axis=1).astype(float)
        pts = pts + np.asarray(d1)[None, :]
        self._lattice_cache[key] = pts
        return pts

    def _reduce(self, z):
        """z = z_red + Om m + k; returns (z_red, m, k) with m, k integer."""
        m = np.rint(z.imag @ self.tinv.T)
        z1 = z - m @ self.om.T
        k = np.rint(z1.real)
        return z1 - k, m, k

    def eval(self, z, char=None, derivs=2):
        """Value (and derivatives) of theta[char] at a batch of arguments.

        Returns {'val': (N,), 'grad': (N,g), 'hess': (N,g,g)} for the
        unreduced argument.
        """
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        if z.shape[1] != self.g:
            raise ThetaError("argument dimension mismatch")
        if char is None:
            char = zero_char(self.g)
        d1 = np.asarray(char.d1, dtype=float)
        d2 = np.asarray(char.d2, dtype=float)

        z_red, m, k = self._reduce(z)
        cmax = float(np.max(np.abs(z_red.imag @ self.tinv.T))) if len(z_red) else 0.0
        pts = self._lattice(d1, cmax)

        quad = np.einsum("pi,ij,pj->p", pts, self.om, pts)
        const = np.exp(1j * math.pi * quad + 2j * math.pi * (pts @ d2))
        terms = np.exp(2j * math.pi * (z_red @ pts.T)) * const[None, :]

        val_red = terms.sum(axis=1)
        mOmm = np.einsum("ni,ij,nj->n", m, self.om, m)
        expo = (2j * math.pi * (k @ d1)
                - 1j * math.pi * mOmm
                - 2j * math.pi * (np.einsum("ni,ni->n", m, z_red) + m @ d2))
        factor = np.exp(expo)

        out = {"val": factor * val_red}
        if derivs >= 1:
            grad_red = 2j * math.pi * (terms @ pts)
            out["grad"] = factor[:, None] * (grad_red - 2j * math.pi * m * val_red[:, None])
        if derivs >= 2:
            # d2 theta(Z) = F [H_red - 2 pi i (m g' + g m') - 4 pi^2 m m' v]
            hess_red = (2j * math.pi) ** 2 * np.einsum("np,pi,pj->nij", terms, pts, pts)
            cross = (np.einsum("ni,nj->nij", m, grad_red)
                     + np.einsum("ni,nj->nij", grad_red, m))
            mm = np.einsum("ni,nj->nij", m, m)
            out["hess"] = factor[:, None, None] * (
                hess_red
                - 2j * math.pi * cross
                - (2 * math.pi) ** 2 * mm * val_red[:, None, None]
            )
        return out

    def value(self, z, char=None):
        return self.eval(z, char, derivs=0)["val"]

    def loghess(self, z, char=None):
        """(Hessian, gradient) of log theta[char]; raises at theta zeros."""
        e = self.eval(z, char, derivs=2)
        v = e["val"]
        if np.any(np.abs(v) == 0.0):
            raise ThetaError("log-derivative at a theta zero")
        g1 = e["grad"] / v[:, None]
        h = e["hess"] / v[:, None, None] - np.einsum("ni,nj->nij", g1, g1)
        return h, g1

    def odd_nonsingular_char(self, floor=1e-6):
        """First lexicographic odd characteristic with |grad theta(0)| > floor."""
        zero = np.zeros((1, self.g), dtype=complex)
        scale = 0.0
        grads = []
        chars = [c for c in HalfCharacteristic.enumerate(self.g) if c.parity_odd]
        for ch in chars:
            g1 = self.eval(zero, ch, derivs=1)["grad"][0]
            grads.append(float(np.linalg.norm(g1)))
            scale = max(scale, grads[-1])
        for ch, size in zip(chars, grads):
            if size > floor * max(scale, 1.0):
                return ch
        raise ThetaError("no nonsingular odd characteristic found")
