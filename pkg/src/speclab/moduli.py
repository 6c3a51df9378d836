"""Moduli navigation: the coordinate chart and its numerical inverse.

Coordinates are the a-periods of v together with the singular-part
coefficients of v at the points over the poles (in chi_j = x - y_j), minus
the one dependent residue. The forward map is quadrature plus pole jets;
the inverse is Newton iteration on the numerator coefficients using the
Jacobian assembled from implicit differentiation of the defining equation,
with branch points, sheet labels and contours transported by continuity.
The finite-difference engine used by every acceptance oracle lives here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics as nm
from . import surface as sf
from .differentials import Geometry
from .instances import InstanceSpec


class ModuliError(RuntimeError):
    pass


FD_EPS_REL = 1e-4
NEWTON_TOL = 1e-12
POLE_JET_SAMPLES = 128


@dataclass
class ModuliPoint:
    names: tuple
    vector: np.ndarray

    @property
    def by_name(self):
        return dict(zip(self.names, self.vector))

    def copy(self):
        return ModuliPoint(self.names, self.vector.copy())


def coordinate_names(spec, genus):
    names = [f"A{a + 1}" for a in range(genus)]
    for j, p in enumerate(spec.poles):
        for s in range(spec.n):
            for ell in range(1, p.k + 1):
                if (j, s, ell) == (0, 0, 1):
                    continue
                names.append(f"C({j + 1},{s + 1},{ell})")
    return tuple(names)


def coordinate_kinds(spec, genus):
    """Parallel list of (kind, j, s, ell) with kind in {'A', 'C'}."""
    kinds = [("A", a, None, None) for a in range(genus)]
    for j, p in enumerate(spec.poles):
        for s in range(spec.n):
            for ell in range(1, p.k + 1):
                if (j, s, ell) == (0, 0, 1):
                    continue
                kinds.append(("C", j, s, ell))
    return kinds


class PoleCircles:
    """Cached sample circles over each pole, per sheet, with tracked w."""

    def __init__(self, curve):
        self.curve = curve
        self.data = {}
        for j, p in enumerate(curve.spec.poles):
            d = float(np.min(np.abs(
                curve.singular_points[np.abs(curve.singular_points - p.x) > 1e-12]
                - p.x)))
            rho = sf.JET_RADIUS_FACTOR * d
            th = 2j * np.pi * np.arange(POLE_JET_SAMPLES) / POLE_JET_SAMPLES
            ring = p.x + rho * np.exp(th)
            for s in range(curve.n):
                w_center = curve.pole_points[(j, s)].w
                radial = np.linspace(0.0, 1.0, 8)[1:]
                lead_in = p.x + radial * rho
                w_in = curve.track_w(np.concatenate([[p.x], lead_in]), w_center)
                w_ring = curve.track_w(np.concatenate([[lead_in[-1]], ring]),
                                       w_in[-1])[1:]
                self.data[(j, s)] = (rho, ring, w_ring)

    def laurent(self, j, s, values, orders):
        """Coefficients of chi^(-ell) for ell in orders, from ring samples."""
        rho, ring, w_ring = self.data[(j, s)]
        f = np.fft.fft(np.asarray(values, dtype=complex)) / len(values)
        out = []
        for ell in orders:
            out.append(complex(f[(-ell) % len(values)] * rho ** ell))
        return out

    def ring(self, j, s):
        rho, ring, w_ring = self.data[(j, s)]
        return ring, w_ring


def coordinates_of(curve, geo_or_basis, circles=None):
    """Forward chart: a-periods of v plus pole-jet singular coefficients.

    Accepts a Geometry or a bare HomologyBasis; only the a-cycles are used,
    so Newton iterations avoid the full period build.
    """
    basis = getattr(geo_or_basis, "basis", geo_or_basis)
    circles = circles or PoleCircles(curve)
    genus = curve.counts.genus
    names = coordinate_names(curve.spec, genus)
    vec = [curve.integrate_v(c).value for c in basis.a_cycles]
    for j, p in enumerate(curve.spec.poles):
        for s in range(curve.n):
            ring, w_ring = circles.ring(j, s)
            vals = curve.phi(ring, w_ring)
            cs = circles.laurent(j, s, vals, range(1, p.k + 1))
            for ell in range(1, p.k + 1):
                if (j, s, ell) == (0, 0, 1):
                    continue
                vec.append(cs[ell - 1])
    return ModuliPoint(names, np.array(vec, dtype=complex))


def residue_sum(curve, circles=None):
    """Sum of all residues of v over the pole fibers (should vanish)."""
    circles = circles or PoleCircles(curve)
    total = 0.0 + 0.0j
    for j, _ in enumerate(curve.spec.poles):
        for s in range(curve.n):
            ring, w_ring = circles.ring(j, s)
            vals = curve.phi(ring, w_ring)
            total += circles.laurent(j, s, vals, [1])[0]
    return total


def coefficient_layout(spec):
    """(ell, index) pairs for the flattened numerator-coefficient vector."""
    out = []
    for ell in sorted(spec.numer):
        for i in range(len(spec.numer[ell])):
            out.append((ell, i))
    return out


def coefficient_vector(spec):
    return np.concatenate([np.asarray(spec.numer[ell], dtype=complex)
                           for ell in sorted(spec.numer)])


def spec_with_coefficients(spec, vec):
    numer = {}
    pos = 0
    for ell in sorted(spec.numer):
        k = len(spec.numer[ell])
        numer[ell] = np.array(vec[pos:pos + k], dtype=complex)
        pos += k
    return InstanceSpec(spec.label, spec.n, spec.poles, numer)


def coefficient_tangent(curve, ell, i):
    """Evaluator of d(v/dx) for a unit perturbation of coefficient i of N_ell.

    Implicit differentiation of the defining equation; for n = 2,
    d(phi) = -(phi dq1 + dq2) D / w with dq_ell = x^i / D^ell.
    """
    if curve.n != 2:
        raise ModuliError("coefficient tangents implemented for n = 2")
    if ell == 1:
        def fn(x, w, i=i):
            x = np.asarray(x, dtype=complex)
            return -curve.phi(x, w) * x ** i / w
        return fn

    def fn(x, w, i=i, curve=curve):
        x = np.asarray(x, dtype=complex)
        return -(x ** i) / (curve.Dval(x) * w)
    return fn


def coord_jacobian(curve, geo_or_basis, circles=None):
    """Matrix of d(coordinates)/d(numerator coefficients); square by the
    dimension count."""
    basis = getattr(geo_or_basis, "basis", geo_or_basis)
    circles = circles or PoleCircles(curve)
    layout = coefficient_layout(curve.spec)
    genus = curve.counts.genus
    names = coordinate_names(curve.spec, genus)
    jac = np.zeros((len(names), len(layout)), dtype=complex)
    tangents = [coefficient_tangent(curve, ell, i) for ell, i in layout]
    for c, tan in enumerate(tangents):
        row = 0
        for a in range(genus):
            jac[row + a, c] = curve.integrate(tan, basis.a_cycles[a]).value
        row = genus
        for j, p in enumerate(curve.spec.poles):
            for s in range(curve.n):
                ring, w_ring = circles.ring(j, s)
                vals = tan(ring, w_ring)
                cs = circles.laurent(j, s, vals, range(1, p.k + 1))
                for ell in range(1, p.k + 1):
                    if (j, s, ell) == (0, 0, 1):
                        continue
                    jac[row, c] = cs[ell - 1]
                    row += 1
    if jac.shape[0] != jac.shape[1]:
        raise ModuliError(f"chart is not square: {jac.shape}")
    return jac


class Navigator:
    """Newton navigation of the coordinate chart around one instance.

    Holds a light basis for the chart itself; the full Geometry (periods,
    theta, kernels) is built lazily only when a functional asks for it.
    """

    def __init__(self, curve, geo=None, circles=None, basis=None):
        self.curve = curve
        self._geo = geo
        self.basis = (geo.basis if geo is not None
                      else basis if basis is not None
                      else sf.homology_basis(curve))
        self.circles = circles or PoleCircles(curve)
        self._coords = None
        self._jac = None

    @property
    def geo(self):
        if self._geo is None:
            self._geo = Geometry(self.curve, self.basis)
        return self._geo

    def coordinates(self):
        if self._coords is None:
            self._coords = coordinates_of(self.curve, self.basis, self.circles)
        return self._coords

    def jacobian(self):
        if self._jac is None:
            self._jac = coord_jacobian(self.curve, self.basis, self.circles)
        return self._jac

    def jacobian_condition(self):
        return float(np.linalg.cond(self.jacobian()))

    def step_to(self, target_vector, max_iter=10, _depth=0):
        """New Navigator at the prescribed coordinates (Newton on N-coeffs).

        If a direct step trips the branch-tracking guard the move is walked
        in halves (the chart can be stiff: small coordinate steps may move
        branch points substantially).
        """
        target = np.asarray(target_vector, dtype=complex)
        scale = max(1.0, float(np.max(np.abs(target))))
        try:
            return self._newton(target, scale, max_iter)
        except sf.SurfaceError:
            if _depth >= 4:
                raise
            mid = 0.5 * (self.coordinates().vector + target)
            half = self.step_to(mid, max_iter, _depth + 1)
            return half.step_to(target, max_iter, _depth + 1)

    def _newton(self, target, scale, max_iter):
        nav = self
        coeffs = coefficient_vector(self.curve.spec)
        jac = self.jacobian()
        per_coord = np.maximum(1.0, np.abs(target))
        resid_prev = np.inf
        stalls = 0
        for it in range(max_iter):
            resid_vec = nav.coordinates().vector - target
            resid = float(np.max(np.abs(resid_vec) / per_coord))
            if resid <= NEWTON_TOL:
                return nav
            if resid > 0.5 * resid_prev:
                stalls += 1
                # quadrature noise floors the residual; accept a plateau
                if resid <= 1e-10 and stalls >= 1:
                    return nav
                if it >= 2:
                    jac = nav.jacobian()
            else:
                stalls = 0
            resid_prev = resid
            delta, _ = nm.solve_dense(jac, resid_vec)
            coeffs = coeffs - delta
            spec = spec_with_coefficients(self.curve.spec, coeffs)
            curve = sf.build_surface(spec, template=self.curve)
            nav = Navigator(
                curve, basis=sf.homology_basis(curve, template_basis=self.basis))
        resid = float(np.max(np.abs(nav.coordinates().vector - target) / per_coord))
        if resid > 1e3 * NEWTON_TOL:
            raise ModuliError(f"Newton did not converge (residual {resid:.3e})")
        return nav


@dataclass
class FDResult:
    value: object      # Richardson-extrapolated derivative
    coarse: object     # central difference at eps
    fine: object       # central difference at eps/2
    gap: float         # |fine - coarse| consistency gap (shrinks ~4x per halving)


class FDEngine:
    """Central differences with one Richardson level in chart coordinates.

    Perturbed builds are cached by (coordinate, offset); functionals are
    callables (curve, geo) -> scalar or ndarray so several oracles can share
    the same builds.
    """

    def __init__(self, nav, eps_rel=FD_EPS_REL):
        self.nav = nav
        self.eps_rel = eps_rel
        self._cache = {}

    def coord_index(self, name):
        names = self.nav.coordinates().names
        try:
            return names.index(name)
        except ValueError:
            raise ModuliError(f"unknown coordinate {name!r}; have {names}") from None

    def eps_for(self, index):
        z = self.nav.coordinates().vector[index]
        eps = self.eps_rel * max(1.0, abs(z))
        move = self._branch_move_factor(index)
        if move > 0:
            curve = self.nav.curve
            sep = sf._min_pairwise(curve.branch_points)
            eps = min(eps, 0.02 * sep / move)
        return eps

    def _branch_move_factor(self, index):
        """Predicted branch-point displacement per unit step of coordinate
        `index`, from the chart Jacobian and the root sensitivities of the
        discriminant (caps eps on stiff instances)."""
        if not hasattr(self, "_move_cache"):
            self._move_cache = {}
        if index in self._move_cache:
            return self._move_cache[index]
        curve = self.nav.curve
        jac = self.nav.jacobian()
        e_i = np.zeros(jac.shape[0], dtype=complex)
        e_i[index] = 1.0
        dcoef, _ = nm.solve_dense(jac, e_i)
        layout = coefficient_layout(curve.spec)
        dP = np.zeros(1, dtype=complex)
        for (ell, i), dc in zip(layout, dcoef):
            if ell == 1:
                mono = np.zeros(i + 1, dtype=complex)
                mono[i] = dc
                dP = nm.polyadd(dP, 2.0 * nm.polymul(curve.N1, mono))
            elif ell == 2:
                mono = np.zeros(i + 1, dtype=complex)
                mono[i] = -4.0 * dc
                dP = nm.polyadd(dP, mono)
        pprime = nm.polyder(curve.P)
        moves = np.abs(nm.polyval(dP, curve.branch_points)
                       / nm.polyval(pprime, curve.branch_points))
        self._move_cache[index] = float(np.max(moves))
        return self._move_cache[index]

    def build(self, index, offset):
        key = (index, complex(offset))
        if key not in self._cache:
            target = self.nav.coordinates().vector.copy()
            target[index] += offset
            nav2 = self.nav.step_to(target)
            self._cache[key] = (nav2.curve, nav2.geo)
        return self._cache[key]

    def derivative(self, functional, name_or_index, eps=None):
        index = (name_or_index if isinstance(name_or_index, int)
                 else self.coord_index(name_or_index))
        eps = eps if eps is not None else self.eps_for(index)
        d1 = self._central(functional, index, eps)
        d2 = self._central(functional, index, eps / 2.0)
        value = (4.0 * d2 - d1) / 3.0
        gap = float(np.max(np.abs(np.asarray(d2) - np.asarray(d1))))
        return FDResult(value, d1, d2, gap)

    def central(self, functional, name_or_index, eps):
        index = (name_or_index if isinstance(name_or_index, int)
                 else self.coord_index(name_or_index))
        return self._central(functional, index, eps)

    def _central(self, functional, index, eps):
        cp, gp = self.build(index, +eps)
        cm, gm = self.build(index, -eps)
        fp = functional(cp, gp)
        fm = functional(cm, gm)
        return (np.asarray(fp) - np.asarray(fm)) / (2.0 * eps)
