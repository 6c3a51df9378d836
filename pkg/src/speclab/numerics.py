"""Low-level complex-analytic kernels.

Polynomial root finding (simultaneous Aberth-Ehrlich iteration with a
companion-matrix fallback), truncated power-series algebra, directed contours
made of line/arc segments, adaptive Gauss-Legendre quadrature along contours,
discrete-Fourier Laurent-jet extraction on circles, and guarded dense solves.

Everything is plain numpy; evaluators passed in must accept vectorized
complex arguments.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

ROOT_TOL = 1e-12
QUAD_REL_TOL = 1e-12
JET_TAIL_TOL = 1e-10
CLUSTER_TOL = 1e-7


class NumericsError(RuntimeError):
    pass


class QuadratureError(NumericsError):
    pass


class RootFindingError(NumericsError):
    pass


class SingularSystemError(NumericsError):
    pass


class JetError(NumericsError):
    pass


# ---------------------------------------------------------------------------
# polynomials (coefficient arrays are ascending: c[0] + c[1] x + ...)
# ---------------------------------------------------------------------------

def polyval(coeffs, x):
    """Horner evaluation of an ascending-coefficient polynomial."""
    c = np.asarray(coeffs)
    x = np.asarray(x)
    out = np.zeros_like(x, dtype=complex) + c[-1]
    for k in range(len(c) - 2, -1, -1):
        out = out * x + c[k]
    return out


def polyder(coeffs):
    c = np.asarray(coeffs, dtype=complex)
    if len(c) <= 1:
        return np.zeros(1, dtype=complex)
    return c[1:] * np.arange(1, len(c))


def polymul(a, b):
    return np.convolve(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def polyadd(a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if len(a) < len(b):
        a, b = b, a
    out = a.copy()
    out[: len(b)] += b
    return out


def polytrim(coeffs, rel=1e-14):
    c = np.asarray(coeffs, dtype=complex)
    scale = np.max(np.abs(c)) if len(c) else 0.0
    if scale == 0.0:
        return np.zeros(1, dtype=complex)
    n = len(c)
    while n > 1 and abs(c[n - 1]) <= rel * scale:
        n -= 1
    return c[:n].copy()


def polyshift(coeffs, a):
    """Coefficients of p(a + t) in t (ascending), by iterated Horner division."""
    work = list(np.asarray(coeffs, dtype=complex))
    out = []
    while work:
        rem = work[-1]
        quot = [0.0 + 0.0j] * (len(work) - 1)
        for j in range(len(work) - 2, -1, -1):
            quot[j] = rem
            rem = work[j] + rem * a
        out.append(rem)
        work = quot
    return np.array(out, dtype=complex)


# --- truncated power series helpers (ascending, fixed length) --------------

def series_mul(a, b, m):
    out = np.convolve(np.asarray(a[:m], dtype=complex), np.asarray(b[:m], dtype=complex))[:m]
    if len(out) < m:
        out = np.pad(out, (0, m - len(out)))
    return out


def series_inv(a, m):
    a = np.asarray(a, dtype=complex)
    if a[0] == 0:
        raise NumericsError("series not invertible: zero constant term")
    out = np.zeros(m, dtype=complex)
    out[0] = 1.0 / a[0]
    for k in range(1, m):
        s = 0.0 + 0.0j
        for j in range(1, min(k, len(a) - 1) + 1):
            s += a[j] * out[k - j]
        out[k] = -s / a[0]
    return out


def series_sqrt(a, m, branch=None):
    """sqrt of a power series with nonzero constant term.

    `branch` selects the constant term of the result (must square to a[0]);
    defaults to the principal square root.
    """
    a = np.asarray(a, dtype=complex)
    s0 = np.sqrt(a[0]) if branch is None else branch
    if abs(s0 * s0 - a[0]) > 1e-9 * max(1.0, abs(a[0])):
        raise NumericsError("series_sqrt: branch does not square to the constant term")
    out = np.zeros(m, dtype=complex)
    out[0] = s0
    for k in range(1, m):
        s = 0.0 + 0.0j
        for j in range(1, k):
            s += out[j] * out[k - j]
        ak = a[k] if k < len(a) else 0.0
        out[k] = (ak - s) / (2.0 * s0)
    return out


def series_integrate(a):
    """Antiderivative with zero constant term."""
    a = np.asarray(a, dtype=complex)
    out = np.zeros(len(a) + 1, dtype=complex)
    out[1:] = a / np.arange(1, len(a) + 1)
    return out


# ---------------------------------------------------------------------------
# root finding
# ---------------------------------------------------------------------------

@dataclass
class RootReport:
    roots: np.ndarray
    multiplicities: np.ndarray
    residuals: np.ndarray
    converged: bool


def poly_roots(coeffs, tol=ROOT_TOL, max_iter=120, cluster_tol=CLUSTER_TOL):
    """All complex roots of an ascending-coefficient polynomial.

    Simultaneous Aberth-Ehrlich iteration started on a deterministic ring,
    with a companion-matrix fallback if the iteration stalls. Roots closer
    than cluster_tol (relative) are flagged as a multiplicity group.
    """
    c = polytrim(coeffs)
    deg = len(c) - 1
    if deg < 1:
        raise RootFindingError("poly_roots: degree must be >= 1")
    if deg == 1:
        roots = np.array([-c[0] / c[1]])
        return RootReport(roots, np.ones(1, dtype=int), _residuals(c, roots), True)

    cn = c / c[-1]
    radius = 1.0 + np.max(np.abs(cn[:-1]))
    k = np.arange(deg)
    z = radius * np.exp(2j * np.pi * (k + 0.25) / deg + 0.43j)
    dc = polyder(cn)

    converged = False
    for _ in range(max_iter):
        p = polyval(cn, z)
        dp = polyval(dc, z)
        newton = np.where(dp != 0, p / np.where(dp == 0, 1, dp), 0.0)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        s = np.sum(1.0 / diff, axis=1)
        denom = 1.0 - newton * s
        step = newton / np.where(denom == 0, 1, denom)
        z = z - step
        if np.all(np.abs(step) <= 1e-15 * (1.0 + np.abs(z))):
            converged = True
            break
    res = _residuals(cn, z)
    scale = _coeff_scale(cn, z)
    if not converged and np.any(res > tol * scale):
        z = np.roots(cn[::-1])  # companion-matrix eigenvalues
        z = _polish(cn, dc, z)
        res = _residuals(cn, z)
        scale = _coeff_scale(cn, z)
        if np.any(res > 1e3 * tol * scale):
            raise RootFindingError("poly_roots: no convergence (worst residual %.3e)"
                                   % float(np.max(res / scale)))
    z = _polish(cn, dc, z)
    res = _residuals(cn, z)
    order = np.lexsort((z.imag, z.real))
    z = z[order]
    res = res[order]
    mult = _multiplicity_flags(z, cluster_tol)
    return RootReport(z, mult, res, True)


def _polish(cn, dc, z, sweeps=3):
    for _ in range(sweeps):
        p = polyval(cn, z)
        dp = polyval(dc, z)
        safe = np.abs(dp) > 0
        z = np.where(safe, z - p / np.where(safe, dp, 1), z)
    return z


def _residuals(c, roots):
    return np.abs(polyval(c, roots))


def _coeff_scale(c, roots):
    az = np.maximum(1.0, np.abs(roots))
    powers = az[:, None] ** np.arange(len(c))[None, :]
    return powers @ np.abs(c)


def _multiplicity_flags(roots, cluster_tol):
    n = len(roots)
    mult = np.ones(n, dtype=int)
    scale = max(1.0, float(np.max(np.abs(roots))))
    used = np.zeros(n, dtype=bool)
    for i in range(n):
        if used[i]:
            continue
        group = [i]
        for j in range(i + 1, n):
            if not used[j] and abs(roots[j] - roots[i]) < cluster_tol * scale:
                group.append(j)
        if len(group) > 1:
            for j in group:
                mult[j] = len(group)
                used[j] = True
    return mult


# ---------------------------------------------------------------------------
# contours
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Line:
    z0: complex
    z1: complex
    # sqrt_end in {None, "start", "end"}: quadratic reparametrization so the
    # named endpoint is approached like t^2 (used for branch-point legs).
    sqrt_end: str | None = None

    def point(self, t):
        t = np.asarray(t, dtype=float)
        if self.sqrt_end == "end":
            u = 1.0 - (1.0 - t) ** 2
        elif self.sqrt_end == "start":
            u = t ** 2
        else:
            u = t
        return self.z0 + (self.z1 - self.z0) * u

    def tangent(self, t):
        t = np.asarray(t, dtype=float)
        d = self.z1 - self.z0
        if self.sqrt_end == "end":
            return d * 2.0 * (1.0 - t)
        if self.sqrt_end == "start":
            return d * 2.0 * t
        return np.broadcast_to(d, t.shape).copy() if t.shape else d

    def length(self):
        return abs(self.z1 - self.z0)

    def reversed(self):
        flip = {None: None, "start": "end", "end": "start"}[self.sqrt_end]
        return Line(self.z1, self.z0, flip)


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    a0: float
    a1: float  # a1 > a0 is counterclockwise

    def point(self, t):
        t = np.asarray(t, dtype=float)
        ang = self.a0 + (self.a1 - self.a0) * t
        return self.center + self.radius * np.exp(1j * ang)

    def tangent(self, t):
        t = np.asarray(t, dtype=float)
        ang = self.a0 + (self.a1 - self.a0) * t
        return 1j * (self.a1 - self.a0) * self.radius * np.exp(1j * ang)

    def length(self):
        return abs(self.a1 - self.a0) * self.radius

    def reversed(self):
        return Arc(self.center, self.radius, self.a1, self.a0)


Segment = Line | Arc


@dataclass
class Contour:
    """Directed chain of segments, optionally tagged with a starting sheet."""

    segments: list
    start_sheet: int | None = None
    label: str = ""

    def start(self):
        return complex(self.segments[0].point(0.0))

    def end(self):
        return complex(self.segments[-1].point(1.0))

    def is_closed(self, tol=1e-9):
        return abs(self.start() - self.end()) <= tol * max(1.0, abs(self.start()))

    def reversed(self):
        return Contour([s.reversed() for s in reversed(self.segments)],
                       self.start_sheet, self.label + "~")

    def polyline(self, per_segment=96):
        """Sample points and parameter tags, densely enough for crossing tests."""
        pts = []
        for seg in self.segments:
            n = per_segment if isinstance(seg, Arc) else max(8, per_segment // 2)
            t = np.linspace(0.0, 1.0, n)
            pts.append(seg.point(t))
        return np.concatenate(pts)

    def __iter__(self):
        return iter(self.segments)


def circle(center, radius, orientation=+1, a0=0.0):
    """Full circle as a one-arc contour; orientation +1 is counterclockwise."""
    a1 = a0 + orientation * 2.0 * math.pi
    return Contour([Arc(center, radius, a0, a1)])


def min_distance_to_segment(seg, point, samples=64):
    t = np.linspace(0.0, 1.0, samples)
    return float(np.min(np.abs(seg.point(t) - point)))


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _gl_nodes(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


@functools.lru_cache(maxsize=None)
def gl_antiderivative_matrix(order):
    """S with (S f)(j) = integral of the GL interpolant of f from the panel
    start to node j, for values f on the [0,1] Gauss-Legendre nodes.

    Built in the Legendre basis for stability: values -> coefficients by
    exact quadrature, antiderivative via the three-term recurrence.
    """
    t, w = _gl_nodes(order)
    x = 2.0 * t - 1.0
    pvals = np.zeros((order + 1, order))
    pvals[0] = 1.0
    if order > 0:
        pvals[1] = x
    for m in range(1, order):
        pvals[m + 1] = ((2 * m + 1) * x * pvals[m] - m * pvals[m - 1]) / (m + 1)
    # coefficients c_m = (2m+1)/2 * sum w_half f P_m  (w on [0,1] => factor 2)
    coef_mat = pvals[:order] * (2.0 * np.arange(order)[:, None] + 1.0) * w[None, :]
    # antiderivative on [-1,1]: Int P_m = (P_{m+1} - P_{m-1}) / (2m+1)
    anti = np.zeros((order, order))
    for m in range(order):
        upper = pvals[m + 1]
        lower = pvals[m - 1] if m >= 1 else np.ones(order)
        upper0 = (-1.0) ** (m + 1)
        lower0 = (-1.0) ** (m - 1) if m >= 1 else 1.0
        anti[m] = ((upper - upper0) - (lower - lower0)) / (2 * m + 1)
    # map to [0,1] parametrization: dt = dx/2
    return 0.5 * (anti.T @ coef_mat)


@dataclass
class QuadResult:
    value: complex
    error: float
    n_eval: int


def integrate(fn, contour, rel_tol=QUAD_REL_TOL, abs_floor=1e-14, max_depth=24,
              order=12):
    """Adaptive Gauss-Legendre integral of fn along a contour.

    fn(seg_index, t_array, z_array) -> integrand values relative to dz;
    the engine multiplies by the segment tangent. The error estimate compares
    order-n with order-2n panels and is summed over accepted panels.
    """
    total = 0.0 + 0.0j
    err = 0.0
    n_eval = 0
    # first pass to set an absolute scale
    scale_acc = 0.0
    panels_all = []
    for si, seg in enumerate(contour.segments):
        panels_all.append((si, seg, 0.0, 1.0, 0))
    stack = panels_all[::-1]
    results = []
    while stack:
        si, seg, ta, tb, depth = stack.pop()
        coarse, fine, neval = _panel_pair(fn, si, seg, ta, tb, order)
        n_eval += neval
        e = abs(fine - coarse)
        scale_acc = max(scale_acc, abs(fine))
        tol_here = max(rel_tol * max(scale_acc, abs(fine)), abs_floor)
        if e <= tol_here or depth >= max_depth:
            # at the depth cap, tolerate a roundoff-floor plateau but fail on
            # genuinely unresolved panels
            if depth >= max_depth and e > max(1e3 * tol_here, 3e-9):
                raise QuadratureError(
                    "quadrature subdivision exhausted on segment %d of %s "
                    "(panel error %.3e)" % (si, contour.label or "contour", e))
            results.append((fine, e))
        else:
            tm = 0.5 * (ta + tb)
            stack.append((si, seg, tm, tb, depth + 1))
            stack.append((si, seg, ta, tm, depth + 1))
    total = sum(r[0] for r in results)
    err = sum(r[1] for r in results)
    return QuadResult(total, err, n_eval)


def _panel_pair(fn, si, seg, ta, tb, order):
    h = tb - ta
    vals = []
    for o in (order, 2 * order):
        t, w = _gl_nodes(o)
        tt = ta + h * t
        z = seg.point(tt)
        f = fn(si, tt, z)
        dz = seg.tangent(tt)
        vals.append(h * np.sum(w * f * dz))
    return vals[0], vals[1], 3 * order


def integrate_function(fn, contour, **kw):
    """integrate() for plain integrands fn(z_array)."""
    return integrate(lambda si, t, z: fn(z), contour, **kw)


# ---------------------------------------------------------------------------
# Laurent jets on circles
# ---------------------------------------------------------------------------

@dataclass
class JetSeries:
    """Truncated Laurent data c_m for m in [-n_neg, m_pos] at a circle of
    radius rho around a local-parameter origin."""

    rho: float
    n_neg: int
    coeffs: np.ndarray  # index m + n_neg
    tail: float = 0.0

    def coef(self, m):
        i = m + self.n_neg
        if i < 0 or i >= len(self.coeffs):
            return 0.0 + 0.0j
        return complex(self.coeffs[i])

    @property
    def residue(self):
        return self.coef(-1)

    def deriv0(self, k):
        """k-th derivative at 0 of the regular part (requires no pole)."""
        return math.factorial(k) * self.coef(k)

    def eval(self, eta):
        eta = np.asarray(eta, dtype=complex)
        out = np.zeros_like(eta)
        for i, c in enumerate(self.coeffs):
            m = i - self.n_neg
            out = out + c * eta ** m
        return out

    def taylor(self, m_max=None):
        """Ascending regular-part coefficients c_0..c_{m_max}."""
        if m_max is None:
            m_max = len(self.coeffs) - 1 - self.n_neg
        return np.array([self.coef(m) for m in range(0, m_max + 1)])


def circle_jet(fn, rho, n_neg=4, m_pos=12, n_samples=256, tail_tol=JET_TAIL_TOL,
               check_tail=True):
    """Laurent window of fn from equispaced samples on |eta| = rho.

    fn(eta_array) -> values. The extracted c_m satisfy fn = sum c_m eta^m on
    the circle; the tail estimate is the largest |c_m rho^m| in the top
    quarter of the retained spectrum, relative to the largest overall.
    """
    k = np.arange(n_samples)
    eta = rho * np.exp(2j * np.pi * k / n_samples)
    vals = np.asarray(fn(eta), dtype=complex)
    if vals.shape != eta.shape:
        raise JetError("circle_jet evaluator returned wrong shape")
    f = np.fft.fft(vals) / n_samples
    ms = np.arange(-n_neg, m_pos + 1)
    coeffs = f[ms % n_samples] / rho ** ms.astype(float)
    # tail check on raw Fourier magnitudes (== |c_m| rho^m) just past the window
    mags = np.abs(f)
    top = np.arange(m_pos + 1, m_pos + 7) % n_samples
    scale = float(np.max(mags)) or 1.0
    tail = float(np.max(mags[top])) / scale
    if check_tail and tail > tail_tol:
        raise JetError("circle_jet tail %.3e above tolerance %.1e; decrease rho "
                       "or raise n_samples" % (tail, tail_tol))
    return JetSeries(rho, n_neg, coeffs, tail)


# ---------------------------------------------------------------------------
# dense linear algebra
# ---------------------------------------------------------------------------

def solve_dense(matrix, rhs, rel_tol=1e-12, cond_cap=1e12):
    """Guarded numpy solve: residual <= rel_tol * scale, condition reported."""
    a = np.asarray(matrix, dtype=complex)
    b = np.asarray(rhs, dtype=complex)
    if a.shape[0] != a.shape[1]:
        raise SingularSystemError("solve_dense: matrix not square")
    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > cond_cap:
        raise SingularSystemError("solve_dense: condition %.3e beyond cap" % cond)
    x = np.linalg.solve(a, b)
    resid = np.linalg.norm(a @ x - b)
    scale = np.linalg.norm(a, ord=np.inf) * np.linalg.norm(x) + np.linalg.norm(b)
    if resid > rel_tol * max(scale, 1e-300):
        raise SingularSystemError("solve_dense: residual %.3e above tolerance" % resid)
    return x, cond
