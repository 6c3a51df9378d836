"""The spectral cover as a sheeted surface over the base sphere.

For n = 2 the cover carries the explicit hyperelliptic model w^2 = P(x) with
P = N1^2 - 4 N2, and nearly everything (sheet continuation, monodromy,
homology contours, intersection numbers) is phrased through tracking w along
paths that keep a safety distance from the branch points. Generic-n builds
(continuation and monodromy only) track the full root vector instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nm
from .instances import InstanceError, counts_of, validate_genericity
from .numerics import Arc, Contour, Line


class SurfaceError(RuntimeError):
    pass


class ContinuationError(SurfaceError):
    pass


SAFETY_FACTOR = 0.25     # clearance = factor * distance to nearest other singular point
JET_RADIUS_FACTOR = 0.2
TRACK_STEP_FACTOR = 0.2  # max continuation step relative to branch clearance


@dataclass(frozen=True)
class SurfacePoint:
    x: complex
    sheet: int
    w: complex  # value of w = 2 D phi + N1 at the point (n = 2 model)


@dataclass
class ZeroPoint:
    x: complex
    w: complex
    sheet: int
    is_branch: bool
    index: int


# ---------------------------------------------------------------------------
# path construction
# ---------------------------------------------------------------------------

def _detour_line(seg, center, radius, prefer_ccw=True):
    """Split a Line at a clearance circle, inserting the smaller-winding arc.

    Endpoints inside the disk get radial connector legs so the contour stays
    continuous (a deliberate close approach, not a clearance violation).
    """
    d = seg.z1 - seg.z0
    L2 = abs(d) ** 2
    if L2 == 0:
        return None
    oc = center - seg.z0
    a = L2
    b = -2 * ((oc * d.conjugate()).real)
    c = abs(oc) ** 2 - radius ** 2
    disc = b * b - 4 * a * c
    if disc <= 0:
        return None
    sq = math.sqrt(disc)
    t1 = (-b - sq) / (2 * a)
    t2 = (-b + sq) / (2 * a)
    if t2 <= 0.0 or t1 >= 1.0:
        return None
    start_inside = t1 < 0.0
    end_inside = t2 > 1.0
    t1 = max(t1, 0.0)
    t2 = min(t2, 1.0)
    if t2 - t1 < 1e-12:
        return None
    if start_inside:
        e1 = center + radius * _unit(seg.z0 - center)
    else:
        e1 = seg.z0 + t1 * d
    if end_inside:
        e2 = center + radius * _unit(seg.z1 - center)
    else:
        e2 = seg.z0 + t2 * d
    a1 = math.atan2((e1 - center).imag, (e1 - center).real)
    a2 = math.atan2((e2 - center).imag, (e2 - center).real)
    ccw = a1 + ((a2 - a1) % (2 * math.pi))
    cw = a1 - ((a1 - a2) % (2 * math.pi))
    # smaller winding; ties (segment through the center) go counterclockwise
    if abs(ccw - a1) < abs(cw - a1) - 1e-12:
        a_end = ccw
    elif abs(cw - a1) < abs(ccw - a1) - 1e-12:
        a_end = cw
    else:
        a_end = ccw if prefer_ccw else cw
    pieces = []
    if start_inside:
        pieces.append(Line(seg.z0, e1))
    elif t1 > 0.0:
        pieces.append(Line(seg.z0, e1))
    pieces.append(Arc(center, radius, a1, a_end))
    if end_inside:
        pieces.append(Line(e2, seg.z1))
    elif t2 < 1.0:
        pieces.append(Line(e2, seg.z1))
    return pieces


def build_path(start, end, obstacles, clearances, sqrt_end=None, max_pass=8):
    """Polygonal path from start to end with arc detours around obstacles.

    obstacles/clearances are parallel sequences; an obstacle within its
    clearance of either endpoint is skipped there (deliberate approach).
    sqrt_end in {None, 'end', 'start'} marks a branch-point endpoint so the
    final leg is square-root reparametrized.
    """
    segs = [Line(complex(start), complex(end))]
    for _ in range(max_pass):
        changed = False
        out = []
        for seg in segs:
            if not isinstance(seg, Line):
                out.append(seg)
                continue
            hit = None
            best_t = None
            for o, r in zip(obstacles, clearances):
                if abs(o - complex(start)) < 1e-9 or abs(o - complex(end)) < 1e-9:
                    continue
                rep = _detour_line(seg, complex(o), r)
                if rep is not None:
                    # handle the earliest violation along the segment first
                    t0 = abs(rep[0].z1 - seg.z0) / max(abs(seg.z1 - seg.z0), 1e-300) \
                        if isinstance(rep[0], Line) else 0.0
                    if best_t is None or t0 < best_t:
                        best_t = t0
                        hit = rep
            if hit is None:
                out.append(seg)
            else:
                out.extend(hit)
                changed = True
        segs = out
        if not changed:
            break
    if sqrt_end == "end" and isinstance(segs[-1], Line):
        segs[-1] = Line(segs[-1].z0, segs[-1].z1, sqrt_end="end")
    if sqrt_end == "start" and isinstance(segs[0], Line):
        segs[0] = Line(segs[0].z0, segs[0].z1, sqrt_end="start")
    return Contour(segs)


def _convex_hull(points):
    pts = sorted(set((p.real, p.imag) for p in points))
    if len(pts) == 1:
        return [complex(*pts[0])]
    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return [complex(*p) for p in hull]


def capsule(points, margin, label=""):
    """Counterclockwise offset contour around the convex hull of points."""
    pts = [complex(p) for p in points]
    hull = _convex_hull(pts)
    if len(hull) == 1:
        return nm.circle(hull[0], margin)
    if len(hull) == 2:
        hull = [hull[0], hull[1]]
    m = len(hull)
    segs = []
    for i in range(m):
        a = hull[i]
        b = hull[(i + 1) % m]
        if abs(b - a) < 1e-14:
            continue
        t = (b - a) / abs(b - a)
        nrm = t * (-1j)  # outward normal for counterclockwise hulls
        segs.append(("edge", a + margin * nrm, b + margin * nrm))
        c = hull[(i + 2) % m] if m > 2 else a
        t_next = (c - b) / abs(c - b) if abs(c - b) > 1e-14 else -t
        n_next = t_next * (-1j)
        a0 = math.atan2(nrm.imag, nrm.real)
        a1_raw = math.atan2(n_next.imag, n_next.real)
        sweep = (a1_raw - a0) % (2 * math.pi)
        segs.append(("arc", b, a0, a0 + sweep))
    out = []
    for s in segs:
        if s[0] == "edge":
            out.append(Line(s[1], s[2]))
        else:
            out.append(Arc(s[1], margin, s[2], s[3]))
    return Contour(out, label=label)


# hull orientation check: the monotone-chain output above is clockwise for
# the usual convention, so fix orientation by signed area.

def _signed_area(contour, samples=256):
    z = contour.polyline(per_segment=32)
    return 0.5 * float(np.sum((z[:-1].real * z[1:].imag - z[1:].real * z[:-1].imag)))


def capsule_ccw(points, margin, label=""):
    c = capsule(points, margin, label)
    if _signed_area(c) < 0:
        c = c.reversed()
        c.label = label
    return c


# ---------------------------------------------------------------------------
# intersection numbers on the double cover
# ---------------------------------------------------------------------------

def _tracked_polyline(curve, contour, per_arc=160, per_line=80):
    """Dense polyline with tracked w at each vertex."""
    zs = []
    for seg in contour.segments:
        n = per_arc if isinstance(seg, Arc) else per_line
        t = np.linspace(0.0, 1.0, n, endpoint=False)
        zs.append(seg.point(t))
    zs.append(np.array([contour.end()]))
    z = np.concatenate(zs)
    w0 = curve.contour_start_w(contour)
    w = curve.track_w(z, w0)
    return z, w


def intersection_number(curve, c1, c2):
    """Signed intersection number of two tracked closed/relative contours."""
    z1, w1 = _tracked_polyline(curve, c1)
    z2, w2 = _tracked_polyline(curve, c2)
    p0, p1 = z1[:-1], z1[1:]
    q0, q1 = z2[:-1], z2[1:]
    wa = w1[:-1]
    wb = w2[:-1]
    d1 = p1 - p0
    d2 = q1 - q0
    # bounding-box prefilter
    min1x = np.minimum(p0.real, p1.real)[:, None]
    max1x = np.maximum(p0.real, p1.real)[:, None]
    min1y = np.minimum(p0.imag, p1.imag)[:, None]
    max1y = np.maximum(p0.imag, p1.imag)[:, None]
    min2x = np.minimum(q0.real, q1.real)[None, :]
    max2x = np.maximum(q0.real, q1.real)[None, :]
    min2y = np.minimum(q0.imag, q1.imag)[None, :]
    max2y = np.maximum(q0.imag, q1.imag)[None, :]
    cand = ((min1x <= max2x) & (min2x <= max1x) &
            (min1y <= max2y) & (min2y <= max1y))
    ii, jj = np.nonzero(cand)
    if len(ii) == 0:
        return 0
    a = d1[ii]
    b = -d2[jj]
    rhs = q0[jj] - p0[ii]
    det = a.real * b.imag - a.imag * b.real
    ok = np.abs(det) > 1e-14
    s = np.where(ok, (rhs.real * b.imag - rhs.imag * b.real) / np.where(ok, det, 1), -1)
    t = np.where(ok, (a.real * rhs.imag - a.imag * rhs.real) / np.where(ok, det, 1), -1)
    hits = ok & (s >= 0) & (s < 1) & (t >= 0) & (t < 1)
    total = 0
    for idx in np.nonzero(hits)[0]:
        i, j = ii[idx], jj[idx]
        wa_i, wb_j = wa[i], wb[j]
        if abs(wa_i - wb_j) < abs(wa_i + wb_j):  # same sheet
            cross = (d1[i].conjugate() * d2[j]).imag
            total += 1 if cross > 0 else -1
    return total


# ---------------------------------------------------------------------------
# spectral curve (n = 2 first class, generic n for build/monodromy)
# ---------------------------------------------------------------------------

class SpectralCurve:
    """Immutable-after-build numerical model of the spectral cover."""

    def __init__(self, spec, template=None):
        self.spec = spec
        self.counts = counts_of(spec)
        self.n = spec.n
        sk = spec.sum_k
        self.D = spec.denominator(1)
        self.N = {ell: np.asarray(spec.numer[ell], dtype=complex) for ell in spec.numer}
        if spec.n == 2:
            self.N1 = self.N[1]
            self.N2 = self.N[2]
            self.P = nm.polyadd(nm.polymul(self.N1, self.N1), -4.0 * self.N2)
            self.disc_poly = self.P
        else:
            self.disc_poly = _poly_discriminant(self.N, spec.n)
        self._w_point_cache = {}
        self._build(template)

    # -- construction -------------------------------------------------------

    def _build(self, template):
        spec = self.spec
        rep = nm.poly_roots(self.disc_poly)
        bp = rep.roots
        if np.any(rep.multiplicities > 1):
            raise SurfaceError("non-simple branch point (discriminant has a "
                               "clustered root)")
        if template is None:
            order = np.lexsort((bp.imag, bp.real))
            self.branch_points = bp[order]
        else:
            self.branch_points = _match_points(bp, template.branch_points)

        poles = spec.pole_locations
        if self.n == 2:
            zrep = nm.poly_roots(self.N2)
            z0 = zrep.roots
            if template is not None:
                z0 = _match_points(z0, np.array([z.x for z in template.zeros_d0]))
        else:
            z0 = nm.poly_roots(self.N[self.n]).roots

        self.singular_points = np.concatenate([self.branch_points, poles, z0])
        self.clearance = _clearances(self.singular_points)

        # basepoint on a bounding circle, maximizing distance to singulars
        if template is None:
            ctr = np.mean(self.singular_points)
            rad = 2.2 * float(np.max(np.abs(self.singular_points - ctr))) + 1.0
            angles = 2 * np.pi * np.arange(72) / 72
            cand = ctr + rad * np.exp(1j * angles)
            dists = np.min(np.abs(cand[:, None] - self.singular_points[None, :]), axis=1)
            self.x0 = complex(cand[int(np.argmax(dists))])
        else:
            self.x0 = template.x0

        if self.n == 2:
            self._build_n2(template, z0)
        else:
            self.zeros_d0 = [ZeroPoint(z, 0.0, -1, False, i) for i, z in enumerate(z0)]
            self.zeros = list(self.zeros_d0)

        self.genericity = validate_genericity(spec, self)

    def _build_n2(self, template, z0):
        w0 = np.sqrt(complex(nm.polyval(self.P, self.x0)))
        if template is not None:
            # keep the sheet labels continuous across perturbed builds
            if abs(w0 - template.w0_at_x0) > abs(w0 + template.w0_at_x0):
                w0 = -w0
            self.sheet_sign = template.sheet_sign
        else:
            phi_plus = (-nm.polyval(self.N1, self.x0) + w0) / (2 * self.Dval(self.x0))
            phi_minus = (-nm.polyval(self.N1, self.x0) - w0) / (2 * self.Dval(self.x0))
            # sheet 0 is the lexicographically smaller root at the basepoint
            if (phi_plus.real, phi_plus.imag) <= (phi_minus.real, phi_minus.imag):
                self.sheet_sign = (+1, -1)
            else:
                self.sheet_sign = (-1, +1)
        self.w0_at_x0 = w0

        # points over the poles, labeled by continuation from the basepoint;
        # continuing sigma_s * w0 along the same base path lands on
        # sigma_s * w_arr because tracking is odd in the starting value
        self.pole_points = {}
        for j, p in enumerate(self.spec.poles):
            path = self.path_between(self.x0, p.x)
            w_arr = self.track_contour(path, w_start=w0)[1]
            for s in range(2):
                self.pole_points[(j, s)] = SurfacePoint(
                    p.x, s, self.sheet_sign[s] * w_arr)

        zero_pts = []
        for i, z in enumerate(z0):
            wz = complex(nm.polyval(self.N1, z))
            sheet = self._sheet_of_point(z, wz)
            zero_pts.append(ZeroPoint(complex(z), wz, sheet, False, i))
        self.zeros_d0 = zero_pts
        branch_zeros = [ZeroPoint(complex(b), 0.0, -1, True, i)
                        for i, b in enumerate(self.branch_points)]
        self.zeros = branch_zeros + zero_pts

        if template is None:
            key = [(z.x.real, z.x.imag, z.sheet) for z in self.zeros]
            self.x_r_index = key.index(max(key))
        else:
            self.x_r_index = template.x_r_index
        self.x_r = self.zeros[self.x_r_index]
        if self.x_r.is_branch:
            raise SurfaceError("distinguished zero x_r fell on a branch point; "
                               "regenerate the instance")

    # -- basic evaluators (n = 2) -------------------------------------------

    def sqrtP(self, x):
        """w candidates: sqrt of the discriminant, evaluated in factored form
        (lead * prod (x - e_i)) so there is no cancellation near the branch
        points; the expanded form loses ~4 digits there."""
        x = np.asarray(x, dtype=complex)
        if getattr(self, "branch_points", None) is None or len(
                self.branch_points) != len(self.P) - 1:
            return np.sqrt(nm.polyval(self.P, x))
        prod = np.full_like(x, self.P[-1])
        for e in self.branch_points:
            prod = prod * (x - e)
        return np.sqrt(prod)

    def Dval(self, x):
        """Denominator prod (x - y_j)^{k_j} in factored form: no cancellation
        near the poles, unlike the expanded coefficients."""
        x = np.asarray(x, dtype=complex)
        out = np.ones_like(x)
        for p in self.spec.poles:
            out = out * (x - p.x) ** p.k
        return out

    def phi(self, x, w):
        """Value of v/dx at a point (x, w) of the cover."""
        return (-nm.polyval(self.N1, x) + w) / (2.0 * self.Dval(x))

    def track_w(self, xs, w_start):
        """Continue w = sqrt(P) along an ordered point chain."""
        s = self.sqrtP(xs)
        flips = np.ones(len(xs))
        # choose the branch closest to the previous value, vectorized via
        # sign-consistency of the principal branch between consecutive points
        cons = np.abs(s[1:] - s[:-1]) <= np.abs(s[1:] + s[:-1])
        step_flip = np.where(cons, 1.0, -1.0)
        flips[1:] = np.cumprod(step_flip)
        if abs(s[0] - w_start) <= abs(s[0] + w_start):
            w = s * flips
        else:
            w = -s * flips
        return w

    def _sheet_of_point(self, x, w_at_x):
        """Sheet label of (x, w) via continuation from the basepoint."""
        path = self.path_between(self.x0, complex(x))
        wend = self.track_contour(path, w_start=self.w0_at_x0)[1]
        # sheet s arrives with sigma_s * wend when starting from sigma_s * w0
        for s in (0, 1):
            if abs(self.sheet_sign[s] * wend - w_at_x) < abs(self.sheet_sign[s] * wend + w_at_x):
                return s
        raise ContinuationError("could not identify sheet")

    def w_for_sheet(self, x, sheet):
        """w above x on the sheet with the given global label."""
        key = (complex(x), sheet)
        if key not in self._w_point_cache:
            path = self.path_between(self.x0, complex(x))
            wend = self.track_contour(path, w_start=self.w0_at_x0)[1]
            self._w_point_cache[key] = self.sheet_sign[sheet] * wend
        return self._w_point_cache[key]

    def point(self, x, sheet):
        return SurfacePoint(complex(x), sheet, complex(self.w_for_sheet(x, sheet)))

    # -- paths and tracking ---------------------------------------------------

    def obstacle_lists(self, skip=()):
        obs, clg = [], []
        for i, o in enumerate(self.singular_points):
            if any(abs(o - s) < 1e-12 for s in skip):
                continue
            obs.append(complex(o))
            clg.append(self.clearance[i])
        return obs, clg

    def clearance_of(self, x):
        i = int(np.argmin(np.abs(self.singular_points - x)))
        if abs(self.singular_points[i] - x) < 1e-9:
            return self.clearance[i]
        return SAFETY_FACTOR * float(np.min(np.abs(self.singular_points - x)))

    def path_between(self, a, b, sqrt_end=None):
        obs, clg = self.obstacle_lists(skip=(a, b))
        return build_path(a, b, obs, clg, sqrt_end=sqrt_end)

    def track_contour(self, contour, w_start):
        """w at the start and end of a contour, stepping densely enough."""
        z, w = self._dense_track(contour, w_start)
        return w[0], w[-1]

    def _dense_track(self, contour, w_start):
        zs = []
        for seg in contour.segments:
            npts = self._track_points(seg)
            t = np.linspace(0.0, 1.0, npts, endpoint=False)
            zs.append(seg.point(t))
        zs.append(np.array([contour.end()]))
        z = np.concatenate(zs)
        return z, self.track_w(z, w_start)

    def _track_points(self, seg):
        length = seg.length()
        mid = seg.point(np.linspace(0.05, 0.95, 16))
        dmin = float(np.min(np.abs(mid[:, None] - self.branch_points[None, :])))
        dmin = max(dmin, 1e-6)
        return int(min(4096, max(12, 4 * length / (TRACK_STEP_FACTOR * dmin))))

    def contour_start_w(self, contour):
        """w at a contour's start for its designated starting sheet (cached
        on the contour; ids are not stable cache keys)."""
        cached = getattr(contour, "_start_w", None)
        if cached is None or cached[0] is not self:
            sheet = contour.start_sheet or 0
            contour._start_w = (self, complex(self.w_for_sheet(contour.start(), sheet)))
        return contour._start_w[1]

    def anchors(self, contour):
        """Per-segment anchor grids (t, z, w) for integrand evaluation."""
        cached = getattr(contour, "_anchors", None)
        if cached is None or cached[0] is not self:
            w0 = self.contour_start_w(contour)
            data = []
            w_run = w0
            for seg in contour.segments:
                npts = self._track_points(seg)
                t = np.linspace(0.0, 1.0, npts)
                z = seg.point(t)
                w = self.track_w(z, w_run)
                w_run = w[-1]
                data.append((t, z, w))
            contour._anchors = (self, data)
        return contour._anchors[1]

    def w_on_segment(self, contour, seg_index, t, z):
        """w at parameters t of one segment, matched to the tracked anchors.

        Anchors with tiny |w| (the exact branch endpoint of a square-root
        leg) carry an arbitrary sign and are skipped; the radial approach
        keeps the phase stable, so a farther anchor matches safely.
        """
        ta, za, wa = self.anchors(contour)[seg_index]
        good = np.abs(wa) > 1e-6 * float(np.median(np.abs(wa)) + 1e-300)
        if not np.all(good):
            ta = ta[good]
            wa = wa[good]
        idx = np.clip(np.searchsorted(ta, t), 0, len(ta) - 1)
        s = self.sqrtP(z)
        ref = wa[idx]
        return np.where(np.abs(s - ref) <= np.abs(s + ref), s, -s)

    # -- contour integration ---------------------------------------------------

    def integrate(self, fn, contour, **kw):
        """Integrate fn(x, w) (value relative to dx) along a tracked contour."""
        def wrapped(si, t, z):
            w = self.w_on_segment(contour, si, t, z)
            return fn(z, w)
        return nm.integrate(wrapped, contour, **kw)

    def integrate_v(self, contour, **kw):
        return self.integrate(lambda x, w: self.phi(x, w), contour, **kw)

    # -- monodromy -------------------------------------------------------------

    def continue_sheet(self, contour, start_sheet):
        """Track a sheet along a contour; returns (end_sheet, value log).

        Validates that the contour keeps clear of the branch points except
        for deliberate approaches at its own endpoints.
        """
        pts = contour.polyline(per_segment=160)
        interior = pts[4:-4]
        if len(interior):
            d = np.min(np.abs(interior[:, None] - self.branch_points[None, :]),
                       axis=1)
            ends = [contour.start(), contour.end()]
            end_is_branch = [min(abs(e - b) for b in self.branch_points) < 1e-9
                             for e in ends]
            # allow the run-in toward a branch endpoint
            lo = np.argmax(d > 0.02) if end_is_branch[0] else 0
            hi = len(d) - np.argmax(d[::-1] > 0.02) if end_is_branch[1] else len(d)
            core = d[lo:hi]
            if len(core) and float(np.min(core)) < 0.25 * float(np.min(
                    self.clearance)):
                raise ContinuationError(
                    "path too close to a branch point (distance %.2e)"
                    % float(np.min(core)))
        w0 = self.sheet_sign[start_sheet] * self.w0_at_x0 if abs(
            contour.start() - self.x0) < 1e-12 else self.w_for_sheet(
                contour.start(), start_sheet)
        z, w = self._dense_track(contour, w0)
        w_end = w[-1]
        ref = self.w_for_sheet(contour.end(), 0)
        end_sheet = 0 if abs(w_end - ref) <= abs(w_end + ref) else 1
        return end_sheet, (z, w)

    def branch_loop(self, i, radius=None):
        b = complex(self.branch_points[i])
        r = radius if radius is not None else self._branch_clearance(i)
        approach = self.path_between(self.x0, b + r)
        return Contour(approach.segments
                       + nm.circle(b, r).segments
                       + approach.reversed().segments, label=f"loop{i}")

    def _branch_clearance(self, i):
        b = self.branch_points[i]
        others = np.delete(self.singular_points,
                           int(np.argmin(np.abs(self.singular_points - b))))
        return SAFETY_FACTOR * float(np.min(np.abs(others - b)))

    def monodromy(self, i):
        """Sheet permutation of the small loop around branch point i."""
        if self.n == 2:
            loop = self.branch_loop(i)
            w_end = self.track_contour(loop, w_start=self.w0_at_x0)[1]
            if abs(w_end - self.w0_at_x0) < abs(w_end + self.w0_at_x0):
                return (0, 1)
            return (1, 0)
        return _monodromy_generic(self, i)

    def monodromy_product(self):
        """Composition of all branch monodromies in angular-sweep order."""
        order = np.argsort(np.angle(self.branch_points - self.x0))
        perm = tuple(range(self.n))
        for i in order:
            m = self.monodromy(int(i))
            perm = tuple(m[p] for p in perm)
        return perm


def _clearances(singulars):
    n = len(singulars)
    out = np.zeros(n)
    for i in range(n):
        d = np.abs(singulars - singulars[i])
        d[i] = np.inf
        out[i] = SAFETY_FACTOR * float(np.min(d))
    return out


def _match_points(new, old):
    """Order `new` so entry i is the point nearest old[i]; guard collisions."""
    new = np.asarray(new)
    old = np.asarray(old)
    if len(new) != len(old):
        raise SurfaceError("point count changed across a moduli step")
    dmat = np.abs(new[:, None] - old[None, :])
    order = np.full(len(old), -1, dtype=int)
    used = np.zeros(len(new), dtype=bool)
    pairs = sorted(((dmat[i, j], i, j) for i in range(len(new)) for j in range(len(old))))
    # matching stays unambiguous while moves are below half the separation
    guard = 0.35 * _min_pairwise(old)
    for d, i, j in pairs:
        if order[j] >= 0 or used[i]:
            continue
        order[j] = i
        used[i] = True
    moved = np.abs(new[order] - old)
    if np.any(moved > guard):
        raise SurfaceError("branch-point tracking collision: a point moved "
                           "more than the matching guard")
    return new[order]


def _min_pairwise(pts):
    if len(pts) < 2:
        return np.inf
    d = np.abs(pts[:, None] - pts[None, :]) + np.eye(len(pts)) * 1e18
    return float(np.min(d))


# ---------------------------------------------------------------------------
# generic-n continuation (build / monodromy only)
# ---------------------------------------------------------------------------

def _poly_discriminant(N, n):
    """Discriminant in u of u^n + N1 u^{n-1} + ... + Nn (polynomial coeffs in x),
    computed by evaluation at Fourier nodes and interpolation."""
    degs = [len(nm.polytrim(N[ell])) - 1 for ell in range(1, n + 1)]
    max_deg = max(d + 1 for d in degs) * (2 * n - 1)  # generous bound
    m = 1
    while m < 2 * max_deg + 8:
        m *= 2
    radius = 1.7
    xs = radius * np.exp(2j * np.pi * np.arange(m) / m)
    vals = np.empty(m, dtype=complex)
    for i, x in enumerate(xs):
        c = np.zeros(n + 1, dtype=complex)
        c[n] = 1.0
        for ell in range(1, n + 1):
            c[n - ell] = nm.polyval(N[ell], x)
        vals[i] = _disc_of_monic(c)
    coeffs = np.fft.fft(vals) / m
    coeffs = coeffs / radius ** np.arange(m)
    return nm.polytrim(coeffs, rel=1e-9)


def _disc_of_monic(c_asc):
    """Discriminant of a monic polynomial given ascending coefficients."""
    deg = len(c_asc) - 1
    roots = np.roots(c_asc[::-1])
    disc = 1.0 + 0.0j
    for i in range(deg):
        for j in range(i + 1, deg):
            disc *= (roots[i] - roots[j]) ** 2
    return disc


def _roots_at(curve, x):
    c = np.zeros(curve.n + 1, dtype=complex)
    c[curve.n] = 1.0
    for ell in range(1, curve.n + 1):
        c[curve.n - ell] = nm.polyval(curve.N[ell], x)
    return np.roots(c[::-1])


def _track_roots(curve, xs, start_roots):
    roots = np.asarray(start_roots, dtype=complex)
    for x in xs[1:]:
        new = _roots_at(curve, x)
        taken = np.zeros(len(new), dtype=bool)
        ordered = np.empty_like(roots)
        for i, r in enumerate(roots):
            j = int(np.argmin(np.where(taken, np.inf, np.abs(new - r))))
            ordered[i] = new[j]
            taken[j] = True
        sep = _min_pairwise(new)
        if np.max(np.abs(ordered - roots)) > 0.45 * max(sep, 1e-14):
            raise ContinuationError("root tracking step too close to a collision")
        roots = ordered
    return roots


def _monodromy_generic(curve, i):
    b = complex(curve.branch_points[i])
    r = curve._branch_clearance(i)
    approach = curve.path_between(curve.x0, b + r)
    loop = Contour(approach.segments + nm.circle(b, r).segments
                   + approach.reversed().segments)
    zs = []
    for seg in loop.segments:
        npts = curve._track_points(seg)
        t = np.linspace(0.0, 1.0, npts, endpoint=False)
        zs.append(seg.point(t))
    zs.append(np.array([loop.end()]))
    z = np.concatenate(zs)
    # sheet order at the basepoint: lexicographic in (Re, Im)
    base = _roots_at(curve, curve.x0)
    base = base[np.lexsort((base.imag, base.real))]
    final = _track_roots(curve, z, base)
    perm = []
    for f in final:
        perm.append(int(np.argmin(np.abs(base - f))))
    if sorted(perm) != list(range(curve.n)):
        raise ContinuationError("monodromy tracking produced a non-permutation")
    return tuple(perm)


def build_surface(spec, template=None):
    """Construct the cover; raises on genericity failure."""
    if spec.n < 2:
        raise InstanceError("$.n", "cover with n < 2 is the base itself")
    curve = SpectralCurve(spec, template=template)
    if not curve.genericity.ok:
        raise SurfaceError("genericity failure: " + curve.genericity.fail_reasons())
    if len(curve.branch_points) != curve.counts.p:
        raise SurfaceError("branch point count mismatch")
    if spec.n == 2 and len(curve.zeros) != curve.counts.r - curve.counts.p + len(curve.branch_points):
        raise SurfaceError("zero divisor count mismatch")
    return curve


# ---------------------------------------------------------------------------
# homology basis (n = 2)
# ---------------------------------------------------------------------------

@dataclass
class HomologyBasis:
    a_cycles: list
    b_cycles: list
    cuts: list
    b_flipped: list = field(default_factory=list)


def homology_basis(curve, template_basis=None):
    """Capsule realization of the standard nested hyperelliptic basis.

    Branch points in the deterministic order are paired into consecutive
    cuts; a_i rings cut i, b_i rings the block from the right end of cut i
    through the left end of the last cut. Orientations come from computed
    intersection numbers, or are inherited from a template basis when the
    curve is a small deformation (the numbers are locally constant).
    """
    if curve.n != 2:
        raise SurfaceError("homology basis not implemented for n>2")
    e = curve.branch_points
    g = curve.counts.genus
    cuts = [(e[2 * i], e[2 * i + 1]) for i in range(g + 1)]
    a_cycles = []
    b_cycles = []
    for i in range(g):
        grp = [e[2 * i], e[2 * i + 1]]
        a_cycles.append(_capsule_for(curve, grp, f"a{i + 1}"))
    for i in range(g):
        grp = list(e[2 * i + 1: 2 * g + 1])
        b_cycles.append(_capsule_for(curve, grp, f"b{i + 1}"))
    basis = HomologyBasis(a_cycles, b_cycles, cuts)
    if template_basis is not None:
        basis.b_flipped = list(template_basis.b_flipped)
        for i, flip in enumerate(basis.b_flipped):
            if flip:
                basis.b_cycles[i] = basis.b_cycles[i].reversed()
    else:
        _orient_b_cycles(curve, basis)
    return basis


def _capsule_for(curve, group, label):
    group = [complex(p) for p in group]
    excluded = [complex(q) for q in curve.singular_points
                if min(abs(q - p) for p in group) > 1e-12]
    hull_probe = capsule_ccw(group, 1e-9, label)
    d_out = _dist_to_set(hull_probe, excluded)
    best = None
    for frac in (0.45, 0.35, 0.55, 0.25, 0.3, 0.4, 0.5, 0.62, 0.2, 0.7):
        margin = frac * d_out
        c = capsule_ccw(group, margin, label)
        # the boundary must keep clear of every singular point, enclosed or not
        score = _dist_to_set(c, [complex(q) for q in curve.singular_points])
        if best is None or score > best[0]:
            best = (score, c, margin)
    score, contour, margin = best
    spread = _min_pairwise(curve.branch_points)
    if score <= max(0.25 * margin, 0.03 * spread):
        raise SurfaceError(f"could not route capsule {label} clear of "
                           "singular points; instance geometry too tight")
    return contour


def _dist_to_set(contour, points):
    if not points:
        return 1.0
    z = contour.polyline(per_segment=512)
    return float(np.min(np.abs(z[:, None] - np.asarray(points)[None, :])))


def _orient_b_cycles(curve, basis):
    """Flip b orientations so the computed pairing is +delta_ij."""
    g = len(basis.a_cycles)
    basis.b_flipped = [False] * g
    for i in range(g):
        n = intersection_number(curve, basis.a_cycles[i], basis.b_cycles[i])
        if n == 0:
            raise SurfaceError(f"a{i + 1} and b{i + 1} do not intersect; "
                               "capsule construction failed")
        if n < 0:
            basis.b_cycles[i] = basis.b_cycles[i].reversed()
            basis.b_flipped[i] = True


def intersection_matrix(curve, basis):
    g = len(basis.a_cycles)
    cycles = basis.a_cycles + basis.b_cycles
    m = np.zeros((2 * g, 2 * g), dtype=int)
    for i in range(2 * g):
        for j in range(i + 1, 2 * g):
            m[i, j] = intersection_number(curve, cycles[i], cycles[j])
            m[j, i] = -m[i, j]
    return m


def zero_paths(curve, basis=None):
    """Reference paths from x_r to every other zero (branch or simple)."""
    paths = []
    targets = []
    for idx, z in enumerate(curve.zeros):
        if idx == curve.x_r_index:
            continue
        if z.is_branch:
            path = path_to_point(curve, z.x, None, sqrt_end="end",
                                 label=f"l->z{idx}")
        else:
            path = path_to_point(curve, z.x, z.w, label=f"l->z{idx}")
        paths.append(path)
        targets.append(idx)
    return paths, targets


def path_to_point(curve, target_x, target_w, start=None, sqrt_end=None, label=""):
    """Tracked path from x_r (or start) landing on the prescribed lift.

    If the direct route arrives on the wrong sheet, reroute through the
    vicinity of the first branch point, with or without a full loop around
    it, whichever lands on the requested lift.
    """
    src = curve.x_r if start is None else start
    candidates = [curve.path_between(src.x, target_x, sqrt_end=sqrt_end)]
    candidates += _rerouted_paths(curve, src.x, target_x)
    for path in candidates:
        path.start_sheet = src.sheet
        path.label = label
        if target_w is None:
            return path
        w_end = curve.track_contour(path, curve.contour_start_w(path))[1]
        if abs(w_end - target_w) <= abs(w_end + target_w):
            return path
    raise ContinuationError("no routing landed on the requested lift")


def _rerouted_paths(curve, a, b):
    """Two detour routes through the first branch point's clearance circle:
    with and without a full loop around it (the loop swaps sheets)."""
    bp = complex(curve.branch_points[0])
    r = curve._branch_clearance(0)
    p_in = bp + r * _unit(a - bp)
    leg1 = curve.path_between(a, p_in)
    leg2 = curve.path_between(p_in, b)
    a0 = math.atan2((p_in - bp).imag, (p_in - bp).real)
    loop = Arc(bp, r, a0, a0 + 2 * math.pi)
    return [Contour(leg1.segments + [loop] + leg2.segments),
            Contour(leg1.segments + leg2.segments)]


def _unit(z):
    return z / abs(z) if abs(z) > 0 else 1.0
