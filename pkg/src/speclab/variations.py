"""Variational residue formulas on the moduli of spectral covers.

Every first-order formula has the shape

    d(target)/d(coordinate) = - sum over branch points  c_i(h) * res_i(K)

where h is the direction differential attached to the coordinate (the
normalized holomorphic / second-kind / third-kind differential), c_i(h) is
the endpoint factor h / d log(v/dx) at the branch point, and K is the
target's kernel. Residues are extracted by FFT on the branch-frame circles
in the double-cover parameter. The period-matrix variation is computed in
both of its algebraically equal forms and cross-checked; the tau gradient
carries the extra sum over all zeros of v; the second-derivative formula
for the period matrix is assembled from the branch jets.

Derivatives are understood with the base coordinate of every evaluation
point held fixed; for the multi-differential hierarchy this convention adds
argument-transport terms -(target) * sum (v_dir/v)(z_k) on top of the
residue sum (at two points the R-hierarchy has none, and its variation
reduces exactly to the bidifferential formula).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import numerics as nm
from . import surface as sf
from .differentials import (MeroDifferential, holomorphic_unit,
                            residue_from_samples, second_kind, third_kind)


class VariationError(RuntimeError):
    pass


TWO_PI_I = 2j * math.pi
FORM_AGREE_TOL = 1e-9


@dataclass
class CoordinateDirection:
    name: str
    kind: str             # "A" or "C"
    indices: tuple        # (alpha,) or (j, s, ell)
    differential: MeroDifferential


def parse_coordinate_name(name):
    if name.startswith("A"):
        return ("A", (int(name[1:]) - 1,))
    if name.startswith("C(") and name.endswith(")"):
        j, s, ell = (int(t) for t in name[2:-1].split(","))
        return ("C", (j - 1, s - 1, ell))
    raise VariationError(f"unrecognized coordinate name {name!r}")


def direction_differential(curve, geo, name):
    """The differential attached to a coordinate direction."""
    kind, idx = parse_coordinate_name(name)
    if kind == "A":
        diff = holomorphic_unit(curve, geo.period, idx[0])
    else:
        j, s, ell = idx
        if (j, s, ell) == (0, 0, 1):
            raise VariationError("C(1,1,1) is the dependent coordinate")
        if ell >= 2:
            diff = second_kind(curve, geo.period, j, s, ell)
        else:
            diff = third_kind(curve, geo.period, j, s)
    return CoordinateDirection(name, kind, idx, diff)


def all_directions(curve, geo):
    from .moduli import coordinate_names
    return [direction_differential(curve, geo, n)
            for n in coordinate_names(curve.spec, geo.genus)]


# ---------------------------------------------------------------------------
# branch-frame machinery shared by the formulas
# ---------------------------------------------------------------------------

class BranchData:
    """Per-branch-point circle data: frame, direction series, jet scalars."""

    def __init__(self, geo, eval_scale=0.6, k_eval=128):
        self.geo = geo
        self.curve = geo.curve
        self.frames = [geo.frames.frame(i)
                       for i in range(len(self.curve.branch_points))]
        self.circles = [geo.frames.eval_circle(fr, scale=eval_scale, k=k_eval)
                        for fr in self.frames]
        self.jets = [geo.frames.y_jet_values(fr) for fr in self.frames]
        self._breg_hat = None
        self._cross = None

    # h / d log(v/dx) at branch point i, for a direction differential
    def endpoint_factor(self, i, diff):
        fr, jet = self.frames[i], self.jets[i]
        g0 = self.direction_series(i, diff)[0]
        return g0 * jet["y0"] / jet["yp"]

    def direction_series(self, i, diff):
        """Series of h/d(eta) on branch frame i."""
        fr = self.frames[i]
        vals = diff.fn(fr.x, fr.w) * (2.0 * fr.eta)
        from .differentials import _series_from_samples
        return _series_from_samples(vals, fr.rho)

    def direction_on_circle(self, i, diff):
        c = self.circles[i]
        return diff.fn(c["x"], _w_from_Y(self.curve, c, self.frames[i])) * (2.0 * c["eta"])

    def y_values(self, i):
        """(Y, y, y') on the evaluation circle of frame i."""
        fr, c = self.frames[i], self.circles[i]
        eta = c["eta"]
        y_series = fr.Y_series[1:] / 2.0
        y = nm.polyval(y_series, eta)
        yp = nm.polyval(nm.polyder(y_series), eta)
        return c["Y"], y, yp

    def residue(self, i, samples):
        return residue_from_samples(samples, self.circles[i]["eta"])

    def oh2_circle(self, i, k=128):
        """Extraction circle for kernels divided by dy: shrunk below the
        nearest zero of y'(eta), which is a kernel pole but not a surface
        singularity (so no clearance margin excludes it)."""
        if not hasattr(self, "_oh2"):
            self._oh2 = {}
        if i not in self._oh2:
            fr = self.frames[i]
            y_series = fr.Y_series[1:] / 2.0
            dy = nm.polytrim(nm.polyder(y_series))
            r_guard = np.inf
            if len(dy) > 1:
                roots = np.roots(dy[::-1])
                inside = np.abs(roots[np.abs(roots) < 0.9 * fr.rho])
                if len(inside):
                    r_guard = float(np.min(inside))
            rho = min(0.6 * fr.rho, 0.45 * r_guard)
            eta = rho * np.exp(2j * np.pi * np.arange(k) / k)
            g = len(fr.g_series)
            G = np.stack([nm.polyval(fr.g_series[a], eta) for a in range(g)], axis=1)
            yp = nm.polyval(nm.polyder(y_series), eta)
            self._oh2[i] = {"eta": eta, "G": G, "yp": yp}
        return self._oh2[i]

    def direction_on(self, i, diff, eta):
        """Direction series evaluated at arbitrary frame parameters."""
        ser = self.direction_series(i, diff)
        return nm.polyval(ser, eta)

    # -- Bergman data ---------------------------------------------------------

    def breg_hat(self, i):
        """B_reg in the double-cover parameter at branch point i."""
        if self._breg_hat is None:
            self._breg_hat = {}
        if i not in self._breg_hat:
            fr, c = self.frames[i], self.circles[i]
            eta = c["eta"]
            g = self.geo.genus
            A_plus = c["A"]
            A_minus = np.stack([fr.abel_anchor[a] + nm.polyval(fr.abel_series[a], -eta)
                                for a in range(g)], axis=1)
            G_plus = c["G"]
            G_minus = np.stack([nm.polyval(fr.g_series[a], -eta)
                                for a in range(g)], axis=1)
            b = self.geo.kernels.bhat_batch(A_plus, G_plus, A_minus, G_minus)
            f = b - 1.0 / (2.0 * eta) ** 2
            self._breg_hat[i] = complex(np.mean(f))
        return self._breg_hat[i]

    def cross_bhat(self, i, j):
        """B(x_i, x_j) relative to the two double-cover parameters."""
        if self._cross is None:
            self._cross = {}
        key = (min(i, j), max(i, j))
        if key not in self._cross:
            ci, cj = self.circles[key[0]], self.circles[key[1]]
            b = self.geo.kernels.bhat_batch(ci["A"], ci["G"], cj["A"], cj["G"])
            self._cross[key] = complex(np.mean(b))
        return self._cross[key]

    def sb_hat_on_circle(self, i, k_sub=64, k_in=16):
        """Bergman projective connection in the frame parameter at a
        subsample of the evaluation circle of frame i."""
        fr, c = self.frames[i], self.circles[i]
        step = max(1, len(c["eta"]) // k_sub)
        eta = c["eta"][::step]
        g = self.geo.genus
        rho_in = 0.25 * float(np.abs(eta[0]))
        zeta = rho_in * np.exp(2j * np.pi * np.arange(k_in) / k_in)
        base = eta[:, None] + zeta[None, :]
        A1 = np.stack([fr.abel_anchor[a] + nm.polyval(fr.abel_series[a], eta)
                       for a in range(g)], axis=1)
        G1 = np.stack([nm.polyval(fr.g_series[a], eta) for a in range(g)], axis=1)
        flat = base.ravel()
        A2 = np.stack([fr.abel_anchor[a] + nm.polyval(fr.abel_series[a], flat)
                       for a in range(g)], axis=1)
        G2 = np.stack([nm.polyval(fr.g_series[a], flat) for a in range(g)], axis=1)
        n, k = len(eta), k_in
        b = self.geo.kernels.bhat_batch(np.repeat(A1, k, axis=0),
                                        np.repeat(G1, k, axis=0), A2, G2)
        f = b.reshape(n, k) - 1.0 / zeta[None, :] ** 2
        sb = 6.0 * np.mean(f, axis=1)
        return eta, sb

    def sv_hat(self, i, eta):
        """Schwarzian of the flat coordinate in the frame parameter."""
        fr = self.frames[i]
        Y = fr.Y_series
        Yp = nm.polyder(Y)
        Ypp = nm.polyder(Yp)
        vy = nm.polyval(Y, eta)
        vp = nm.polyval(Yp, eta)
        vpp = nm.polyval(Ypp, eta)
        return vpp / vy - 1.5 * (vp / vy) ** 2

    def breg_over_v_residue(self, i):
        """res at branch point i of B_reg / v (third-order pole)."""
        eta, sb = self.sb_hat_on_circle(i)
        sv = self.sv_hat(i, eta)
        fr = self.frames[i]
        Y = nm.polyval(fr.Y_series, eta)
        f = (sb - sv) / (6.0 * Y)
        return residue_from_samples(f, eta)


def _w_from_Y(curve, circle, frame):
    """w on the evaluation circle, reconstructed from the frame series."""
    y = circle["Y"] / (2.0 * circle["eta"]) if frame.kind == "branch" else circle["Y"]
    return 2.0 * curve.Dval(circle["x"]) * y + nm.polyval(curve.N1, circle["x"])


# ---------------------------------------------------------------------------
# endpoint corrections (branch contributions to d/dz of relative periods)
# ---------------------------------------------------------------------------

def endpoint_correction(curve, geo, direction, zero_index, branch_data=None):
    """-(h / d log(v/dx))(x_i): the extra term in the derivative of
    int_{x_r}^{x_i} v when x_i is a branch point; 0 at simple zeros."""
    if not curve.zeros[zero_index].is_branch:
        return 0.0 + 0.0j
    bd = branch_data or BranchData(geo)
    return -bd.endpoint_factor(zero_index, direction.differential)


# ---------------------------------------------------------------------------
# first variation of the period matrix (both forms)
# ---------------------------------------------------------------------------

def vary_period_matrix(curve, geo, direction, branch_data=None, check_tol=FORM_AGREE_TOL):
    """d(Omega)/d(coordinate) by the branch-point residue formula.

    Computes both the endpoint-factor form and the single-residue form and
    requires their agreement before returning.
    """
    bd = branch_data or BranchData(geo)
    g = geo.genus
    out1 = np.zeros((g, g), dtype=complex)
    out2 = np.zeros((g, g), dtype=complex)
    for i in range(len(curve.branch_points)):
        c = bd.circles[i]
        eta = c["eta"]
        ci = bd.endpoint_factor(i, direction.differential)
        oh2 = bd.oh2_circle(i)
        eta2 = oh2["eta"]
        Gd2 = bd.direction_on(i, direction.differential, eta2)
        for a in range(g):
            for b in range(a, g):
                k1 = c["G"][:, a] * c["G"][:, b] / c["Y"]
                r1 = residue_from_samples(k1, eta)
                out1[a, b] += ci * r1
                k2 = oh2["G"][:, a] * oh2["G"][:, b] * Gd2 / (2.0 * eta2 * oh2["yp"])
                r2 = residue_from_samples(k2, eta2)
                out2[a, b] += r2
    out1 = _symmetrize_fill(out1)
    out2 = _symmetrize_fill(out2)
    out1 *= -TWO_PI_I
    out2 *= -TWO_PI_I
    scale = max(1.0, float(np.max(np.abs(out2))))
    agree = float(np.max(np.abs(out1 - out2)))
    if agree > check_tol * scale:
        raise VariationError(
            f"period-variation forms disagree by {agree:.3e} (numerical health)")
    return out2


def _symmetrize_fill(m):
    g = m.shape[0]
    for a in range(g):
        for b in range(a):
            m[a, b] = m[b, a]
    return m


# ---------------------------------------------------------------------------
# kernel variations (normalized differentials, bidifferential, prime form)
# ---------------------------------------------------------------------------

def _point_data(geo, p):
    A = geo.abel.at(p.x, p.w)
    V = geo.period.V(np.array([p.x]), np.array([p.w]))[0]
    return A, V


def vary_valpha(curve, geo, direction, point, branch_data=None):
    """d(v_alpha(x))/d(coordinate) relative to dx at the point; vector over alpha."""
    bd = branch_data or BranchData(geo)
    g = geo.genus
    A_x, V_x = _point_data(geo, point)
    out = np.zeros(g, dtype=complex)
    for i in range(len(curve.branch_points)):
        c = bd.circles[i]
        eta = c["eta"]
        n = len(eta)
        ci = bd.endpoint_factor(i, direction.differential)
        # B(t, x) with t on the frame circle
        bt = geo.kernels.bhat_batch(c["A"], c["G"],
                                    np.broadcast_to(A_x, (n, g)).copy(),
                                    np.broadcast_to(V_x, (n, g)).copy())
        for a in range(g):
            k = c["G"][:, a] * bt / c["Y"]
            out[a] += ci * residue_from_samples(k, eta)
    return -out


def vary_bidifferential(curve, geo, direction, p1, p2, branch_data=None):
    """d(B(x,y))/d(coordinate) relative to dx dy at the fixed pair."""
    bd = branch_data or BranchData(geo)
    g = geo.genus
    A1, V1 = _point_data(geo, p1)
    A2, V2 = _point_data(geo, p2)
    total = 0.0 + 0.0j
    for i in range(len(curve.branch_points)):
        c = bd.circles[i]
        eta = c["eta"]
        n = len(eta)
        ci = bd.endpoint_factor(i, direction.differential)
        bxt = geo.kernels.bhat_batch(np.broadcast_to(A1, (n, g)).copy(),
                                     np.broadcast_to(V1, (n, g)).copy(),
                                     c["A"], c["G"])
        bty = geo.kernels.bhat_batch(c["A"], c["G"],
                                     np.broadcast_to(A2, (n, g)).copy(),
                                     np.broadcast_to(V2, (n, g)).copy())
        k = bxt * bty / c["Y"]
        total += ci * residue_from_samples(k, eta)
    return -total


def vary_log_prime_form(curve, geo, direction, p1, p2, branch_data=None):
    """d(ln E(x,y))/d(coordinate) at the fixed pair (h-independent kernel)."""
    bd = branch_data or BranchData(geo)
    g = geo.genus
    A1, _ = _point_data(geo, p1)
    A2, _ = _point_data(geo, p2)
    th = geo.kernels.theta
    odd = geo.kernels.odd
    total = 0.0 + 0.0j
    for i in range(len(curve.branch_points)):
        c = bd.circles[i]
        eta = c["eta"]
        ci = bd.endpoint_factor(i, direction.differential)
        e1 = th.eval(c["A"] - A1[None, :], odd, derivs=1)
        e2 = th.eval(c["A"] - A2[None, :], odd, derivs=1)
        d1 = e1["grad"] / e1["val"][:, None]
        d2 = e2["grad"] / e2["val"][:, None]
        dln = np.einsum("ni,ni->n", d1 - d2, c["G"])
        k = 0.5 * dln ** 2 / c["Y"]
        total += ci * residue_from_samples(k, eta)
    # sign: differentiating this formula in x and y must reproduce the
    # bidifferential variation through B = d_x d_y ln E, which forces the
    # opposite overall sign to the first-kind/bidifferential pattern; the
    # finite-difference oracle confirms it.
    return total


def vary_kernel(curve, geo, target, direction, points, branch_data=None):
    """Dispatch for the three kernel-variation formulas."""
    if target == "valpha":
        return vary_valpha(curve, geo, direction, points[0], branch_data)
    if target == "B":
        return vary_bidifferential(curve, geo, direction, points[0], points[1],
                                   branch_data)
    if target == "lnE":
        return vary_log_prime_form(curve, geo, direction, points[0], points[1],
                                   branch_data)
    raise VariationError(f"unknown kernel target {target!r}")


# ---------------------------------------------------------------------------
# Bergman tau gradient
# ---------------------------------------------------------------------------

def _zero_frame_residues(geo, gamma):
    """res at every zero of v of v_gamma(x) / int_{x_i}^x v."""
    curve = geo.curve
    out = []
    for idx in range(len(curve.zeros)):
        fr = geo.frames.frame(idx)
        eta = geo.frames.eval_circle(fr, scale=0.6, k=128)["eta"]
        gser = fr.g_series[gamma]
        intY = nm.series_integrate(fr.Y_series)
        num = nm.polyval(gser, eta)
        den = nm.polyval(intY, eta)
        out.append(residue_from_samples(num / den, eta))
    return out


def is_residue_free(curve, tol=1e-10):
    from .moduli import PoleCircles
    if any(p.k < 2 for p in curve.spec.poles):
        return False
    circles = PoleCircles(curve)
    total = 0.0
    for j, p in enumerate(curve.spec.poles):
        for s in range(curve.n):
            ring, w_ring = circles.ring(j, s)
            vals = curve.phi(ring, w_ring)
            total = max(total, abs(circles.laurent(j, s, vals, [1])[0]))
    return total < tol


def tau_gradient(curve, geo, gamma, branch_data=None, enforce_residue_free=True):
    """d(ln tau)/dA_gamma: branch residues of B_reg/v plus the all-zeros sum."""
    if enforce_residue_free and not is_residue_free(curve):
        raise VariationError("tau gradient requires a residue-free instance "
                             "with all pole orders >= 2")
    bd = branch_data or BranchData(geo)
    term1 = 0.0 + 0.0j
    vg = holomorphic_unit(curve, geo.period, gamma)
    for i in range(len(curve.branch_points)):
        ci = bd.endpoint_factor(i, vg)
        term1 += ci * bd.breg_over_v_residue(i)
    term2 = sum(_zero_frame_residues(geo, gamma))
    return -TWO_PI_I * term1 - (1j * math.pi / 8.0) * term2


def tau_gradient_oracle(curve, geo, gamma, branch_data=None):
    """Chain-rule evaluation of d(ln tau)/dA_gamma through the period
    coordinates: dual-contour integrals of B_reg/v paired with the
    derivatives of the period coordinates, with small-circle corrections
    restoring duality against the reference paths."""
    from .differentials import ContourField
    bd = branch_data or BranchData(geo)
    g = geo.genus
    basis = geo.basis
    omega = geo.period.omega
    vg = holomorphic_unit(curve, geo.period, gamma)

    # residues of B_reg/v at every zero (branch: jets; simple zeros: frames)
    res_at = {}
    for i in range(len(curve.branch_points)):
        res_at[i] = bd.breg_over_v_residue(i)
    for idx in range(len(curve.branch_points), len(curve.zeros)):
        res_at[idx] = _breg_over_v_residue_zero(geo, idx)

    paths, targets = sf.zero_paths(curve)
    # d P_{l_i} / d A_gamma: path integral of v_gamma plus branch endpoint term
    dP = []
    for path, idx in zip(paths, targets):
        val = curve.integrate(vg.fn, path).value
        if curve.zeros[idx].is_branch:
            val -= bd.endpoint_factor(idx, vg)
        dP.append(val)

    # kernel integrals over the a/b representatives
    def breg_kernel(pan):
        sb = _sb_batch_nodes(geo, pan)
        sv = _sv_batch_nodes(geo, pan)
        y = curve.phi(pan["z"], pan["w"])
        return (sb - sv) / (6.0 * y)

    int_a = []
    int_b = []
    for d in range(g):
        cf_a = ContourField(curve, geo.period, geo.abel, basis.a_cycles[d])
        cf_b = ContourField(curve, geo.period, geo.abel, basis.b_cycles[d])
        int_a.append(cf_a.integrate_kernel(breg_kernel))
        int_b.append(cf_b.integrate_kernel(breg_kernel))

    total = 0.0 + 0.0j
    for d in range(g):
        # duality corrections from crossings with the reference paths
        corr_a = 0.0 + 0.0j
        corr_b = 0.0 + 0.0j
        for path, idx in zip(paths, targets):
            nb = sf.intersection_number(curve, basis.b_cycles[d], path)
            na = sf.intersection_number(curve, basis.a_cycles[d], path)
            if nb:
                corr_a += nb * TWO_PI_I * res_at[idx]
            if na:
                corr_b -= na * TWO_PI_I * res_at[idx]
        dual_a = -int_b[d] + corr_a    # dual of a_d is -b_d (+ corrections)
        dual_b = int_a[d] + corr_b     # dual of b_d is +a_d (+ corrections)
        total += (1.0 if d == gamma else 0.0) * dual_a + omega[gamma, d] * dual_b
    for val, (path, idx) in zip(dP, zip(paths, targets)):
        total += val * TWO_PI_I * res_at[idx]
    return total


def _breg_over_v_residue_zero(geo, zero_index):
    """res of B_reg/v at a simple non-branch zero, from its local frame."""
    fr = geo.frames.frame(zero_index)
    circle = geo.frames.eval_circle(fr, scale=0.6, k=64)
    eta = circle["eta"]
    g = geo.genus
    k_in = 16
    rho_in = 0.25 * float(np.abs(eta[0]))
    zeta = rho_in * np.exp(2j * np.pi * np.arange(k_in) / k_in)
    flat = (eta[:, None] + zeta[None, :]).ravel()
    A1 = circle["A"]
    G1 = circle["G"]
    A2 = np.stack([fr.abel_anchor[a] + nm.polyval(fr.abel_series[a], flat)
                   for a in range(g)], axis=1)
    G2 = np.stack([nm.polyval(fr.g_series[a], flat) for a in range(g)], axis=1)
    b = geo.kernels.bhat_batch(np.repeat(A1, k_in, axis=0),
                               np.repeat(G1, k_in, axis=0), A2, G2)
    f = b.reshape(len(eta), k_in) - 1.0 / zeta[None, :] ** 2
    sb = 6.0 * np.mean(f, axis=1)
    Yp = nm.polyder(fr.Y_series)
    Ypp = nm.polyder(Yp)
    vy = nm.polyval(fr.Y_series, eta)
    sv = nm.polyval(Ypp, eta) / vy - 1.5 * (nm.polyval(Yp, eta) / vy) ** 2
    return residue_from_samples((sb - sv) / (6.0 * vy), eta)


def _sb_batch_nodes(geo, pan, k_in=16):
    """S_B at contour-panel nodes (base coordinate), batched inner jets."""
    curve = geo.curve
    z, w, V, A = pan["z"], pan["w"], pan["V"], pan["A"]
    n = len(z)
    g = geo.genus
    dist = np.min(np.abs(z[:, None] - curve.singular_points[None, :]), axis=1)
    rho = 0.3 * dist
    zeta = np.exp(2j * np.pi * np.arange(k_in) / k_in)
    xi = (z[:, None] + rho[:, None] * zeta[None, :]).ravel()
    s = curve.sqrtP(xi)
    wref = np.repeat(w, k_in)
    wi = np.where(np.abs(s - wref) <= np.abs(s + wref), s, -s)
    Vi = geo.period.V(xi, wi).reshape(n, k_in, g)
    # local Abel offsets by integrating the inner jet of V
    f = np.fft.fft(Vi, axis=1) / k_in
    m_max = min(k_in - 2, 10)
    A_off = np.zeros((n, k_in, g), dtype=complex)
    zz = rho[:, None] * zeta[None, :]
    for mdeg in range(m_max + 1):
        cm = f[:, mdeg, :] / rho[:, None] ** mdeg
        A_off += cm[:, None, :] / (mdeg + 1) * (zz ** (mdeg + 1))[:, :, None]
    A1 = np.repeat(A, k_in, axis=0)
    V1 = np.repeat(V, k_in, axis=0)
    A2 = (A[:, None, :] + A_off).reshape(n * k_in, g)
    b = geo.kernels.bhat_batch(A1, V1, A2, Vi.reshape(n * k_in, g))
    fvals = b.reshape(n, k_in) - 1.0 / zz ** 2
    return 6.0 * np.mean(fvals, axis=1)


def _sv_batch_nodes(geo, pan, k_in=16):
    """Schwarzian of the flat coordinate at contour-panel nodes."""
    curve = geo.curve
    z, w = pan["z"], pan["w"]
    n = len(z)
    dist = np.min(np.abs(z[:, None] - curve.singular_points[None, :]), axis=1)
    rho = 0.3 * dist
    zeta = np.exp(2j * np.pi * np.arange(k_in) / k_in)
    xi = (z[:, None] + rho[:, None] * zeta[None, :]).ravel()
    s = curve.sqrtP(xi)
    wref = np.repeat(w, k_in)
    wi = np.where(np.abs(s - wref) <= np.abs(s + wref), s, -s)
    y = curve.phi(xi, wi).reshape(n, k_in)
    f = np.fft.fft(y, axis=1) / k_in
    y0 = f[:, 0]
    y1 = f[:, 1] / rho
    y2 = 2.0 * f[:, 2] / rho ** 2
    return y2 / y0 - 1.5 * (y1 / y0) ** 2


# ---------------------------------------------------------------------------
# multi-differential hierarchy
# ---------------------------------------------------------------------------

def _pair_b(geo, d1, d2):
    return complex(geo.kernels.bhat_batch(d1[0][None, :], d1[1][None, :],
                                          d2[0][None, :], d2[1][None, :])[0])


def _check_distinct(points):
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if (abs(points[i].x - points[j].x) < 1e-9
                    and abs(points[i].w - points[j].w) < 1e-9):
                raise VariationError("multi-differential arguments must be "
                                     "pairwise distinct")


def _point_tuple(geo, p):
    A, V = _point_data(geo, p)
    vval = geo.curve.phi(np.array([p.x]), np.array([p.w]))[0]
    return (A, V, complex(vval))


def q_multidiff(curve, geo, points):
    """Fully symmetric cycle sum; Q_2 = B^2/(v v) (no prefactor 2)."""
    _check_distinct(points)
    n = len(points)
    data = [_point_tuple(geo, p) for p in points]
    bmat = _b_matrix(geo, data)
    vs = np.array([d[2] for d in data])
    if n == 2:
        return bmat[0, 1] ** 2 / (vs[0] * vs[1])
    total = 0.0 + 0.0j
    seen = set()
    for perm in permutations(range(1, n)):
        cyc = (0,) + perm
        canon = min(cyc[1:], key=lambda *_: 0) if False else None
        rev = (0,) + tuple(reversed(perm))
        if rev in seen:
            continue
        seen.add(cyc)
        prod = 1.0 + 0.0j
        for a in range(n):
            prod *= bmat[cyc[a], cyc[(a + 1) % n]]
        total += prod
    return 2.0 * total / np.prod(vs)


def r_multidiff(curve, geo, points):
    """Path sum from the first to the last argument through the middles."""
    _check_distinct(points)
    n = len(points)
    data = [_point_tuple(geo, p) for p in points]
    bmat = _b_matrix(geo, data)
    vs = np.array([d[2] for d in data])
    if n == 2:
        return bmat[0, 1]
    total = 0.0 + 0.0j
    for perm in permutations(range(1, n - 1)):
        order = (0,) + perm + (n - 1,)
        prod = 1.0 + 0.0j
        for a in range(n - 1):
            prod *= bmat[order[a], order[a + 1]]
        total += prod
    middles = np.prod(vs[1:n - 1]) if n > 2 else 1.0
    return total / middles


def r_ab(curve, geo, alpha, beta, points):
    """v_alpha(z_1) v_beta(z_n) times the path sum over all v's."""
    _check_distinct(points)
    n = len(points)
    data = [_point_tuple(geo, p) for p in points]
    bmat = _b_matrix(geo, data)
    vs = np.array([d[2] for d in data])
    total = 0.0 + 0.0j
    for perm in permutations(range(1, n - 1)):
        order = (0,) + perm + (n - 1,)
        prod = 1.0 + 0.0j
        for a in range(n - 1):
            prod *= bmat[order[a], order[a + 1]]
        total += prod
    va = data[0][1][alpha]
    vb = data[-1][1][beta]
    return va * vb * total / np.prod(vs)


def _b_matrix(geo, data):
    n = len(data)
    out = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = _pair_b(geo, data[i], data[j])
    return out


def hierarchy_variation(curve, geo, level, gamma, points, variant="Q",
                        branch_data=None):
    """dQ_n/dA_gamma (or the R analog) with evaluation points pinned in the
    base coordinate: branch-residue sum of the next multi-differential plus
    the argument-transport terms."""
    n = len(points)
    if n != level:
        raise VariationError("level must match the number of points")
    bd = branch_data or BranchData(geo)
    g = geo.genus
    data = [_point_tuple(geo, p) for p in points]
    bmat = _b_matrix(geo, data)
    vs = np.array([d[2] for d in data])
    vg = holomorphic_unit(curve, geo.period, gamma)
    vgam = np.array([vg.fn(np.array([p.x]), np.array([p.w]))[0] for p in points])

    residue_sum = 0.0 + 0.0j
    for i in range(len(curve.branch_points)):
        c = bd.circles[i]
        eta = c["eta"]
        npts = len(eta)
        ci = bd.endpoint_factor(i, vg)
        # B(z_k, t) for every argument against the circle
        bt = np.stack([geo.kernels.bhat_batch(
            np.broadcast_to(data[k][0], (npts, g)).copy(),
            np.broadcast_to(data[k][1], (npts, g)).copy(),
            c["A"], c["G"]) for k in range(n)])
        if variant == "Q":
            kern = _q_next_samples(bmat, vs, bt, c["Y"], n)
        else:
            kern = _r_next_samples(bmat, vs, bt, c["Y"], n)
        residue_sum += ci * residue_from_samples(kern, eta)

    if variant == "Q":
        base = q_multidiff(curve, geo, points)
        transport = base * np.sum(vgam / vs)
    else:
        base = r_multidiff(curve, geo, points)
        transport = base * np.sum(vgam[1:n - 1] / vs[1:n - 1]) if n > 2 else 0.0
    return -residue_sum - transport


def _q_next_samples(bmat, vs, bt, Y, n):
    """Q_{n+1}(z_1..z_n, t) sampled over the circle parameter of t.

    The (n+1)-cycles with t as a distinguished vertex are the orderings of
    the z's up to reversal: t -> z_{p0} -> ... -> z_{p(n-1)} -> t.
    """
    npts = bt.shape[1]
    total = np.zeros(npts, dtype=complex)
    seen = set()
    for perm in permutations(range(n)):
        if tuple(reversed(perm)) in seen:
            continue
        seen.add(perm)
        prod = np.ones(npts, dtype=complex)
        for a in range(n - 1):
            prod = prod * bmat[perm[a], perm[a + 1]]
        prod = prod * bt[perm[n - 1]] * bt[perm[0]]
        total += prod
    return 2.0 * total / (np.prod(vs) * Y)


def _r_next_samples(bmat, vs, bt, Y, n):
    """Sum over insertion slots of R_{n+1}(z_1,..,t at slot,..,z_n)."""
    npts = bt.shape[1]
    total = np.zeros(npts, dtype=complex)
    for perm in permutations(range(1, n - 1)):
        order = (0,) + perm + (n - 1,)
        # base product without t
        for slot in range(n - 1):
            prod = np.ones(npts, dtype=complex)
            for a in range(n - 1):
                if a == slot:
                    prod = prod * bt[order[a]] * bt[order[a + 1]]
                else:
                    prod = prod * bmat[order[a], order[a + 1]]
            total += prod
    middles = np.prod(vs[1:n - 1]) if n > 2 else 1.0
    return total / (middles * Y)


# ---------------------------------------------------------------------------
# second derivatives of the period matrix
# ---------------------------------------------------------------------------

def period_hessian(curve, geo, a, b, cidx, d, branch_data=None):
    """Second derivative of Omega_{ab} along A_{cidx}, A_d from branch jets."""
    bd = branch_data or BranchData(geo)
    nbr = len(curve.branch_points)
    jets = bd.jets
    g0 = [jets[i]["g0"] for i in range(nbr)]
    gpp = [jets[i]["gpp"] for i in range(nbr)]
    yp = [jets[i]["yp"] for i in range(nbr)]
    yppp = [jets[i]["yppp"] for i in range(nbr)]

    cyc3 = [(a, b, cidx), (b, cidx, a), (cidx, a, b)]
    off = 0.0 + 0.0j
    for i in range(nbr):
        for j in range(nbr):
            if i == j:
                continue
            bij = bd.cross_bhat(i, j)
            s = 0.0 + 0.0j
            for (p, q, r) in cyc3:
                s += g0[i][d] * g0[i][r] * g0[j][p] * g0[j][q]
            off += bij * s / (yp[i] * yp[j])
    off *= 0.25

    diag = 0.0 + 0.0j
    cyc4 = [(a, b, cidx, d), (b, cidx, d, a), (cidx, d, a, b), (d, a, b, cidx)]
    for i in range(nbr):
        breg = bd.breg_hat(i)
        quart = g0[i][a] * g0[i][b] * g0[i][cidx] * g0[i][d]
        diag += (6.0 * breg / yp[i] ** 2 - yppp[i] / yp[i] ** 3) * quart
        s4 = 0.0 + 0.0j
        for (p, q, r, t) in cyc4:
            s4 += gpp[i][p] * g0[i][q] * g0[i][r] * g0[i][t]
        diag += s4 / yp[i] ** 2
    diag *= 0.125

    return TWO_PI_I * (off + diag)
