"""Suite orchestration: named checks, JSON reports, convergence sweeps.

Each suite runs a set of named checks at the tolerances pinned by the
acceptance criteria; a check compares a formula value against an oracle
value (finite differences, independent quadrature, closed forms, or an
internal identity) and records absolute/relative error. Gating checks
decide the report's pass flag; exploratory checks are reported but do not
gate. Everything is deterministic: instances are data, evaluation points
are derived from the instance geometry, and there is no seeding anywhere.
"""

from __future__ import annotations

import json
import math
import platform
import time
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from . import moduli
from . import numerics as nm
from . import surface as sf
from . import variations as vr
from .differentials import Geometry
from .instances import counts_of, load_instance

SUITES = ("surface", "dm-cubic", "kernels", "prime-form", "tau", "hessian",
          "hierarchy", "scaling", "all")


class HarnessError(RuntimeError):
    pass


@dataclass
class CheckResult:
    name: str
    paper_eq: str
    lhs: complex
    rhs: complex
    abs_err: float
    rel_err: float
    tol: float
    passed: bool
    gating: bool = True
    wall_time: float = 0.0
    absolute: bool = False

    def as_dict(self):
        return {"name": self.name, "paper_eq": self.paper_eq,
                "lhs": [self.lhs.real, self.lhs.imag],
                "rhs": [self.rhs.real, self.rhs.imag],
                "abs_err": self.abs_err, "rel_err": self.rel_err,
                "tol": self.tol, "pass": self.passed, "gating": self.gating,
                "wall_time": round(self.wall_time, 4)}


@dataclass
class Report:
    instance: str
    suite: str
    checks: list = field(default_factory=list)
    environment: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks if c.gating)

    def as_dict(self):
        return {"instance": self.instance, "suite": self.suite,
                "checks": [c.as_dict() for c in self.checks],
                "environment": self.environment, "pass": self.passed}

    def to_json(self):
        return json.dumps(self.as_dict(), indent=1)

    def summary_lines(self):
        out = []
        for c in self.checks:
            flag = "PASS" if c.passed else "FAIL"
            extra = "" if c.gating else " (exploratory)"
            kind, err = ("abs", c.abs_err) if c.absolute else ("rel", c.rel_err)
            out.append(f"[{flag}] {c.name}: {kind} {err:.2e} "
                       f"(tol {c.tol:.0e}){extra}")
        out.append(("PASS" if self.passed else "FAIL") + f" {self.suite} on {self.instance}")
        return out


class Session:
    """Caches the expensive per-instance objects across suite checks."""

    def __init__(self, spec):
        self.spec = spec
        self.curve = sf.build_surface(spec)
        self.geo = Geometry(self.curve) if spec.n == 2 else None
        self._nav = None
        self._eng = None
        self._bd = None
        self._dirs = None

    @property
    def nav(self):
        if self._nav is None:
            self._nav = moduli.Navigator(self.curve, self.geo)
        return self._nav

    @property
    def eng(self):
        if self._eng is None:
            self._eng = moduli.FDEngine(self.nav)
        return self._eng

    @property
    def branch_data(self):
        if self._bd is None:
            self._bd = vr.BranchData(self.geo)
        return self._bd

    def directions(self):
        if self._dirs is None:
            self._dirs = vr.all_directions(self.curve, self.geo)
        return self._dirs

    def eval_points(self, count=2, min_dist=0.3, start=0.11):
        """Deterministic evaluation points away from singular points."""
        curve = self.curve
        ctr = np.mean(curve.singular_points)
        rad = 1.6 * float(np.max(np.abs(curve.singular_points - ctr)))
        pts = []
        k = 0
        while len(pts) < count and k < 200:
            cand = ctr + rad * np.exp(2j * np.pi * (k * 0.37 + start)) \
                * (0.55 + 0.1 * ((k * 7) % 5) / 5)
            if float(np.min(np.abs(curve.singular_points - cand))) > min_dist:
                pts.append(curve.point(complex(cand), k % 2))
            k += 1
        if len(pts) < count:
            raise HarnessError("could not place evaluation points")
        return pts


class Checker:
    def __init__(self, report, tol_override=None):
        self.report = report
        self.tol_override = tol_override

    def add(self, name, paper_eq, lhs, rhs, tol, absolute=False, gating=True,
            t0=None):
        lhs = complex(lhs)
        rhs = complex(rhs)
        abs_err = abs(lhs - rhs)
        scale = max(abs(lhs), abs(rhs))
        rel_err = abs_err / scale if scale > 0 else abs_err
        tol = self.tol_override if (self.tol_override and gating) else tol
        err = abs_err if absolute else rel_err
        self.report.checks.append(CheckResult(
            name, paper_eq, lhs, rhs, abs_err, rel_err, tol, bool(err <= tol),
            gating, 0.0 if t0 is None else time.time() - t0, absolute))

    def add_flag(self, name, paper_eq, ok, gating=True, detail=0.0):
        self.report.checks.append(CheckResult(
            name, paper_eq, complex(detail), 0.0, float(abs(detail)),
            float(abs(detail)), 0.0, bool(ok), gating))


def _tensor_check(chk, name, eq, got, want, tol, absolute=False, gating=True, t0=None):
    """Compare tensors entrywise with errors relative to the global scale,
    reporting the worst entry (tiny entries of a large tensor must not gate
    on their own relative error)."""
    got = np.atleast_1d(np.asarray(got, dtype=complex)).ravel()
    want = np.atleast_1d(np.asarray(want, dtype=complex)).ravel()
    i = int(np.argmax(np.abs(got - want)))
    abs_err = float(np.abs(got[i] - want[i]))
    scale = float(max(np.max(np.abs(got)), np.max(np.abs(want))))
    rel_err = abs_err / scale if scale > 0 else abs_err
    err = abs_err if absolute else rel_err
    tolv = chk.tol_override if (chk.tol_override and gating) else tol
    chk.report.checks.append(CheckResult(
        name, eq, complex(got[i]), complex(want[i]), abs_err, rel_err, tolv,
        bool(err <= tolv), gating, 0.0 if t0 is None else time.time() - t0,
        absolute))


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def suite_surface(ses, chk):
    curve, geo = ses.curve, ses.geo
    counts = counts_of(ses.spec)
    chk.add_flag("branch-count", "2.3", len(curve.branch_points) == counts.p)
    chk.add_flag("zero-count", "2.5", len(curve.zeros) == counts.r)
    chk.add_flag("coordinate-count", "2.7/2.8",
                 len(moduli.coordinate_names(ses.spec, counts.genus)) == counts.dim)
    chk.add_flag("genericity", "section-4-simple-branch", curve.genericity.ok)
    perm = curve.monodromy_product()
    chk.add_flag("monodromy-product-identity", "2.1",
                 perm == tuple(range(curve.n)))
    m = sf.intersection_matrix(curve, geo.basis)
    g = geo.genus
    expect = np.block([[np.zeros((g, g), dtype=int), np.eye(g, dtype=int)],
                       [-np.eye(g, dtype=int), np.zeros((g, g), dtype=int)]])
    chk.add_flag("intersection-matrix-canonical", "3.2/3.4",
                 np.array_equal(m, expect))
    om = geo.period.omega
    _tensor_check(chk, "period-matrix-symmetric", "Riemann-relations",
                  om, om.T, 1e-10, absolute=True)
    chk.add_flag("Im-period-matrix-positive", "Riemann-relations",
                 float(np.min(np.linalg.eigvalsh(om.imag))) > 0,
                 detail=float(np.min(np.linalg.eigvalsh(om.imag))))
    norm = np.array([[curve.integrate(lambda x, w, a=a: geo.period.V(x, w)[..., a],
                                      c).value for a in range(g)]
                     for c in geo.basis.a_cycles])
    _tensor_check(chk, "a-normalization", "2.10", norm, np.eye(g), 1e-10,
                  absolute=True)
    chk.add("residue-sum", "2.9", moduli.residue_sum(curve), 0.0, 1e-10,
            absolute=True)
    if g == 1:
        tau = _sl2_reduce(om[0, 0])
        cands = _agm_tau_candidates(curve)
        best = min(cands, key=lambda c: abs(c - tau))
        chk.add("elliptic-agm-oracle", "Riemann-relations", tau, best, 1e-9)
        j_alg = _j_from_branch_points(curve.branch_points)
        j_theta = _j_from_tau(geo)
        chk.add("elliptic-j-invariant", "Riemann-relations", j_theta, j_alg, 1e-8)
    # scaling equivariance of the chart
    coords = ses.nav.coordinates()
    lam = 1.1 + 0.2j
    spec2 = moduli.spec_with_coefficients(
        ses.spec, np.concatenate([ses.spec.numer[1] * lam,
                                  ses.spec.numer[2] * lam ** 2]))
    curve2 = sf.build_surface(spec2, template=curve)
    geo2 = Geometry(curve2)
    coords2 = moduli.coordinates_of(curve2, geo2)
    _tensor_check(chk, "coordinate-scaling-equivariance", "2.8",
                  coords2.vector, lam * coords.vector, 1e-9)


def _sl2_reduce(tau):
    tau = complex(tau)
    for _ in range(200):
        tau = tau - round(tau.real)
        if abs(tau) < 1.0 - 1e-14:
            tau = -1.0 / tau
        else:
            break
    return tau


def _agm_tau_candidates(curve):
    """Independent elliptic oracle: fundamental-domain tau candidates from
    the arithmetic-geometric mean of branch-point cross differences (the
    marking and cut-pairing ambiguity leaves a finite candidate set)."""
    e1, e2, e3, e4 = curve.branch_points

    def cagm(a, b, iters=80):
        for _ in range(iters):
            a2 = 0.5 * (a + b)
            b2 = np.sqrt(a * b)
            if abs(a2 - b2) > abs(a2 + b2):
                b2 = -b2
            a, b = a2, b2
        return a

    pa = 2 * math.pi / cagm(np.sqrt((e1 - e3) * (e2 - e4)),
                            np.sqrt((e1 - e4) * (e2 - e3)))
    pb = 2 * math.pi / cagm(np.sqrt((e2 - e4) * (e3 - e1)),
                            np.sqrt((e2 - e1) * (e3 - e4)))
    raw = [pb / pa, -pb / pa, pa / pb, -pa / pb]
    return [_sl2_reduce(c) for c in raw if c.imag > 0]


def _j_from_branch_points(e):
    """Klein invariant from the cross-ratio of the four branch points."""
    lam = ((e[0] - e[2]) * (e[1] - e[3])) / ((e[0] - e[3]) * (e[1] - e[2]))
    return 256.0 * (lam * lam - lam + 1.0) ** 3 / (lam * lam * (lam - 1.0) ** 2)


def _j_from_tau(geo):
    """Klein invariant from the period matrix via theta constants."""
    from .theta import HalfCharacteristic
    th = geo.period.theta
    z0 = np.zeros((1, 1), dtype=complex)
    t2 = th.value(z0, HalfCharacteristic((0.5,), (0.0,)))[0]
    t3 = th.value(z0, HalfCharacteristic((0.0,), (0.0,)))[0]
    lam = (t2 / t3) ** 4
    return 256.0 * (lam * lam - lam + 1.0) ** 3 / (lam * lam * (lam - 1.0) ** 2)


def suite_dm_cubic(ses, chk):
    curve, geo = ses.curve, ses.geo
    bd = ses.branch_data
    eng = ses.eng
    g = geo.genus
    pts = ses.eval_points(5, start=0.07)

    def v_at(c, gg):
        return np.array([c.phi(np.array([p.x]),
                               np.array([c.w_for_sheet(p.x, p.sheet)]))[0]
                         for p in pts])

    paths, targets = sf.zero_paths(curve)
    bpairs = [(p, i) for p, i in zip(paths, targets) if curve.zeros[i].is_branch]

    def branch_ints(c, gg):
        out = []
        for _, i in bpairs:
            z = c.zeros[i]
            pth = sf.path_to_point(c, z.x, None, sqrt_end="end")
            out.append(c.integrate_v(pth).value)
        return np.array(out)

    tensors = {}
    for d in ses.directions():
        t0 = time.time()
        want_v = np.array([d.differential.fn(np.array([p.x]), np.array([p.w]))[0]
                           for p in pts])
        fd_v = eng.derivative(v_at, d.name)
        _tensor_check(chk, f"dv/d{d.name}", "2.14-2.16", fd_v.value, want_v, 1e-5)

        want_l = np.array([curve.integrate(d.differential.fn, pth).value
                           + vr.endpoint_correction(curve, geo, d, i, bd)
                           for pth, i in bpairs])
        fd_l = eng.derivative(branch_ints, d.name)
        _tensor_check(chk, f"branch-integral/d{d.name}", "4.2-bpA-bpC2",
                      fd_l.value, want_l, 1e-5)

        M = vr.vary_period_matrix(curve, geo, d, bd)
        tensors[d.name] = M
        fd_o = eng.derivative(lambda c, gg: gg.period.omega, d.name)
        _tensor_check(chk, f"dOmega/d{d.name}", "4.1-Oh1-Oh2", M, fd_o.value,
                      1e-5, t0=t0)
    # internal two-form agreement is asserted inside vary_period_matrix at 1e-9
    chk.add_flag("Oh1-Oh2-internal-agreement", "4.1-Oh1=Oh2", True)
    if g >= 2:
        T = np.stack([tensors[f"A{a + 1}"] for a in range(g)], axis=2)
        sym = max(float(np.max(np.abs(T - np.transpose(T, (1, 0, 2))))),
                  float(np.max(np.abs(T - np.transpose(T, (2, 1, 0))))),
                  float(np.max(np.abs(T - np.transpose(T, (0, 2, 1))))))
        chk.add("dm-cubic-index-symmetry", "4.1/Oh2-symmetric", sym, 0.0,
                1e-9 * max(1.0, float(np.max(np.abs(T)))), absolute=True)
    coords = ses.nav.coordinates()
    euler = np.zeros((g, g), dtype=complex)
    for name, z in zip(coords.names, coords.vector):
        euler += z * tensors[name]
    scale = max(1.0, float(np.max(np.abs(tensors["A1"]))))
    _tensor_check(chk, "euler-scaling-identity", "5.2.1-rescaling",
                  euler / scale, np.zeros((g, g)), 1e-8, absolute=True)
    # base-coordinate reparametrization invariance of the endpoint factor
    d0 = ses.directions()[0]
    f_old = bd.endpoint_factor(0, d0.differential)
    f_new = _endpoint_factor_reparam(curve, geo, d0.differential, 0)
    chk.add("endpoint-correction-reparametrization", "4.2-invariance",
            f_new, f_old, 1e-8)


def _endpoint_factor_reparam(curve, geo, diff, i, k=256):
    """h/d log(v/d chi) at branch point i in the chart chi = 2 zeta + zeta^3."""
    b = complex(curve.branch_points[i])
    others = curve.singular_points[np.abs(curve.singular_points - b) > 1e-12]
    dmin = float(np.min(np.abs(others - b)))
    rho = math.sqrt(0.15 * dmin)
    chat = rho * np.exp(2j * np.pi * np.arange(k) / k)
    chi = chat ** 2
    zeta = chi / 2.0
    for _ in range(60):
        zeta = zeta - (2 * zeta + zeta ** 3 - chi) / (2 + 3 * zeta ** 2)
    x = b + zeta
    w0 = curve.sqrtP(np.array([x[0]]))[0]
    w = curve.track_w(np.append(x, x[0]), w0)[:-1]
    dzeta_dchi = 1.0 / (2.0 + 3.0 * zeta ** 2)
    g_samples = diff.fn(x, w) * dzeta_dchi * 2.0 * chat
    y_samples = curve.phi(x, w) * dzeta_dchi
    fg = np.fft.fft(g_samples) / k
    fy = np.fft.fft(y_samples) / k
    g0 = fg[0]
    y0 = fy[0]
    yp = fy[1] / rho
    return g0 * y0 / yp


def suite_kernels(ses, chk):
    curve, geo = ses.curve, ses.geo
    bd = ses.branch_data
    eng = ses.eng
    p1, p2, p3 = ses.eval_points(3, start=0.11)
    configs = [(p1, p2), (p2, p3), (p1, p3)]

    def valpha_at(c, gg, p=p1):
        return gg.period.V(np.array([p.x]),
                           np.array([c.w_for_sheet(p.x, p.sheet)]))[0]

    names = _kernel_directions(ses)
    for name in names:
        d = vr.direction_differential(curve, geo, name)
        t0 = time.time()
        got = vr.vary_kernel(curve, geo, "valpha", d, [p1], bd)
        fd = eng.derivative(valpha_at, name)
        _tensor_check(chk, f"dv_alpha/d{name}", "4.3-va1", got, fd.value, 1e-4,
                      t0=t0)
        for ci, (qa, qb) in enumerate(configs):
            gotB = vr.vary_kernel(curve, geo, "B", d, [qa, qb], bd)

            def B_at(c, gg, qa=qa, qb=qb):
                ra = sf.SurfacePoint(qa.x, qa.sheet, c.w_for_sheet(qa.x, qa.sheet))
                rb = sf.SurfacePoint(qb.x, qb.sheet, c.w_for_sheet(qb.x, qb.sheet))
                return gg.kernels.bhat_point(ra, rb)

            fdB = eng.derivative(B_at, name)
            chk.add(f"dB/d{name}[cfg{ci}]", "4.4-B1", gotB, fdB.value, 1e-4)
        sym = abs(vr.vary_kernel(curve, geo, "B", d, [p1, p2], bd)
                  - vr.vary_kernel(curve, geo, "B", d, [p2, p1], bd))
        chk.add(f"dB-symmetry/{name}", "4.4-B1-symmetric", sym, 0.0, 1e-8,
                absolute=True)


def _kernel_directions(ses):
    names = [f"A{a + 1}" for a in range(ses.geo.genus)]
    coord_names = moduli.coordinate_names(ses.spec, ses.geo.genus)
    second = [n for n in coord_names if n.startswith("C") and not n.endswith(",1)")]
    third = [n for n in coord_names if n.startswith("C") and n.endswith(",1)")]
    if second:
        names.append(second[0])
    if third:
        names.append(third[0])
    return names


def suite_prime_form(ses, chk):
    curve, geo = ses.curve, ses.geo
    kern = geo.kernels
    bd = ses.branch_data
    eng = ses.eng
    p1, p2, p3 = ses.eval_points(3, start=0.23)
    pairs = [(p1, p2), (p2, p3), (p1, p3)]
    E12 = kern.prime_form(p1, p2)
    E21 = kern.prime_form(p2, p1)
    chk.add("prime-form-antisymmetry", "odd-theta-parity", E12, -E21, 1e-9)
    eps = 1e-5
    En = kern.prime_form(p1, curve.point(p1.x + eps, p1.sheet))
    chk.add("prime-form-diagonal-slope", "prime-form-definition",
            En / eps, 1.0, 1e-7)
    # d_x d_y ln E = B at the three pairs: the y-derivative is taken in the
    # theta-gradient form (the half-density drops), the x-derivative by
    # Richardson central differences
    for ci, (qa, qb) in enumerate(pairs):
        fd = _dx_dylnE(curve, geo, qa, qb, 2e-4)
        fd2 = _dx_dylnE(curve, geo, qa, qb, 1e-4)
        fd_r = (4 * fd2 - fd) / 3.0
        chk.add(f"dxdy-lnE-vs-B[{ci}]", "3.x-B=ddlnE", fd_r,
                kern.bhat_point(qa, qb), 1e-8)
    for name in _kernel_directions(ses)[: ses.geo.genus + 1]:
        d = vr.direction_differential(curve, geo, name)
        for ci, (qa, qb) in enumerate(pairs):
            got = vr.vary_kernel(curve, geo, "lnE", d, [qa, qb], bd)

            def lnE_at(c, gg, qa=qa, qb=qb):
                ra = sf.SurfacePoint(qa.x, qa.sheet, c.w_for_sheet(qa.x, qa.sheet))
                rb = sf.SurfacePoint(qb.x, qb.sheet, c.w_for_sheet(qb.x, qb.sheet))
                return np.log(gg.kernels.prime_form(ra, rb))

            fdE = eng.derivative(lnE_at, name)
            chk.add(f"dlnE/d{name}[cfg{ci}]", "4.5-E1", got, fdE.value, 1e-4)


def _dx_dylnE(curve, geo, qa, qb, h):
    """d/dx of the exact y-derivative of ln E (theta-gradient form)."""

    def dy_lnE(ra):
        A1 = geo.abel.at(ra.x, ra.w)
        A2 = geo.abel.at(qb.x, qb.w)
        e = geo.period.theta.eval((A2 - A1)[None, :], geo.kernels.odd, derivs=1)
        V2 = geo.period.V(np.array([qb.x]), np.array([qb.w]))[0]
        return complex((e["grad"][0] / e["val"][0]) @ V2)

    vp = dy_lnE(curve.point(qa.x + h, qa.sheet))
    vm = dy_lnE(curve.point(qa.x - h, qa.sheet))
    return (vp - vm) / (2 * h)


def suite_tau(ses, chk):
    curve, geo = ses.curve, ses.geo
    if not vr.is_residue_free(curve):
        raise HarnessError("tau suite requires a residue-free instance with "
                           "all pole orders >= 2 (use 'g2-resfree')")
    bd = ses.branch_data
    g = geo.genus
    for gamma in range(g):
        t0 = time.time()
        f = vr.tau_gradient(curve, geo, gamma, bd)
        o = vr.tau_gradient_oracle(curve, geo, gamma, bd)
        chk.add(f"tau-gradient-A{gamma + 1}", "4.6-dertauA-vs-deftau", f, o,
                1e-4, t0=t0)

    def tau_vec(c, gg):
        bdd = vr.BranchData(gg)
        return np.array([vr.tau_gradient(c, gg, a, bdd) for a in range(g)])

    eng = ses.eng
    cross = np.zeros((g, g), dtype=complex)
    for delta in range(g):
        fd = eng.derivative(tau_vec, f"A{delta + 1}")
        cross[:, delta] = fd.value
    _tensor_check(chk, "tau-cross-partials-symmetric", "4.6-dertauA",
                  cross, cross.T, 1e-4)


def suite_hessian(ses, chk, exploratory=False):
    curve, geo = ses.curve, ses.geo
    bd = ses.branch_data
    eng = ses.eng
    g = geo.genus

    idx = [(0, 0, 0, 0)] if g == 1 else [(0, 1, 1, 0), (0, 0, 0, 1)]
    for (a, b, c, d) in idx:
        t0 = time.time()
        H = vr.period_hessian(curve, geo, a, b, c, d, bd)

        def grad(cv, gg, c=c):
            bdd = vr.BranchData(gg)
            dd = vr.direction_differential(cv, gg, f"A{c + 1}")
            return vr.vary_period_matrix(cv, gg, dd, bdd)

        fd = eng.derivative(grad, f"A{d + 1}")
        chk.add(f"hessian-Omega[{a}{b}]-A{c + 1}A{d + 1}", "5.1-doubO",
                H, fd.value[a, b], 5e-4, gating=not exploratory, t0=t0)
    if g >= 2:
        vals = np.array([vr.period_hessian(curve, geo, *p, bd)
                         for p in sorted(set(permutations((0, 0, 1, 1))))])
        spread = float(np.max(np.abs(vals - vals[0]))) / max(1.0, abs(vals[0]))
        chk.add("hessian-24-fold-symmetry", "5.1-symmetric", spread, 0.0, 1e-8,
                absolute=True, gating=not exploratory)
    for alpha in range(g):
        fdB = eng.derivative(lambda cv, gg: gg.period.B_of_v, f"A{alpha + 1}")
        _tensor_check(chk, f"dB-periods/dA{alpha + 1}-vs-Omega", "5.2.1-OF",
                      fdB.value, geo.period.omega[alpha], 1e-5,
                      gating=not exploratory)


def suite_hierarchy(ses, chk):
    curve, geo = ses.curve, ses.geo
    bd = ses.branch_data
    eng = ses.eng
    pts = ses.eval_points(4, start=0.31)
    # Q3 full symmetry
    base = vr.q_multidiff(curve, geo, pts[:3])
    worst = 0.0
    for perm in permutations(range(3)):
        v = vr.q_multidiff(curve, geo, [pts[i] for i in perm])
        worst = max(worst, abs(v - base) / max(1e-300, abs(base)))
    chk.add("Q3-full-symmetry", "multtau-symmetric", worst, 0.0, 1e-9,
            absolute=True)
    # Q4 cycle count
    chk.add_flag("Q4-cycle-count", "multtau-cycles",
                 _qn_cycle_count(4) == 3, detail=_qn_cycle_count(4))
    # R identities
    r2 = vr.r_multidiff(curve, geo, pts[:2])
    b12 = geo.kernels.bhat_point(pts[0], pts[1])
    chk.add("R2-equals-B", "multB-R2", r2, b12, 1e-10)
    r3 = vr.r_multidiff(curve, geo, pts[:3])
    b1 = geo.kernels.bhat_point(pts[0], pts[1])
    b2 = geo.kernels.bhat_point(pts[1], pts[2])
    vmid = curve.phi(np.array([pts[1].x]), np.array([pts[1].w]))[0]
    chk.add("R3-equals-BB-over-v", "multB-R3", r3, b1 * b2 / vmid, 1e-10)
    # R_n^{ab} consistency with its definition at n=2
    rab = vr.r_ab(curve, geo, 0, 0, pts[:2])
    va = geo.period.V(np.array([pts[0].x]), np.array([pts[0].w]))[0][0]
    vb = geo.period.V(np.array([pts[1].x]), np.array([pts[1].w]))[0][0]
    v1 = curve.phi(np.array([pts[0].x]), np.array([pts[0].w]))[0]
    v2 = curve.phi(np.array([pts[1].x]), np.array([pts[1].w]))[0]
    chk.add("Rab-n2-definition", "Rnab", rab, va * vb * b12 / (v1 * v2), 1e-10)
    # variation of Q2 vs FD
    p1, p2 = pts[:2]
    got = vr.hierarchy_variation(curve, geo, 2, 0, [p1, p2], "Q", bd)

    def q2_at(c, gg):
        ra = sf.SurfacePoint(p1.x, p1.sheet, c.w_for_sheet(p1.x, p1.sheet))
        rb = sf.SurfacePoint(p2.x, p2.sheet, c.w_for_sheet(p2.x, p2.sheet))
        return vr.q_multidiff(c, gg, [ra, rb])

    fd = eng.derivative(q2_at, "A1")
    chk.add("dQ2/dA1-vs-FD", "varW1", got, fd.value, 1e-4)
    # R-variation at n=2 reduces to the bidifferential variation
    d = vr.direction_differential(curve, geo, "A1")
    gotR = vr.hierarchy_variation(curve, geo, 2, 0, [p1, p2], "R", bd)
    gotB = vr.vary_kernel(curve, geo, "B", d, [p1, p2], bd)
    chk.add("dR2-reduces-to-dB", "varRn-vs-B1", gotR, gotB, 1e-10)
    # symmetry of the Q-variation in the arguments
    gotQ21 = vr.hierarchy_variation(curve, geo, 2, 0, [p2, p1], "Q", bd)
    chk.add("dQ2-argument-symmetry", "varW1-symmetric", got, gotQ21, 1e-8)


def _qn_cycle_count(n):
    seen = set()
    count = 0
    for perm in permutations(range(1, n)):
        cyc = (0,) + perm
        if (0,) + tuple(reversed(perm)) in seen:
            continue
        seen.add(cyc)
        count += 1
    return count


def suite_scaling(ses, chk):
    curve, geo = ses.curve, ses.geo
    lam = 0.83 - 0.41j
    spec2 = moduli.spec_with_coefficients(
        ses.spec, np.concatenate([ses.spec.numer[1] * lam,
                                  ses.spec.numer[2] * lam ** 2]))
    curve2 = sf.build_surface(spec2, template=curve)
    geo2 = Geometry(curve2)
    coords = ses.nav.coordinates()
    coords2 = moduli.coordinates_of(curve2, geo2)
    _tensor_check(chk, "coordinates-scale-linearly", "2.8",
                  coords2.vector, lam * coords.vector, 1e-9)
    _tensor_check(chk, "period-matrix-scale-invariant", "5.2.1-rescaling",
                  geo2.period.omega, geo.period.omega, 1e-9)
    p1, p2 = ses.eval_points(2, start=0.41)
    q1 = sf.SurfacePoint(p1.x, p1.sheet, curve2.w_for_sheet(p1.x, p1.sheet))
    q2 = sf.SurfacePoint(p2.x, p2.sheet, curve2.w_for_sheet(p2.x, p2.sheet))
    chk.add("bidifferential-scale-invariant", "5.2.1-rescaling",
            geo2.kernels.bhat_point(q1, q2), geo.kernels.bhat_point(p1, p2),
            1e-9)


def suite_n3_smoke(ses, chk):
    """Exploratory generic-n build: counts and monodromy only."""
    curve = ses.curve
    counts = counts_of(ses.spec)
    chk.add_flag("n3-branch-count", "2.3", len(curve.branch_points) == counts.p,
                 gating=False)
    perm = curve.monodromy_product()
    chk.add_flag("n3-monodromy-product", "2.1", perm == tuple(range(curve.n)),
                 gating=False, detail=0.0)


SUITE_FUNCS = {
    "surface": suite_surface,
    "dm-cubic": suite_dm_cubic,
    "kernels": suite_kernels,
    "prime-form": suite_prime_form,
    "tau": suite_tau,
    "hessian": suite_hessian,
    "hierarchy": suite_hierarchy,
    "scaling": suite_scaling,
}


def run_suite(instance, suite, tol_override=None, eps=None):
    """Execute a named suite on an instance (label, path, or InstanceSpec)."""
    if suite not in SUITES:
        raise HarnessError(f"unknown suite {suite!r}; valid: {', '.join(SUITES)}")
    spec = instance if hasattr(instance, "numer") else load_instance(instance)
    report = Report(spec.label, suite, environment={
        "platform": platform.platform(), "python": platform.python_version(),
        "numpy": np.__version__})
    ses = Session(spec)
    if eps:
        ses.eng.eps_rel = eps
    chk = Checker(report, tol_override)
    if spec.n != 2:
        suite_n3_smoke(ses, chk)
        return report
    if suite == "all":
        for name in ("surface", "dm-cubic", "kernels", "prime-form",
                     "hierarchy", "hessian", "scaling"):
            SUITE_FUNCS[name](ses, chk)
        if vr.is_residue_free(ses.curve):
            suite_tau(ses, chk)
    else:
        SUITE_FUNCS[suite](ses, chk)
    return report


# ---------------------------------------------------------------------------
# epsilon sweeps
# ---------------------------------------------------------------------------

SWEEP_FUNCTIONALS = ("omega", "q2", "b-periods")


def sweep_epsilon(instance, functional, coord, eps_list):
    """Rows (eps, |FD|, |FD - formula|) for raw central differences.

    The error column should shrink ~4x per halving until the Newton noise
    floor; a `floor` flag marks rows where the decrease stalls.
    """
    if not eps_list:
        raise HarnessError("empty epsilon list")
    spec = instance if hasattr(instance, "numer") else load_instance(instance)
    ses = Session(spec)
    curve, geo = ses.curve, ses.geo
    eng = ses.eng
    bd = ses.branch_data
    if functional == "omega":
        d = vr.direction_differential(curve, geo, coord)
        formula = vr.vary_period_matrix(curve, geo, d, bd)
        fn = lambda c, g: g.period.omega
        pick = lambda m: np.asarray(m).ravel()[0]
    elif functional == "b-periods":
        alpha = int(coord[1:]) - 1
        formula = geo.period.omega[alpha]
        fn = lambda c, g: g.period.B_of_v
        pick = lambda m: np.asarray(m).ravel()[0]
    elif functional == "q2":
        pts = ses.eval_points(2, start=0.31)
        gamma = int(coord[1:]) - 1
        formula = vr.hierarchy_variation(curve, geo, 2, gamma, pts, "Q", bd)

        def fn(c, g, pts=pts):
            qs = [sf.SurfacePoint(p.x, p.sheet, c.w_for_sheet(p.x, p.sheet))
                  for p in pts]
            return vr.q_multidiff(c, g, qs)

        pick = lambda m: complex(np.asarray(m).ravel()[0])
    else:
        raise HarnessError(f"unknown functional {functional!r}; "
                           f"valid: {', '.join(SWEEP_FUNCTIONALS)}")
    formula0 = pick(formula)
    rows = []
    prev_err = None
    for eps in eps_list:
        fd = pick(eng.central(fn, coord, eps))
        err = abs(fd - formula0)
        ratio = (prev_err / err) if (prev_err is not None and err > 0) else float("nan")
        floor = bool(prev_err is not None and err > 0.45 * prev_err)
        rows.append({"eps": eps, "fd": fd, "abs_err": err, "ratio": ratio,
                     "floor": floor})
        prev_err = err
    return rows


def sweep_to_csv(rows):
    lines = ["eps,fd_re,fd_im,abs_err,ratio,floor"]
    for r in rows:
        lines.append("%.12g,%.15g,%.15g,%.6e,%.4f,%d" % (
            r["eps"], r["fd"].real, r["fd"].imag, r["abs_err"],
            r["ratio"] if r["ratio"] == r["ratio"] else float("nan"),
            int(r["floor"])))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# describe
# ---------------------------------------------------------------------------

def describe(instance, dump_contours=False):
    spec = instance if hasattr(instance, "numer") else load_instance(instance)
    counts = counts_of(spec)
    out = {"label": spec.label, "n": spec.n,
           "poles": [{"x": [p.x.real, p.x.imag], "k": p.k} for p in spec.poles],
           "counts": counts.as_dict()}
    curve = sf.build_surface(spec)
    out["branch_points"] = [[b.real, b.imag] for b in curve.branch_points]
    out["monodromies"] = [list(curve.monodromy(i))
                          for i in range(len(curve.branch_points))]
    out["genericity"] = {"ok": curve.genericity.ok,
                         "margins": {k: float(v) for k, v in
                                     curve.genericity.margins.items()},
                         "issues": [i.message for i in curve.genericity.issues]}
    if spec.n == 2:
        out["zeros_of_v"] = [[z.x.real, z.x.imag, z.sheet]
                             for z in curve.zeros_d0]
        out["distinguished_zero"] = [curve.x_r.x.real, curve.x_r.x.imag]
        if dump_contours:
            basis = sf.homology_basis(curve)
            def poly(c):
                z = c.polyline(per_segment=32)
                return [[p.real, p.imag] for p in z]
            out["homology"] = {
                "a": [poly(c) for c in basis.a_cycles],
                "b": [poly(c) for c in basis.b_cycles]}
    return out
