"""Randomized invariant suite behind the CLI ``verify`` subcommand.

Each check draws from one seeded generator and returns a pass flag with
a short numeric summary, so a verification run is reproducible from its
seed alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closed_form import (
    eval_b,
    eval_bmax,
    eval_bmin,
    grad_b,
    hessian_b,
    value_in_region,
    weak_jn_bound,
)
from .extremizers import build_extremizer
from .geometry import (
    Params,
    Region,
    Regime,
    classify_weak,
    regime,
    sample_strip_points,
    tangent_line_lower,
    tangent_line_upper,
)
from .oracle import chord_feasible
from .piecewise import bmo_norm, delivery_curve, moments, superlevel_measure

__all__ = ["CheckResult", "VerificationReport", "internal_boundaries", "run_verification"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    samples: int

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: worst={self.worst:.3e} "
                f"tol={self.tolerance:.1e} n={self.samples}")


@dataclass(frozen=True)
class VerificationReport:
    params: Params
    seed: int
    checks: tuple[CheckResult, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


def internal_boundaries(p: Params, layout: str):
    """Parametrized internal region interfaces: (name, a, b, point(t)) tuples.

    ``point`` maps (0, 1) to the open interface segment (positive side for
    the symmetric layouts); ``a`` and ``b`` are the region indices meeting
    there.
    """
    lam, eps = p.lam, p.eps
    out = []

    def seg(name, ia, ib, fn):
        out.append((name, ia, ib, fn))

    if layout == "weak-small":
        if lam > 0.0:
            s_lo = math.sqrt(max(lam * lam - eps * eps, 0.0))
            seg("top-of-band", 1, 2, lambda t: (s_lo + t * (lam - s_lo), lam * lam))
            seg("secant", 2, 3, lambda t: (t * lam, t * lam * lam))
    elif layout == "weak-medium":
        seg("upper-tangent", 1, 2,
            lambda t: (lam + t * eps, tangent_line_upper(lam + t * eps, lam, eps)))
        seg("lower-tangent", 2, 4,
            lambda t: (lam - eps + t * eps, tangent_line_lower(lam - eps + t * eps, lam, eps)))
        seg("secant", 3, 4, lambda t: (t * lam, t * lam * lam))
    elif layout == "weak-large":
        seg("upper-tangent", 1, 2,
            lambda t: (lam + t * eps, tangent_line_upper(lam + t * eps, lam, eps)))
        seg("lower-tangent-inner", 2, 3,
            lambda t: (lam - eps + t * eps, tangent_line_lower(lam - eps + t * eps, lam, eps)))
        seg("lower-tangent-outer", 3, 4,
            lambda t: (lam - 2 * eps + t * eps, tangent_line_lower(lam - 2 * eps + t * eps, lam, eps)))
        seg("center-tangent", 4, 5, lambda t: (t * eps, 2.0 * eps * t * eps))
    elif layout == "one-jump":
        seg("upper-tangent-outer", 1, 2,
            lambda t: (lam + eps + t * eps, tangent_line_upper(lam + eps + t * eps, lam, eps)))
        seg("upper-tangent-inner", 2, 3,
            lambda t: (lam + t * eps, tangent_line_upper(lam + t * eps, lam, eps)))
        seg("lower-tangent-inner", 3, 4,
            lambda t: (lam - eps + t * eps, tangent_line_lower(lam - eps + t * eps, lam, eps)))
        seg("lower-tangent-outer", 4, 5,
            lambda t: (lam - 2 * eps + t * eps, tangent_line_lower(lam - 2 * eps + t * eps, lam, eps)))
    else:
        raise ValueError(f"unknown layout {layout!r}")
    return out


def _feasible_chords(rng, p, n, x1_lo, x1_hi):
    """Random chords wholly inside the strip, as (a, b) point pairs."""
    chords = []
    while len(chords) < n:
        m = max(4 * (n - len(chords)), 64)
        a1, a2 = sample_strip_points(rng, m, p, x1_lo, x1_hi)
        d1 = rng.uniform(-2.0 * p.eps, 2.0 * p.eps, size=m)
        b1 = a1 + d1
        b2 = b1 * b1 + rng.uniform(0.0, 1.0, size=m) * p.eps ** 2
        for k in range(m):
            if chord_feasible((a1[k], a2[k]), (b1[k], b2[k]), p):
                chords.append(((a1[k], a2[k]), (b1[k], b2[k])))
                if len(chords) == n:
                    break
    return chords


def fd_well_conditioned(x1: float, x2: float, lam: float, eps: float,
                        signed: bool = False) -> bool:
    """Whether central differences with step 1e-5 can resolve derivatives here.

    Near the corner point the rational piece has third derivatives of
    order D**-2 relative to the first (D its denominator), and near the
    upper parabola the exponential piece scales like S**-4 (S the root
    defect), so both need to stay away from zero for a 1e-5-relative
    finite-difference comparison to be meaningful.
    """
    s = x1 if signed else abs(x1)
    d = max(x2 - x1 * x1, 0.0) + (lam - s) ** 2
    defect = eps * eps - (x2 - x1 * x1)
    return (d >= 1e-2 * (1.0 + abs(lam) / eps) * eps * eps
            and defect >= 5e-3 * eps * eps)


def _interior_points(rng, p, n, margin, x1_lo, x1_hi):
    """Strip points whose compass neighbourhood stays in one region.

    A neighbourhood of the corner point (lam, lam**2) is excluded: three
    regions meet there and the derivatives are unbounded.
    """
    pts = []
    while len(pts) < n:
        m = max(4 * (n - len(pts)), 64)
        x1, x2 = sample_strip_points(rng, m, p, x1_lo, x1_hi)
        for k in range(m):
            if not fd_well_conditioned(x1[k], x2[k], p.lam, p.eps):
                continue
            region = classify_weak(x1[k], x2[k], p)
            good = True
            for dx1, dx2 in ((margin, 0), (-margin, 0), (0, margin), (0, -margin)):
                a, b = x1[k] + dx1, x2[k] + dx2
                if not (a * a <= b <= a * a + p.eps ** 2):
                    good = False
                    break
                if classify_weak(a, b, p) != region:
                    good = False
                    break
            if good:
                pts.append((x1[k], x2[k], region))
                if len(pts) == n:
                    break
    return pts


def run_verification(p: Params, n_points: int = 1000, seed: int = 1234) -> VerificationReport:
    rng = np.random.default_rng(seed)
    lam, eps = p.lam, p.eps
    span = lam + 3.0 * eps
    checks = []

    # range and symmetry
    x1, x2 = sample_strip_points(rng, n_points, p, -span, span)
    worst_range = 0.0
    worst_sym = 0.0
    for a, b in zip(x1, x2):
        v = eval_b(a, b, p)
        worst_range = max(worst_range, -v, v - 1.0)
        worst_sym = max(worst_sym, abs(v - eval_b(-a, b, p)))
    checks.append(CheckResult("value range [0,1]", worst_range <= 0.0, worst_range, 0.0, n_points))
    checks.append(CheckResult("mirror symmetry", worst_sym == 0.0, worst_sym, 0.0, n_points))

    # boundary gluing: adjacent region formulas on shared interfaces
    n_b = max(n_points // 4, 50)
    worst_glue = 0.0
    count = 0
    layout = regime(p).layout
    for name, ia, ib, fn in internal_boundaries(p, layout):
        for t in rng.uniform(0.02, 0.98, size=n_b):
            s, h = fn(t)
            for sgn in (1.0, -1.0):
                va = value_in_region(sgn * s, h, lam, eps, Region(ia, "plus", layout))
                vb = value_in_region(sgn * s, h, lam, eps, Region(ib, "plus", layout))
                worst_glue = max(worst_glue, abs(va - vb))
                count += 2
    checks.append(CheckResult("interface continuity", worst_glue <= 1e-9, worst_glue, 1e-9, count))

    # midpoint concavity along feasible chords
    worst_conc = -math.inf
    chords = _feasible_chords(rng, p, n_points, -span, span)
    for (a, b) in chords:
        mid = (0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]))
        gap = 0.5 * (eval_b(*a, p) + eval_b(*b, p)) - eval_b(*mid, p)
        worst_conc = max(worst_conc, gap)
    checks.append(CheckResult("midpoint concavity", worst_conc <= 1e-10, worst_conc, 1e-10,
                              len(chords)))

    # reflection identity between the one-sided bounds
    worst_refl = 0.0
    x1, x2 = sample_strip_points(rng, n_points, p, -span, span)
    for a, b in zip(x1, x2):
        if abs(a - lam) < 1e-6 and abs(b - lam * lam) < 1e-6:
            continue
        worst_refl = max(worst_refl,
                         abs(eval_bmin(a, b, lam, eps) - (1.0 - eval_bmax(-a, b, -lam, eps))))
    checks.append(CheckResult("reflection identity", worst_refl <= 1e-12, worst_refl, 1e-12,
                              n_points))

    # analytic gradient against central differences
    step = 1e-5
    pts = _interior_points(rng, p, max(n_points // 4, 50), 20 * step, -span, span)
    worst_grad = 0.0
    for a, b, _ in pts:
        g1, g2 = grad_b(a, b, p)
        f1 = (eval_b(a + step, b, p) - eval_b(a - step, b, p)) / (2 * step)
        f2 = (eval_b(a, b + step, p) - eval_b(a, b - step, p)) / (2 * step)
        scale = max(abs(g1), abs(g2), 1e-3)
        worst_grad = max(worst_grad, abs(g1 - f1) / scale, abs(g2 - f2) / scale)
    checks.append(CheckResult("gradient vs finite differences", worst_grad <= 1e-5, worst_grad,
                              1e-5, len(pts)))

    # Hessian: nonpositive eigenvalues, degenerate on the curved pieces
    worst_eig = -math.inf
    worst_det = 0.0
    for a, b, region in pts:
        h = hessian_b(a, b, p)
        eig = np.linalg.eigvalsh(h)
        worst_eig = max(worst_eig, float(eig.max()))
        # the exponential piece must have an exactly vanishing determinant;
        # the rational piece is ruled too but its entries grow so steeply
        # that determinant cancellation noise swamps an absolute bound
        if region.index == 4 and region.layout == "weak-large":
            worst_det = max(worst_det, abs(float(np.linalg.det(h))))
    checks.append(CheckResult("hessian nonpositive", worst_eig <= 1e-9, worst_eig, 1e-9, len(pts)))
    checks.append(CheckResult("curved-piece degeneracy", worst_det <= 1e-9, worst_det, 1e-9,
                              len(pts)))

    # sharp-bound consistency and monotonicity on the central fiber
    worst_bound = abs(weak_jn_bound(p) - eval_b(0.0, eps * eps, p))
    ts = np.linspace(0.0, eps * eps, 200)
    vals = [eval_b(0.0, t, p) for t in ts]
    worst_mono = max((vals[i] - vals[i + 1] for i in range(len(vals) - 1)), default=0.0)
    checks.append(CheckResult("bound equals central value", worst_bound <= 1e-12, worst_bound,
                              1e-12, 1))
    checks.append(CheckResult("central fiber monotone", worst_mono <= 1e-12, worst_mono, 1e-12,
                              len(ts)))

    # extremizer roundtrip (constructions exist in the large regime)
    if regime(p) is Regime.LARGE:
        n_e = max(n_points // 10, 25)
        x1, x2 = sample_strip_points(rng, n_e, p, -(lam + 2 * eps), lam + 2 * eps)
        worst_mom = 0.0
        worst_sharp = 0.0
        worst_norm = -math.inf
        worst_del = 0.0
        for a, b in zip(x1, x2):
            phi = build_extremizer(a, b, p)
            m1, m2 = moments(phi)
            worst_mom = max(worst_mom, abs(m1 - a), abs(m2 - b))
            worst_sharp = max(worst_sharp,
                              abs(superlevel_measure(phi, lam) - eval_b(a, b, p)))
            worst_norm = max(worst_norm, bmo_norm(phi, 128) - eps)
            worst_del = max(worst_del, delivery_curve(phi, 128).max_violation)
        checks.append(CheckResult("extremizer moments", worst_mom <= 1e-9, worst_mom, 1e-9, n_e))
        checks.append(CheckResult("extremizer sharpness", worst_sharp <= 1e-9, worst_sharp,
                                  1e-9, n_e))
        checks.append(CheckResult("extremizer norm bound", worst_norm <= 1e-6, worst_norm,
                                  1e-6, n_e))
        checks.append(CheckResult("delivery curve in strip", worst_del <= 1e-9, worst_del,
                                  1e-9, n_e))

    return VerificationReport(params=p, seed=seed, checks=tuple(checks))
