"""Acceptance suite: every criterion at its stated tolerance.

Run with ``pytest -s tests/test_acceptance.py`` to see one PASS/FAIL
line per criterion.  The oracle-based criteria share the module-scoped
relaxation runs below; everything is seeded and deterministic.
"""

import math
import time

import numpy as np
import pytest

from jnbellman import (
    BoundarySet,
    Params,
    StripDomainError,
    StripGrid,
    bmo_norm,
    build_extremizer,
    classify_weak,
    delivery_curve,
    eval_b,
    eval_bmax,
    eval_bmin,
    grad_b,
    hessian_b,
    moments,
    solve,
    superlevel_measure,
    weak_jn_bound,
)
from jnbellman.geometry import Region, sample_strip_points
from jnbellman.closed_form import value_in_region
from jnbellman.verify import fd_well_conditioned, internal_boundaries

EPS = 1.0
TRUE_LARGE = math.e ** 2 / 4.0 * math.exp(-3.0)   # sharp constant at lam = 3 eps
WRONG_LARGE = 4.0 / math.e ** 2 * math.exp(-3.0)  # the would-be alternative prefactor


def _report(criterion: str, ok: bool, detail: str):
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    assert ok, f"{criterion}: {detail}"


# ---------------------------------------------------------------------------
# shared oracle runs (criteria 2 and 6)

ORACLE_CONFIGS = {
    "b-0.5": (0.5, "two-sided"),
    "b-1.5": (1.5, "two-sided"),
    "b-3.0": (3.0, "two-sided"),
    "bmax-3.0": (3.0, "one-sided"),
}


@pytest.fixture(scope="module")
def oracle_runs():
    runs = {}
    for key, (lam, kind) in ORACLE_CONFIGS.items():
        p = Params(lam, EPS)
        grid = StripGrid(161, 81, -5.0, 5.0, p)
        if kind == "two-sided":
            e_set = BoundarySet.abs_at_least(lam)
            ref_fn = lambda a, b, p=p: eval_b(a, b, p)
        else:
            e_set = BoundarySet.at_least(lam)
            ref_fn = lambda a, b, lam=lam: eval_bmax(a, b, lam, EPS)
        x1 = grid.x1_nodes
        x2 = grid.x2_nodes()
        ref = np.array([[ref_fn(x1[i], x2[i, j]) for j in range(grid.n2)]
                        for i in range(grid.n1)])
        max_excess = [0.0]

        def track(sweep, delta, f, ref=ref, box=max_excess):
            box[0] = max(box[0], float((f.values - ref).max()))

        start = time.perf_counter()
        field = solve(grid, e_set, tol=1e-6, max_sweeps=800,
                      directions=64, radii=24, callback=track)
        elapsed = time.perf_counter() - start
        keep = (np.abs(x1[:, None]) <= 5.0 - EPS)
        gap = float(np.abs(np.where(keep, field.values - ref, 0.0)).max())
        runs[key] = {
            "field": field, "ref": ref, "gap": gap,
            "max_excess": max_excess[0], "elapsed": elapsed, "grid": grid,
        }
    return runs


def test_criterion_1_sharp_constant_reproduction():
    worst = 0.0
    for ratio, expected in ((0.5, 1.0), (1.5, EPS ** 2 / 1.5 ** 2), (3.0, TRUE_LARGE)):
        v = eval_b(0.0, EPS ** 2, Params(ratio * EPS, EPS))
        worst = max(worst, abs(v - expected))
    # branch agreement at the regime junctions
    worst = max(worst, abs(1.0 - EPS ** 2 / EPS ** 2))
    worst = max(worst, abs(EPS ** 2 / (2 * EPS) ** 2
                           - math.e ** 2 / 4.0 * math.exp(-2.0)))
    lams = np.linspace(0.0, 6.0, 1000)
    bounds = [weak_jn_bound(Params(l, EPS)) for l in lams]
    monotone = all(b2 <= b1 + 1e-15 for b1, b2 in zip(bounds, bounds[1:]))
    ok = worst <= 1e-12 and monotone
    _report("criterion 1 (sharp-constant reproduction)", ok,
            f"worst deviation {worst:.2e}, bound nonincreasing={monotone}")


def test_criterion_2_constant_discrepancy(oracle_runs):
    p = Params(3.0, EPS)
    run = oracle_runs["b-3.0"]
    grid = run["grid"]
    i0 = int(np.argmin(np.abs(grid.x1_nodes)))
    v_fine = float(run["field"].values[i0, -1])

    coarse_grid = StripGrid(81, 41, -5.0, 5.0, p)
    coarse = solve(coarse_grid, BoundarySet.abs_at_least(3.0), tol=1e-6,
                   max_sweeps=800, directions=32, radii=12)
    i0c = int(np.argmin(np.abs(coarse_grid.x1_nodes)))
    v_coarse = float(coarse.values[i0c, -1])

    refinement_gap = max(abs(v_fine - v_coarse), 1e-12)
    close_to_true = abs(v_fine - TRUE_LARGE) <= 2e-2
    separated = abs(v_fine - WRONG_LARGE) > 5.0 * refinement_gap
    ok = close_to_true and separated and run["field"].converged and coarse.converged
    _report("criterion 2 (prefactor discrepancy resolved by the oracle)", ok,
            f"oracle={v_fine:.6f} true={TRUE_LARGE:.6f} wrong={WRONG_LARGE:.6f} "
            f"refinement_gap={refinement_gap:.2e}")


def test_criterion_3_extremizer_roundtrip():
    p = Params(3.0, EPS)
    rng = np.random.default_rng(2024)
    # spread over all five subdomains: rejection-sample 200 points per region
    buckets = {i: [] for i in range(1, 6)}
    while any(len(v) < 200 for v in buckets.values()):
        x1, x2 = sample_strip_points(rng, 2048, p, -5.0, 5.0)
        for a, b in zip(x1, x2):
            idx = classify_weak(a, b, p).index
            if len(buckets[idx]) < 200:
                buckets[idx].append((a, b))
    worst_mom = worst_sharp = worst_viol = 0.0
    worst_norm = -math.inf
    worst_norm_low_r1 = math.inf
    n_checked = 0
    for idx, pts in buckets.items():
        for a, b in pts:
            phi = build_extremizer(a, b, p)
            m1, m2 = moments(phi)
            worst_mom = max(worst_mom, abs(m1 - a), abs(m2 - b))
            worst_sharp = max(worst_sharp,
                              abs(superlevel_measure(phi, p.lam) - eval_b(a, b, p)))
            norm = bmo_norm(phi, resolution=512)
            worst_norm = max(worst_norm, norm - EPS)
            if idx == 1:
                worst_norm_low_r1 = min(worst_norm_low_r1, norm - EPS)
            worst_viol = max(worst_viol, delivery_curve(phi, 256).max_violation)
            n_checked += 1
    ok = (worst_mom <= 1e-9 and worst_sharp <= 1e-9 and worst_norm <= 1e-6
          and worst_norm_low_r1 >= -1e-3 and worst_viol <= 1e-9)
    _report("criterion 3 (extremizer roundtrip, 1000 points)", ok,
            f"n={n_checked} moment_err={worst_mom:.2e} sharpness_err={worst_sharp:.2e} "
            f"norm_excess={worst_norm:.2e} region1_norm_deficit={-worst_norm_low_r1:.2e} "
            f"delivery_violation={worst_viol:.2e}")


def _feasible_chords_vectorized(rng, p, n, span):
    out_a = np.empty((0, 2))
    out_b = np.empty((0, 2))
    eps2 = p.eps ** 2
    while len(out_a) < n:
        m = max(2 * (n - len(out_a)), 4096)
        a1, a2 = sample_strip_points(rng, m, p, -span, span)
        d1 = rng.uniform(-2.0 * p.eps, 2.0 * p.eps, size=m)
        b1 = a1 + d1
        b2 = b1 * b1 + rng.uniform(0.0, 1.0, size=m) * eps2
        q0 = a2 - a1 * a1 - eps2
        q1 = (b2 - a2) - 2.0 * a1 * d1
        qmax = np.maximum(q0, q0 + q1 - d1 * d1)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_star = np.where(d1 != 0.0, q1 / (2.0 * d1 * d1), -1.0)
        interior = (t_star > 0.0) & (t_star < 1.0)
        qmax = np.where(interior, np.maximum(qmax, q0 + q1 * t_star - d1 * d1 * t_star ** 2),
                        qmax)
        keep = qmax <= 0.0
        out_a = np.vstack([out_a, np.stack([a1[keep], a2[keep]], axis=1)])
        out_b = np.vstack([out_b, np.stack([b1[keep], b2[keep]], axis=1)])
    return out_a[:n], out_b[:n]


def test_criterion_4_concavity_suite():
    rng = np.random.default_rng(808)
    worst_conc = -math.inf
    for lam in (0.5, 1.5, 3.0):
        p = Params(lam, EPS)
        a, b = _feasible_chords_vectorized(rng, p, 100_000, lam + 3.0)
        for (a1, a2), (b1, b2) in zip(a, b):
            mid = eval_b(0.5 * (a1 + b1), 0.5 * (a2 + b2), p)
            avg = 0.5 * (eval_b(a1, a2, p) + eval_b(b1, b2, p))
            worst_conc = max(worst_conc, avg - mid)
    # one-sided variant
    lam = 3.0
    a, b = _feasible_chords_vectorized(rng, Params(lam, EPS), 20_000, lam + 3.0)
    for (a1, a2), (b1, b2) in zip(a, b):
        mid = eval_bmax(0.5 * (a1 + b1), 0.5 * (a2 + b2), lam, EPS)
        avg = 0.5 * (eval_bmax(a1, a2, lam, EPS) + eval_bmax(b1, b2, lam, EPS))
        worst_conc = max(worst_conc, avg - mid)

    # Hessian bounds and gradient finite differences at interior points
    p = Params(3.0, EPS)
    step = 1e-5
    worst_eig = -math.inf
    worst_det = 0.0
    worst_grad = 0.0
    n_pts = 0
    while n_pts < 10_000:
        x1, x2 = sample_strip_points(rng, 4096, p, -5.0, 5.0)
        for a1, a2 in zip(x1, x2):
            if not fd_well_conditioned(a1, a2, p.lam, EPS):
                # near the corner point derivatives diverge and the fd step
                # cannot resolve them; the margin precondition excludes it
                continue
            try:
                h = hessian_b(a1, a2, p, margin=20 * step)
                g1, g2 = grad_b(a1, a2, p)
            except StripDomainError:
                continue
            if not all((a1 + da) ** 2 <= a2 + db <= (a1 + da) ** 2 + EPS ** 2
                       for da, db in ((step, 0), (-step, 0), (0, step), (0, -step))):
                continue
            eig = np.linalg.eigvalsh(h)
            worst_eig = max(worst_eig, float(eig.max()))
            region = classify_weak(a1, a2, p)
            if region.index == 4:
                worst_det = max(worst_det, abs(float(np.linalg.det(h))))
            f1 = (eval_b(a1 + step, a2, p) - eval_b(a1 - step, a2, p)) / (2 * step)
            f2 = (eval_b(a1, a2 + step, p) - eval_b(a1, a2 - step, p)) / (2 * step)
            scale = max(abs(g1), abs(g2), 1e-3)
            worst_grad = max(worst_grad, abs(g1 - f1) / scale, abs(g2 - f2) / scale)
            n_pts += 1
            if n_pts == 10_000:
                break
    ok = worst_conc <= 1e-10 and worst_eig <= 1e-9 and worst_det <= 1e-9 and worst_grad <= 1e-5
    _report("criterion 4 (concavity suite)", ok,
            f"chord_violation={worst_conc:.2e} max_eig={worst_eig:.2e} "
            f"region4_det={worst_det:.2e} grad_fd_rel={worst_grad:.2e}")


def test_criterion_5_gluing_suite():
    rng = np.random.default_rng(515)
    # the vertical slope on the interfaces reaches 1/lam^2 = 4, so approaching
    # to within delta of a boundary perturbs values by ~8*delta
    delta = 5e-10
    worst_val = 0.0
    # value continuity across every internal interface, both regimes sides
    for lam in (0.5, 1.5, 3.0):
        p = Params(lam, EPS)
        layout = (
            "weak-small" if lam <= EPS else "weak-medium" if lam <= 2 * EPS else "weak-large"
        )
        for name, ia, ib, fn in internal_boundaries(p, layout):
            for t in rng.uniform(0.01, 0.99, size=1000):
                s, h = fn(t)
                for sgn in (1.0, -1.0):
                    lo = eval_b(sgn * s, h - delta, p)
                    hi = eval_b(sgn * s, h + delta, p)
                    worst_val = max(worst_val, abs(hi - lo))
                    va = value_in_region(sgn * s, h, lam, EPS, Region(ia, "plus", layout))
                    vb = value_in_region(sgn * s, h, lam, EPS, Region(ib, "plus", layout))
                    worst_val = max(worst_val, abs(va - vb))
    lam = 3.0
    for name, ia, ib, fn in internal_boundaries(Params(lam, EPS), "one-jump"):
        for t in rng.uniform(0.01, 0.99, size=1000):
            s, h = fn(t)
            lo = eval_bmax(s, h - delta, lam, EPS)
            hi = eval_bmax(s, h + delta, lam, EPS)
            worst_val = max(worst_val, abs(hi - lo))

    # gradient continuity across the two smooth interfaces of the large layout
    p = Params(3.0, EPS)
    gdelta = 1e-8
    worst_grad = 0.0
    smooth = [b for b in internal_boundaries(p, "weak-large")
              if b[0] in ("center-tangent", "lower-tangent-outer")]
    assert len(smooth) == 2
    for name, ia, ib, fn in smooth:
        for t in rng.uniform(0.01, 0.99, size=1000):
            s, h = fn(t)
            g_lo = grad_b(s, h - gdelta, p)
            g_hi = grad_b(s, h + gdelta, p)
            worst_grad = max(worst_grad, abs(g_hi[0] - g_lo[0]), abs(g_hi[1] - g_lo[1]))

    # vertical-derivative jump pattern around region 2 of the tangent layouts:
    # strictly negative inside, nonnegative outside
    sign_ok = True
    for lam in (1.5, 3.0):
        p = Params(lam, EPS)
        layout = "weak-medium" if lam <= 2 * EPS else "weak-large"
        bounds = [b for b in internal_boundaries(p, layout)
                  if 2 in (b[1], b[2])]
        for name, ia, ib, fn in bounds:
            # region 2 lies above both of its straight boundary lines
            for t in rng.uniform(0.05, 0.95, size=200):
                s, h = fn(t)
                nudge = 1e-6
                g_in = grad_b(s, h + nudge, p)
                g_out = grad_b(s, h - nudge, p)
                sign_ok &= g_in[1] < 0.0
                sign_ok &= g_out[1] >= -1e-15
    ok = worst_val <= 1e-8 and worst_grad <= 1e-6 and sign_ok
    _report("criterion 5 (gluing suite)", ok,
            f"value_jump={worst_val:.2e} grad_jump={worst_grad:.2e} "
            f"vertical-slope signs around region 2: {'ok' if sign_ok else 'violated'}")


def test_criterion_6_oracle_equivalence(oracle_runs):
    details = []
    ok = True
    for key, run in oracle_runs.items():
        ok &= run["field"].converged
        ok &= run["gap"] <= 2e-2
        ok &= run["max_excess"] <= 5e-3
        details.append(f"{key}: gap={run['gap']:.2e} excess={run['max_excess']:.2e} "
                       f"sweeps={run['field'].sweeps} ({run['elapsed']:.0f}s)")
    _report("criterion 6 (oracle equivalence)", ok, "; ".join(details))


def test_criterion_7_reflection_identity():
    rng = np.random.default_rng(77)
    worst = 0.0
    n = 0
    while n < 10_000:
        x1 = rng.uniform(-6.0, 6.0)
        x2 = x1 * x1 + rng.uniform(0.0, 1.0) * EPS ** 2
        lam = rng.uniform(-4.0, 4.0)
        if abs(x1 - lam) <= 1e-9 and abs(x2 - lam * lam) <= 1e-9:
            continue
        lhs = eval_bmin(x1, x2, lam, EPS)
        rhs = 1.0 - eval_bmax(-x1, x2, -lam, EPS)
        worst = max(worst, abs(lhs - rhs))
        n += 1
    ok = worst <= 1e-12
    _report("criterion 7 (reflection identity)", ok, f"worst={worst:.2e} over {n} points")
