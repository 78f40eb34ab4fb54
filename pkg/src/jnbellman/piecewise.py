"""Piecewise test functions on (0, 1) and their exact analysis.

A test function is a finite concatenation of constant and logarithmic
segments.  Both shapes integrate in closed form, so interval moments,
superlevel-set measures and delivery curves are exact up to round-off;
only the oscillation norm needs a numerical supremum (a dense endpoint
grid followed by local refinement).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Params, Region

__all__ = [
    "BellmanPointCurve",
    "PiecewiseFunction",
    "Segment",
    "bmo_norm",
    "delivery_curve",
    "moments",
    "strip_violation",
    "superlevel_measure",
]

_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class Segment:
    """One piece: constant ``value``, or ``value + scale*log(pivot/t)``.

    With ``mirrored`` set the logarithm's argument is ``pivot/(1-t)``
    instead of ``pivot/t``.  ``scale`` may carry either sign; the argument
    of the logarithm must stay positive on the open span, which is
    guaranteed by ``t_lo > 0`` (plain) resp. ``t_hi < 1`` (mirrored).
    """

    t_lo: float
    t_hi: float
    kind: str  # "const" | "log"
    value: float
    scale: float = 0.0
    pivot: float = 1.0
    mirrored: bool = False

    def __post_init__(self):
        if not self.t_lo < self.t_hi:
            raise ValueError(f"empty segment span [{self.t_lo}, {self.t_hi}]")
        if not (-_EDGE_TOL <= self.t_lo and self.t_hi <= 1.0 + _EDGE_TOL):
            raise ValueError("segment span must stay inside [0, 1]")
        if self.kind == "log":
            if self.pivot <= 0.0:
                raise ValueError("log pivot must be positive")
            if not self.mirrored and self.t_lo <= 0.0:
                raise ValueError("log(pivot/t) needs t_lo > 0")
            if self.mirrored and self.t_hi >= 1.0:
                raise ValueError("log(pivot/(1-t)) needs t_hi < 1")
        elif self.kind != "const":
            raise ValueError(f"unknown segment kind {self.kind!r}")

    def value_at(self, t: float) -> float:
        """Pointwise value; valid on the closed span (endpoints as limits)."""
        if self.kind == "const":
            return self.value
        u = (1.0 - t) if self.mirrored else t
        return self.value + self.scale * math.log(self.pivot / u)

    def _antider(self, u: float):
        """(F1, F2)(u) with F1' = value + scale*log(pivot/u), F2' = (F1')**2."""
        if u == 0.0:
            return 0.0, 0.0
        ll = math.log(self.pivot / u)
        f1 = self.value * u + self.scale * u * (ll + 1.0)
        f2 = (self.value ** 2 * u
              + 2.0 * self.value * self.scale * u * (ll + 1.0)
              + self.scale ** 2 * u * (ll * ll + 2.0 * ll + 2.0))
        return f1, f2

    def integrals(self, a: float, b: float):
        """Exact (integral of phi, integral of phi**2) over [a, b] within the span."""
        if b <= a:
            return 0.0, 0.0
        if self.kind == "const":
            length = b - a
            return self.value * length, self.value ** 2 * length
        if self.mirrored:
            a, b = 1.0 - b, 1.0 - a
        f1a, f2a = self._antider(a)
        f1b, f2b = self._antider(b)
        return f1b - f1a, f2b - f2a

    def crossing(self, c: float) -> float:
        """The unique t with value_at(t) == c on a log segment (may fall outside the span)."""
        if self.kind != "log" or self.scale == 0.0:
            raise ValueError("crossing is defined for genuine log segments only")
        u = self.pivot * math.exp((self.value - c) / self.scale)
        return (1.0 - u) if self.mirrored else u

    def measure_where(self, pred_ge: float | None = None, pred_le: float | None = None) -> float:
        """Measure of {t in span : v(t) >= pred_ge} (or <= pred_le; exactly one given)."""
        ge = pred_ge is not None
        c = pred_ge if ge else pred_le
        va = self.value_at(self.t_lo)
        vb = self.value_at(self.t_hi)
        sat_a = (va >= c) if ge else (va <= c)
        sat_b = (vb >= c) if ge else (vb <= c)
        if sat_a and sat_b:
            return self.t_hi - self.t_lo
        if not sat_a and not sat_b:
            return 0.0
        t_star = min(max(self.crossing(c), self.t_lo), self.t_hi)
        return (t_star - self.t_lo) if sat_a else (self.t_hi - t_star)


@dataclass(frozen=True)
class PiecewiseFunction:
    """Contiguous segments covering (0, 1); immutable once built.

    Segments are half-open (closed on the left) for measure bookkeeping;
    pointwise sampling at an exact breakpoint is refused because the
    one-sided values differ.
    """

    segments: tuple[Segment, ...]
    params: Params | None = None
    origin: tuple[float, float] | None = None
    region: Region | None = None

    def __post_init__(self):
        if not self.segments:
            raise ValueError("need at least one segment")
        if abs(self.segments[0].t_lo) > _EDGE_TOL or abs(self.segments[-1].t_hi - 1.0) > _EDGE_TOL:
            raise ValueError("segments must span (0, 1)")
        for left, right in zip(self.segments, self.segments[1:]):
            if abs(left.t_hi - right.t_lo) > _EDGE_TOL:
                raise ValueError(
                    f"segments must be contiguous, got gap {left.t_hi} -> {right.t_lo}"
                )

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(seg.t_lo for seg in self.segments[1:])

    def segment_at(self, t: float) -> Segment:
        for seg in self.segments:
            if t < seg.t_hi:
                return seg
        return self.segments[-1]

    def __call__(self, t: float) -> float:
        return sample(self, t)

    def negated(self) -> "PiecewiseFunction":
        segs = tuple(
            Segment(s.t_lo, s.t_hi, s.kind, -s.value, -s.scale, s.pivot, s.mirrored)
            for s in self.segments
        )
        origin = None
        if self.origin is not None:
            origin = (-self.origin[0], self.origin[1])
        region = self.region
        if region is not None and region.side in ("plus", "minus"):
            flipped = "minus" if region.side == "plus" else "plus"
            region = Region(region.index, flipped, region.layout)
        return PiecewiseFunction(segs, self.params, origin, region)


def sample(phi: PiecewiseFunction, t: float) -> float:
    """Pointwise value at a non-breakpoint t in (0, 1)."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie strictly inside (0, 1), got {t}")
    if any(t == b for b in phi.breakpoints):
        raise ValueError(
            f"t={t} is a segment breakpoint; one-sided values differ, sample beside it"
        )
    return phi.segment_at(t).value_at(t)


def _integrals_on(phi: PiecewiseFunction, a: float, b: float):
    i1 = 0.0
    i2 = 0.0
    for seg in phi.segments:
        lo = max(a, seg.t_lo)
        hi = min(b, seg.t_hi)
        if hi > lo:
            d1, d2 = seg.integrals(lo, hi)
            i1 += d1
            i2 += d2
    return i1, i2


def moments(phi: PiecewiseFunction, interval=(0.0, 1.0)):
    """Exact (mean, second moment) of phi over a subinterval of [0, 1]."""
    alpha, beta = interval
    if not (0.0 <= alpha < beta <= 1.0 + _EDGE_TOL):
        raise ValueError(f"invalid interval [{alpha}, {beta}]")
    i1, i2 = _integrals_on(phi, alpha, min(beta, 1.0))
    length = min(beta, 1.0) - alpha
    return i1 / length, i2 / length


def superlevel_measure(phi: PiecewiseFunction, lam: float, mode: str = "absolute") -> float:
    """Exact measure of {t : |phi(t)| >= lam} or, in signed mode, {t : phi(t) >= lam}.

    Crossing points on log segments are solved with the exact exponential
    inverse, so no tolerance enters.
    """
    if mode not in ("absolute", "signed"):
        raise ValueError(f"mode must be 'absolute' or 'signed', got {mode!r}")
    total = 0.0
    for seg in phi.segments:
        if mode == "signed":
            total += seg.measure_where(pred_ge=lam)
        elif lam <= 0.0:
            total += seg.t_hi - seg.t_lo
        else:
            total += seg.measure_where(pred_ge=lam)
            total += seg.measure_where(pred_le=-lam)
    return total


def _prefix_integrals(phi: PiecewiseFunction, ts: np.ndarray):
    ivals1 = np.empty(len(ts))
    ivals2 = np.empty(len(ts))
    acc1 = 0.0
    acc2 = 0.0
    prev = 0.0
    for k, t in enumerate(ts):
        d1, d2 = _integrals_on(phi, prev, t)
        acc1 += d1
        acc2 += d2
        ivals1[k] = acc1
        ivals2[k] = acc2
        prev = t
    return ivals1, ivals2


def _variance(phi: PiecewiseFunction, a: float, b: float) -> float:
    if not 0.0 <= a < b <= 1.0:
        return -1.0  # degenerate probe during refinement
    m1, m2 = moments(phi, (a, b))
    return max(m2 - m1 * m1, 0.0)


def bmo_norm(phi: PiecewiseFunction, resolution: int = 512, refine: bool = True,
             refine_tol: float = 1e-6) -> float:
    """Lower estimate of the oscillation norm sup_I sqrt(var_I phi).

    Exhaustive search over a ``resolution x resolution`` endpoint grid
    (segment breakpoints are added to the grid), then coordinate-wise
    ternary refinement around the best cell.  Nondecreasing in
    ``resolution`` for nested grids.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    ts = np.unique(np.concatenate([
        np.linspace(0.0, 1.0, resolution + 1),
        np.asarray(phi.breakpoints, dtype=float),
    ]))
    c1, c2 = _prefix_integrals(phi, ts)
    dt = ts[None, :] - ts[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        m1 = (c1[None, :] - c1[:, None]) / dt
        m2 = (c2[None, :] - c2[:, None]) / dt
        var = m2 - m1 * m1
    var[~np.isfinite(var)] = -1.0
    np.fill_diagonal(var, -1.0)
    i, j = np.unravel_index(int(np.argmax(var)), var.shape)
    if i > j:
        i, j = j, i
    best = max(var[i, j], 0.0)
    if not refine:
        return math.sqrt(best)

    a_lo, a_hi = ts[max(i - 1, 0)], ts[i + 1]
    b_lo, b_hi = ts[j - 1], ts[min(j + 1, len(ts) - 1)]
    a, b = ts[i], ts[j]
    for _ in range(80):
        moved = 0.0
        # ternary step in the left endpoint, then in the right one
        for _ in range(2):
            p = a_lo + (a_hi - a_lo) / 3.0
            q = a_hi - (a_hi - a_lo) / 3.0
            if _variance(phi, p, b) >= _variance(phi, q, b):
                a_hi = q
            else:
                a_lo = p
        new_a = 0.5 * (a_lo + a_hi)
        moved = max(moved, abs(new_a - a))
        a = new_a
        for _ in range(2):
            p = b_lo + (b_hi - b_lo) / 3.0
            q = b_hi - (b_hi - b_lo) / 3.0
            if _variance(phi, a, p) >= _variance(phi, a, q):
                b_hi = q
            else:
                b_lo = p
        new_b = 0.5 * (b_lo + b_hi)
        moved = max(moved, abs(new_b - b))
        b = new_b
        if moved < refine_tol * 1e-3:
            break
    if b > a:
        best = max(best, _variance(phi, a, b))
    return math.sqrt(best)


def strip_violation(x1: float, x2: float, eps: float) -> float:
    """How far (x1, x2) falls outside the closed strip; 0 inside."""
    return max(x1 * x1 - x2, x2 - x1 * x1 - eps * eps, 0.0)


@dataclass(frozen=True)
class BellmanPointCurve:
    """Samples of the growing-interval moment path t -> (<phi>_[0,t], <phi^2>_[0,t])."""

    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    violation: np.ndarray = field(repr=False)

    @property
    def max_violation(self) -> float:
        return float(self.violation.max())


def delivery_curve(phi: PiecewiseFunction, n: int) -> BellmanPointCurve:
    """The moment path over prefixes [0, t]; exact at every sample.

    Samples are n uniform points of (0, 1] merged with the segment
    breakpoints, so corner points of the path are hit exactly; the last
    sample t=1 reproduces the origin moments.  Violations are measured
    against the strip of the attached parameters.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    if phi.params is None:
        raise ValueError("delivery_curve needs params attached to the function")
    ts = np.unique(np.concatenate([
        np.arange(1, n + 1, dtype=float) / n,
        np.asarray([b for b in phi.breakpoints if b > 0.0], dtype=float),
    ]))
    c1, c2 = _prefix_integrals(phi, ts)
    x1 = c1 / ts
    x2 = c2 / ts
    eps = phi.params.eps
    viol = np.array([strip_violation(a, b, eps) for a, b in zip(x1, x2)])
    return BellmanPointCurve(t=ts, x1=x1, x2=x2, violation=viol)
