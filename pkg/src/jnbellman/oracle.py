"""Brute-force oracle: the minimal locally concave majorant by grid relaxation.

The extremal value is the smallest function on the strip that dominates
the 0/1 boundary data on the lower parabola and is concave along every
straight segment contained in the strip.  This module recovers it from
first principles: start from the raw data, then repeatedly lift every
node to the best weighted average over feasible chords through it.  The
iteration is monotone from below and its limit is compared against the
closed forms, which it must match up to discretization error.

Discretization notes (they matter for the guarantees):

* The strip is rectangularized via y = (x2 - x1**2)/eps**2 in [0, 1], so
  the data row lies exactly on the lower parabola.  Chords are straight
  in (x1, x2).
* Chord endpoints are snapped to grid columns, so every field lookup is
  a 1-d linear interpolation in y along one column.  The target function
  is concave on vertical fibers, hence column interpolation never
  overestimates it and the iteration can never climb above the true
  solution (beyond round-off).  This is bilinear interpolation in
  (x1, y) restricted to exact columns.
* An endpoint whose extent is capped by the lower parabola is evaluated
  through the boundary set exactly, at its exact abscissa -- no smearing
  of the data jump across a cell.
* Besides the evenly spaced global directions, every node also tries the
  chord parallel to the parabola tangent at its own abscissa (the only
  feasible direction on the upper boundary) and the chords aimed at the
  jump points of the boundary data, where the extremal segments
  concentrate.  Without these the fixed set of directions misses the
  near-singular geometry by O(1).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from numba import njit, prange

from .geometry import Params, in_strip, membership_tol

__all__ = [
    "BoundarySet",
    "GridField",
    "StripGrid",
    "chord_feasible",
    "export_field_csv",
    "field_gap",
    "init_field",
    "relax",
    "solve",
]

_INF = float("inf")


@dataclass(frozen=True)
class BoundarySet:
    """A finite union of closed intervals of the real line.

    This is the set E of means whose lower-boundary data equals 1.  The
    interval form keeps the in-kernel evaluation exact; the jump points
    (finite interval endpoints) double as chord targets for the
    relaxation.
    """

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        for lo, hi in self.intervals:
            if not lo <= hi:
                raise ValueError(f"empty boundary interval ({lo}, {hi})")

    @classmethod
    def abs_at_least(cls, lam: float) -> "BoundarySet":
        """{u : |u| >= lam} -- the two-sided level set."""
        if lam <= 0.0:
            return cls.all_reals()
        return cls(((-_INF, -lam), (lam, _INF)))

    @classmethod
    def at_least(cls, lam: float) -> "BoundarySet":
        """{u : u >= lam} -- the one-sided level set."""
        return cls(((lam, _INF),))

    @classmethod
    def all_reals(cls) -> "BoundarySet":
        return cls(((-_INF, _INF),))

    @classmethod
    def empty(cls) -> "BoundarySet":
        return cls(())

    def contains(self, u: float, tol: float = 0.0) -> bool:
        return any(lo - tol <= u <= hi + tol for lo, hi in self.intervals)

    __call__ = contains

    def finite_endpoints(self) -> tuple[float, ...]:
        out = []
        for lo, hi in self.intervals:
            if math.isfinite(lo):
                out.append(lo)
            if math.isfinite(hi):
                out.append(hi)
        return tuple(sorted(set(out)))

    def _arrays(self):
        if not self.intervals:
            return (np.array([1.0]), np.array([-1.0]))  # empty: lo > hi never matches
        los = np.array([lo for lo, _ in self.intervals], dtype=np.float64)
        his = np.array([hi for _, hi in self.intervals], dtype=np.float64)
        return los, his


@dataclass(frozen=True)
class StripGrid:
    """Uniform nodes in (x1, y) with y the normalized height above the lower parabola."""

    n1: int
    n2: int
    x1_min: float
    x1_max: float
    params: Params

    def __post_init__(self):
        if self.n1 < 3 or self.n2 < 3:
            raise ValueError("need at least 3 nodes per axis")
        if not self.x1_min < self.x1_max:
            raise ValueError("x1_min must be below x1_max")
        if self.x1_max < self.params.lam + 2.0 * self.params.eps:
            raise ValueError(
                "x1_max must reach lam + 2*eps so the grid sees the region "
                "where the boundary data is 1"
            )

    @property
    def x1_nodes(self) -> np.ndarray:
        return self.x1_min + self.h1 * np.arange(self.n1)

    @property
    def y_nodes(self) -> np.ndarray:
        return np.arange(self.n2) / (self.n2 - 1)

    @property
    def h1(self) -> float:
        return (self.x1_max - self.x1_min) / (self.n1 - 1)

    def x2_nodes(self) -> np.ndarray:
        """x2 at every node, shape (n1, n2)."""
        x1 = self.x1_nodes[:, None]
        y = self.y_nodes[None, :]
        return x1 * x1 + y * self.params.eps ** 2


@dataclass
class GridField:
    """Node values in [0, 1]; the y=0 row carries the data and is never modified."""

    grid: StripGrid
    values: np.ndarray
    boundary_set: BoundarySet
    sweeps: int = 0
    converged: bool | None = None
    log: list = dataclass_field(default_factory=list)


def init_field(grid: StripGrid, e_set) -> GridField:
    """Zeroth iteration: boundary data on y=0, zero everywhere else."""
    if not isinstance(e_set, BoundarySet):
        raise TypeError(
            "the boundary set must be a BoundarySet (finite union of closed "
            "intervals); the induction needs exact jump locations"
        )
    values = np.zeros((grid.n1, grid.n2))
    for i, u in enumerate(grid.x1_nodes):
        values[i, 0] = 1.0 if e_set.contains(u) else 0.0
    return GridField(grid=grid, values=values, boundary_set=e_set)


def chord_feasible(a, b, p: Params, tol: float | None = None) -> bool:
    """Whether the whole segment [a, b] stays inside the closed strip.

    Exact: with both endpoints in the strip the lower constraint holds by
    convexity, and the upper one is settled by maximizing the concave
    quadratic x2(t) - x1(t)**2 - eps**2 along the segment in closed form.
    """
    a1, a2 = a
    b1, b2 = b
    if tol is None:
        tol = membership_tol(max(abs(a2), abs(b2)))
    if not (in_strip(a1, a2, p, tol) and in_strip(b1, b2, p, tol)):
        return False
    d1 = b1 - a1
    d2 = b2 - a2
    eps2 = p.eps * p.eps
    q0 = a2 - a1 * a1 - eps2
    q1 = d2 - 2.0 * a1 * d1
    qmax = max(q0, q0 + q1 - d1 * d1)
    if d1 != 0.0:
        t_star = q1 / (2.0 * d1 * d1)
        if 0.0 < t_star < 1.0:
            qmax = max(qmax, q0 + q1 * t_star - d1 * d1 * t_star * t_star)
    return qmax <= tol


def _pair_fractions(radii: int) -> np.ndarray:
    """(radii, 2) extent fraction pairs; always includes the full chord (1, 1).

    Geometric fractions on both sides: the binding sub-chords sit at
    arbitrary asymmetric positions (fully stretched ones overshoot into
    regions where the function bends), so both arms need independent
    scales.
    """
    if radii < 1:
        raise ValueError("radii must be at least 1")
    m = max(int(math.ceil(math.sqrt(radii))), 1)
    fractions = [2.0 ** (-k) for k in range(m)]
    pairs = [(f, g) for f in fractions for g in fractions]
    pairs.sort(key=lambda fg: (-(fg[0] * fg[1]), -max(fg[0], fg[1])))
    return np.array(pairs[:radii], dtype=np.float64)


def _direction_table(directions: int) -> np.ndarray:
    """Evenly spaced undirected chord directions, including the two axes."""
    if directions < 2:
        raise ValueError("need at least 2 global directions")
    theta = math.pi * np.arange(directions) / directions
    u = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    vertical = np.abs(u[:, 0]) < 1e-12
    u[vertical, 0] = 0.0
    u[vertical, 1] = 1.0
    return u


@njit(cache=True)
def _data_at(u, e_los, e_his, tol):
    for m in range(e_los.shape[0]):
        if e_los[m] - tol <= u <= e_his[m] + tol:
            return 1.0
    return 0.0


@njit(cache=True)
def _column_value(old, k, ye, n2):
    """Linear interpolation in y along column k; exact at nodes."""
    if ye <= 0.0:
        return old[k, 0]
    if ye >= 1.0:
        return old[k, n2 - 1]
    jf = ye * (n2 - 1)
    j = int(jf)
    if j > n2 - 2:
        j = n2 - 2
    w = jf - j
    return (1.0 - w) * old[k, j] + w * old[k, j + 1]


@njit(cache=True)
def _top_row_value(old, x1e, x1_min, h1, n1, n2):
    """Conservative estimate along the y=1 row (upper-parabola endpoints).

    The target profile along the top row has convex stretches, where the
    plain secant overestimates; amplified through near-degenerate chord
    weights that excess would feed back and pile up.  Taking the minimum
    of the in-cell interpolation and the secant extrapolations from both
    neighbouring cells underestimates convex and concave stretches alike
    (exact on affine ones), which keeps the iteration below the true
    solution.
    """
    kf = (x1e - x1_min) / h1
    if kf <= 0.0:
        return old[0, n2 - 1]
    if kf >= n1 - 1:
        return old[n1 - 1, n2 - 1]
    k = int(kf)
    if k > n1 - 2:
        k = n1 - 2
    w = kf - k
    v = (1.0 - w) * old[k, n2 - 1] + w * old[k + 1, n2 - 1]
    if k >= 1:
        left = old[k, n2 - 1] + w * (old[k, n2 - 1] - old[k - 1, n2 - 1])
        if left < v:
            v = left
    if k + 2 <= n1 - 1:
        right = old[k + 1, n2 - 1] + (1.0 - w) * (old[k + 1, n2 - 1] - old[k + 2, n2 - 1])
        if right < v:
            v = right
    if v < 0.0:
        v = 0.0
    return v


# endpoint cap kinds: how the feasible extent on one side terminates
_CAP_DATA = 0   # lower parabola: exact boundary data at the exact abscissa
_CAP_TOP = 1    # upper parabola: interpolate along the y=1 row
_CAP_EDGE = 2   # x1 range of the grid: snap to the edge column


@njit(cache=True)
def _endpoint(old, side, frac, t_ext, cap_kind, p1, p2, u1, u2, i,
              x1_min, h1, eps2, n1, n2, e_los, e_his, e_tol):
    """Value of one chord endpoint; returns (t, value), t <= 0 meaning invalid.

    Full-extent endpoints land exactly on whatever capped the extent;
    partial ones are snapped back to the previous grid column so the
    field lookup is a pure y-interpolation along that column.
    """
    w1 = side * u1
    w2 = side * u2
    if u1 == 0.0:
        t = frac * t_ext
        if frac == 1.0 and cap_kind == _CAP_DATA:
            return t, _data_at(p1, e_los, e_his, e_tol)
        ye = (p2 + t * w2 - p1 * p1) / eps2
        return t, _column_value(old, i, ye, n2)
    if frac == 1.0 and cap_kind == _CAP_DATA:
        return t_ext, _data_at(p1 + t_ext * w1, e_los, e_his, e_tol)
    if frac == 1.0 and cap_kind == _CAP_TOP:
        return t_ext, _top_row_value(old, p1 + t_ext * w1, x1_min, h1, n1, n2)
    xt = p1 + frac * t_ext * w1
    kf = (xt - x1_min) / h1
    k = int(kf)
    if w1 > 0.0:
        if k <= i:
            return -1.0, 0.0
    else:
        if kf > k:
            k += 1
        if k >= i:
            return -1.0, 0.0
    xe = x1_min + k * h1
    t = (xe - p1) / w1
    if t <= 0.0:
        return -1.0, 0.0
    ye = (p2 + t * w2 - xe * xe) / eps2
    return t, _column_value(old, k, ye, n2)


@njit(cache=True, parallel=True)
def _sweep(old, new, x1_min, h1, eps, fracs, dirs, specials, e_los, e_his):
    n1 = old.shape[0]
    n2 = old.shape[1]
    eps2 = eps * eps
    n_dirs = dirs.shape[0]
    n_special = specials.shape[0]
    n_pairs = fracs.shape[0]
    x1_max = x1_min + h1 * (n1 - 1)
    e_tol = 1e-9
    for i in prange(n1):
        p1 = x1_min + h1 * i
        for j in range(1, n2):
            y = j / (n2 - 1.0)
            c0 = y * eps2               # p2 - p1^2 > 0 off the data row
            p2 = p1 * p1 + c0
            ss = math.sqrt(max(eps2 - c0, 0.0))  # height below the upper parabola
            best = old[i, j]
            for d in range(n_dirs + 3 + n_special):
                # Extents t in [-t_minus, t_plus] along p + t*u must stay
                # above the lower parabola, below the upper one and inside
                # the grid columns; each side remembers what capped it.
                if d < n_dirs + 3 and d >= n_dirs:
                    # chords parallel to the parabola tangent at p1 and the
                    # two local extremal-tangent directions at abscissas
                    # p1 +- ss; their geometry is closed-form, and going
                    # through the generic quadratic would lose the exact
                    # cancellation that keeps them feasible.
                    if d == n_dirs:
                        slope = 2.0 * p1
                    elif d == n_dirs + 1:
                        slope = 2.0 * (p1 + ss)
                    else:
                        slope = 2.0 * (p1 - ss)
                    nrm = math.sqrt(1.0 + slope * slope)
                    u1 = 1.0 / nrm
                    u2 = slope / nrm
                    bc = (slope - 2.0 * p1) / nrm   # = +-2*ss/nrm exactly
                    a2c = u1 * u1
                    root = math.sqrt(bc * bc + 4.0 * a2c * c0)
                    t_plus = (bc + root) / (2.0 * a2c)
                    t_minus = (root - bc) / (2.0 * a2c)
                    kind_plus = _CAP_DATA
                    kind_minus = _CAP_DATA
                    # the extremal-tangent chords touch the upper parabola
                    # at t = bc/(2*a2c) on the side bc points to
                    if d == n_dirs + 1 and ss > 0.0:
                        tangency = bc / (2.0 * a2c)
                        if tangency < t_plus:
                            t_plus = tangency
                            kind_plus = _CAP_TOP
                    elif d == n_dirs + 2 and ss > 0.0:
                        tangency = -bc / (2.0 * a2c)
                        if tangency < t_minus:
                            t_minus = tangency
                            kind_minus = _CAP_TOP
                else:
                    if d < n_dirs:
                        u1 = dirs[d, 0]
                        u2 = dirs[d, 1]
                    else:
                        q = specials[d - n_dirs - 3]
                        v1 = q - p1
                        v2 = q * q - p2
                        nrm = math.sqrt(v1 * v1 + v2 * v2)
                        if nrm < 1e-30:
                            continue
                        u1 = v1 / nrm
                        u2 = v2 / nrm
                    if u1 == 0.0:
                        if u2 == 0.0:
                            continue
                        uu = abs(u2)
                        t_plus = (eps2 - c0) / uu
                        t_minus = c0 / uu
                        kind_plus = _CAP_TOP
                        kind_minus = _CAP_DATA
                        if u2 < 0.0:
                            t_plus, t_minus = t_minus, t_plus
                            kind_plus = _CAP_DATA
                            kind_minus = _CAP_TOP
                    else:
                        bc = u2 - 2.0 * p1 * u1
                        a2c = u1 * u1
                        root = math.sqrt(bc * bc + 4.0 * a2c * c0)
                        t_plus = (bc + root) / (2.0 * a2c)
                        t_minus = (root - bc) / (2.0 * a2c)
                        kind_plus = _CAP_DATA
                        kind_minus = _CAP_DATA
                        # upper-parabola blocking interval (roots share a sign)
                        disc_q = bc * bc + 4.0 * a2c * (c0 - eps2)
                        if disc_q > 0.0:
                            root_q = math.sqrt(disc_q)
                            s_lo = (bc - root_q) / (2.0 * a2c)
                            s_hi = (bc + root_q) / (2.0 * a2c)
                            if s_lo >= 0.0:
                                if s_lo < t_plus:
                                    t_plus = s_lo
                                    kind_plus = _CAP_TOP
                            elif s_hi <= 0.0:
                                if -s_hi < t_minus:
                                    t_minus = -s_hi
                                    kind_minus = _CAP_TOP
                if u1 != 0.0:
                    if u1 > 0.0:
                        t_edge = (x1_max - p1) / u1
                        if t_edge < t_plus:
                            t_plus = t_edge
                            kind_plus = _CAP_EDGE
                        t_edge = (p1 - x1_min) / u1
                        if t_edge < t_minus:
                            t_minus = t_edge
                            kind_minus = _CAP_EDGE
                    else:
                        t_edge = (x1_min - p1) / u1
                        if t_edge < t_plus:
                            t_plus = t_edge
                            kind_plus = _CAP_EDGE
                        t_edge = (x1_max - p1) / (-u1)
                        if t_edge < t_minus:
                            t_minus = t_edge
                            kind_minus = _CAP_EDGE
                if t_plus <= 0.0 or t_minus <= 0.0:
                    continue

                for r in range(n_pairs):
                    tp, fp_val = _endpoint(
                        old, 1.0, fracs[r, 0], t_plus, kind_plus, p1, p2,
                        u1, u2, i, x1_min, h1, eps2, n1, n2, e_los, e_his, e_tol)
                    if tp <= 0.0:
                        continue
                    tm, fm_val = _endpoint(
                        old, -1.0, fracs[r, 1], t_minus, kind_minus, p1, p2,
                        u1, u2, i, x1_min, h1, eps2, n1, n2, e_los, e_his, e_tol)
                    if tm <= 0.0:
                        continue
                    cand = (tm * fp_val + tp * fm_val) / (tp + tm)
                    if cand > best:
                        best = cand
            new[i, j] = best


def relax(field: GridField, directions: int = 64, radii: int = 24):
    """One monotone sweep; returns the new field and the sup-norm increase.

    Jacobi discipline: every node reads the previous snapshot and writes
    its own cell, so the result is deterministic regardless of the worker
    count and values never decrease.  The data row is left untouched.
    """
    grid = field.grid
    old = field.values
    new = old.copy()
    e_los, e_his = field.boundary_set._arrays()
    _sweep(
        old, new, grid.x1_min, grid.h1, grid.params.eps,
        _pair_fractions(radii), _direction_table(directions),
        np.asarray(field.boundary_set.finite_endpoints(), dtype=np.float64),
        e_los, e_his,
    )
    delta = float(np.max(new - old))
    out = GridField(grid=grid, values=new, boundary_set=field.boundary_set,
                    sweeps=field.sweeps + 1, converged=field.converged,
                    log=list(field.log))
    return out, delta


def solve(grid: StripGrid, e_set: BoundarySet, tol: float = 1e-6,
          max_sweeps: int = 600, directions: int = 64, radii: int = 24,
          callback=None) -> GridField:
    """Relax until the sweep increment drops below tol (or sweeps run out).

    The returned field carries ``converged`` and a per-sweep log of
    (sweep, delta, elapsed seconds).  Non-convergence is flagged, not
    raised; the monotone-from-below structure still makes the field a
    valid lower estimate.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    field = init_field(grid, e_set)
    start = time.perf_counter()
    field.converged = False
    for sweep in range(1, max_sweeps + 1):
        field, delta = relax(field, directions, radii)
        field.log.append((sweep, delta, time.perf_counter() - start))
        if callback is not None:
            callback(sweep, delta, field)
        if delta < tol:
            field.converged = True
            break
    return field


def field_gap(field: GridField, reference, edge_margin: float = 0.0) -> float:
    """Sup-norm distance to a reference callable over nodes, x1 edges excluded."""
    grid = field.grid
    x1 = grid.x1_nodes
    keep = (x1 >= grid.x1_min + edge_margin) & (x1 <= grid.x1_max - edge_margin)
    x2 = grid.x2_nodes()
    gap = 0.0
    for i in np.nonzero(keep)[0]:
        for j in range(grid.n2):
            gap = max(gap, abs(field.values[i, j] - reference(x1[i], x2[i, j])))
    return gap


def export_field_csv(field: GridField, path, reference=None) -> None:
    """CSV dump (x1, y, x2, value, closed_form_value, abs_diff), 12 digits, LF."""
    grid = field.grid
    x1 = grid.x1_nodes
    y = grid.y_nodes
    x2 = grid.x2_nodes()
    with open(path, "w", newline="") as fh:
        fh.write("x1,y,x2,value,closed_form_value,abs_diff\n")
        for i in range(grid.n1):
            for j in range(grid.n2):
                v = field.values[i, j]
                if reference is not None:
                    ref = reference(x1[i], x2[i, j])
                    fh.write(f"{x1[i]:.12g},{y[j]:.12g},{x2[i, j]:.12g},"
                             f"{v:.12g},{ref:.12g},{abs(v - ref):.12g}\n")
                else:
                    fh.write(f"{x1[i]:.12g},{y[j]:.12g},{x2[i, j]:.12g},"
                             f"{v:.12g},,\n")
