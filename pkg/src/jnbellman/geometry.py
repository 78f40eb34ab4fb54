"""Parabolic strip geometry and region classification.

The state space is the parabolic strip

    Omega = { (x1, x2) : x1**2 <= x2 <= x1**2 + eps**2 },

the set of admissible (mean, second moment) pairs of functions whose
L2 oscillation over every subinterval is at most ``eps``.  For a level
``lam`` the strip splits into subdomains on which the extremal value of
the superlevel-set measure has a single closed form.  Three symmetric
layouts cover the two-sided level set {|u| >= lam} (one per regime of
lam/eps) and a fourth, non-symmetric layout covers the one-sided level
set {u >= lam}.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class StripDomainError(ValueError):
    """Raised when a point lies outside the closed strip (up to tolerance)."""


class Regime(enum.Enum):
    """Which closed-form layout applies, as a function of lam/eps."""

    SMALL = "small"    # 0 <= lam <= eps
    MEDIUM = "medium"  # eps < lam <= 2 eps
    LARGE = "large"    # lam > 2 eps

    @property
    def layout(self) -> str:
        return "weak-" + self.value


@dataclass(frozen=True)
class Params:
    """Problem parameters: level ``lam`` >= 0 and oscillation bound ``eps`` > 0."""

    lam: float
    eps: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and math.isfinite(self.eps)):
            raise ValueError(f"parameters must be finite, got lam={self.lam}, eps={self.eps}")
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.lam < 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")


def regime(p: Params) -> Regime:
    """Regime classification; boundaries lam=eps and lam=2*eps go to the lower regime."""
    if p.lam <= p.eps:
        return Regime.SMALL
    if p.lam <= 2.0 * p.eps:
        return Regime.MEDIUM
    return Regime.LARGE


@dataclass(frozen=True)
class Region:
    """A subdomain tag: index 1..5, side (+/-/center), and the layout it belongs to."""

    index: int
    side: str  # "plus", "minus" or "center"
    layout: str  # "weak-small", "weak-medium", "weak-large" or "one-jump"

    def __str__(self):
        suffix = {"plus": "+", "minus": "-", "center": ""}[self.side]
        return f"Omega{self.index}{suffix}"


def membership_tol(x2: float) -> float:
    """Default strip-membership tolerance, relative in the second coordinate."""
    return 1e-12 * (1.0 + abs(x2))


def in_strip(x1: float, x2: float, p: Params, tol: float | None = None) -> bool:
    """True iff x1**2 - tol <= x2 <= x1**2 + eps**2 + tol."""
    if tol is None:
        tol = membership_tol(x2)
    if not (math.isfinite(x1) and math.isfinite(x2)):
        return False
    lower = x1 * x1
    return lower - tol <= x2 <= lower + p.eps * p.eps + tol


def require_in_strip(x1: float, x2: float, p: Params, tol: float | None = None) -> None:
    if not in_strip(x1, x2, p, tol):
        raise StripDomainError(
            f"point ({x1}, {x2}) lies outside the strip for eps={p.eps}"
        )


def tangent_line_upper(s: float, lam: float, eps: float) -> float:
    """x2 on the line through (lam, lam**2) tangent to the upper parabola at lam+eps."""
    return 2.0 * (lam + eps) * s - lam * lam - 2.0 * eps * lam


def tangent_line_lower(s: float, lam: float, eps: float) -> float:
    """x2 on the line through (lam, lam**2) tangent to the upper parabola at lam-eps."""
    return 2.0 * (lam - eps) * s - lam * lam + 2.0 * eps * lam


def _side_of(x1: float) -> str:
    return "plus" if x1 > 0 else ("minus" if x1 < 0 else "center")


def classify_weak(x1: float, x2: float, p: Params, tol: float | None = None) -> Region:
    """Classify a strip point in the symmetric layout of the active regime.

    Region conditions are evaluated as closed sets in precedence order
    (large: 1 > 2 > 3 > 5 > 4; medium: 1 > 2 > 3 > 4; small: 1 > 2 > 3),
    which makes boundary assignment deterministic.  Adjacent regions'
    formulas agree on shared boundaries, so the precedence is
    observationally irrelevant for values.
    """
    require_in_strip(x1, x2, p, tol)
    lam, eps = p.lam, p.eps
    s = abs(x1)
    side = _side_of(x1)
    reg = regime(p)
    layout = reg.layout

    if reg is Regime.SMALL:
        if x2 >= lam * lam:
            return Region(1, "center", layout)
        if x2 >= lam * s:
            return Region(2, "center", layout)
        return Region(3, side, layout)

    lplus = tangent_line_upper(s, lam, eps)
    lminus = tangent_line_lower(s, lam, eps)

    if reg is Regime.MEDIUM:
        if s >= lam and (s >= lam + eps or x2 <= lplus):
            return Region(1, side, layout)
        if lam - eps <= s <= lam + eps and x2 >= max(lplus, lminus):
            return Region(2, side, layout)
        if x2 <= lam * s:
            return Region(3, side, layout)
        return Region(4, "center", layout)

    # large regime
    if s >= lam and (s >= lam + eps or x2 <= lplus):
        return Region(1, side, layout)
    if lam - eps <= s <= lam + eps and x2 >= max(lplus, lminus):
        return Region(2, side, layout)
    if x2 <= lminus:
        return Region(3, side, layout)
    if s <= eps and x2 >= 2.0 * eps * s:
        return Region(5, "center", layout)
    return Region(4, side, layout)


def classify_one_jump(x1: float, x2: float, p_or_lam, eps: float | None = None,
                      tol: float | None = None) -> Region:
    """Classify a strip point in the one-sided layout.

    ``lam`` may be any real here (negative levels are needed by the
    reflection identity), so the parameters can be passed either as a
    ``Params`` or as a raw ``(lam, eps)`` pair.  Precedence on
    boundaries: 1 > 2 > 3 > 4 > 5, conditions closed.
    """
    if isinstance(p_or_lam, Params):
        lam, eps = p_or_lam.lam, p_or_lam.eps
    else:
        lam = float(p_or_lam)
        if eps is None:
            raise TypeError("eps is required when lam is passed as a scalar")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    require_in_strip(x1, x2, Params(0.0, eps), tol)

    lplus = tangent_line_upper(x1, lam, eps)
    lminus = tangent_line_lower(x1, lam, eps)
    layout = "one-jump"

    if x1 >= lam + eps and x2 >= lplus:
        return Region(1, "center", layout)
    if x2 <= lplus:
        return Region(2, "center", layout)
    if lam - eps <= x1 <= lam + eps and x2 >= max(lplus, lminus):
        return Region(3, "center", layout)
    if x2 <= lminus:
        return Region(4, "center", layout)
    return Region(5, "center", layout)


def sample_strip_points(rng, n: int, p: Params, x1_lo: float, x1_hi: float):
    """n random strip points, uniform in (x1, normalized height) coordinates.

    Returns two float arrays (x1, x2).  Plumbing shared by tests and the
    CLI verification suite.
    """
    x1 = rng.uniform(x1_lo, x1_hi, size=n)
    y = rng.uniform(0.0, 1.0, size=n)
    x2 = x1 * x1 + y * p.eps * p.eps
    return x1, x2
