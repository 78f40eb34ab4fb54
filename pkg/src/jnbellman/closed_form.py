"""Closed-form extremal values on the strip, with gradients and Hessians.

``eval_b`` is the sharp bound for the two-sided superlevel set
{|phi| >= lam}: the maximal fraction of an interval where a function with
prescribed mean x1, second moment x2 and oscillation norm <= eps can
reach level lam in absolute value.  ``eval_bmax`` / ``eval_bmin`` are the
one-sided sup/inf variants for {phi >= lam}; they admit any real lam and
are tied together by the reflection identity

    eval_bmin(x1, x2; lam) == 1 - eval_bmax(-x1, x2; -lam)

away from the singular boundary point (lam, lam**2), where both equal 1.

Values are piecewise: constant, affine, a rational form shared by all
layouts, and an exponential form carrying the e**(-lam/eps) decay.  The
pieces glue continuously (C1 across the curved interfaces), every value
lies in [0, 1], and the functions are locally concave along straight
segments contained in the strip; the test suite checks all of this
against finite differences and midpoint sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    Params,
    Region,
    StripDomainError,
    classify_one_jump,
    classify_weak,
    tangent_line_lower,
    tangent_line_upper,
)

__all__ = [
    "BellmanValue",
    "describe_b",
    "eval_b",
    "eval_bmax",
    "eval_bmin",
    "grad_b",
    "grad_bmax",
    "grad_bmin",
    "hessian_b",
    "hessian_bmax",
    "hessian_bmin",
    "value_in_region",
    "weak_jn_bound",
]


@dataclass(frozen=True)
class BellmanValue:
    """A value together with the region it came from and optional derivatives."""

    value: float
    region: Region
    gradient: tuple[float, float] | None = None
    hessian: np.ndarray | None = None


def _coerce(p_or_lam, eps):
    if isinstance(p_or_lam, Params):
        return p_or_lam.lam, p_or_lam.eps
    if eps is None:
        raise TypeError("eps is required when lam is passed as a scalar")
    return float(p_or_lam), float(eps)


def _sqrt_defect(x1: float, x2: float, eps: float) -> float:
    """sqrt(eps**2 - x2 + x1**2), clamping round-off just above the upper parabola."""
    arg = eps * eps - x2 + x1 * x1
    if arg < 0.0:
        if arg < -1e-12 * (1.0 + abs(x2) + x1 * x1):
            raise StripDomainError(f"point ({x1}, {x2}) above the upper parabola")
        arg = 0.0
    return math.sqrt(arg)


def _oscillation(x1: float, x2: float) -> float:
    """x2 - x1**2 clamped at 0 (membership tolerance admits tiny negatives)."""
    return max(x2 - x1 * x1, 0.0)


# The rational form (x2 - x1**2) / (x2 + lam**2 - 2 lam x1) and the
# exponential form (e/2)(1 - R) exp((x1 - lam)/eps + R) with
# R = sqrt(eps**2 - x2 + x1**2)/eps are written for signed x1; the
# symmetric layouts call them with s = |x1| and adjust gradient signs.

def _rational(x1, x2, lam):
    g = _oscillation(x1, x2)
    d = g + (lam - x1) ** 2
    if d <= 0.0:
        # only at the singular point (lam, lam**2)
        return 1.0
    return g / d


def _exp_form(x1, x2, lam, eps):
    ss = _sqrt_defect(x1, x2, eps)
    r_up = ss / eps
    return 0.5 * math.e * (1.0 - r_up) * math.exp((x1 - lam) / eps + r_up)


def value_in_region(x1: float, x2: float, lam: float, eps: float, region: Region) -> float:
    """Evaluate one region's formula directly, ignoring membership.

    Used to check that adjacent formulas agree on shared boundaries, which
    is what makes the precedence-based classification observationally
    irrelevant.
    """
    s = abs(x1) if region.layout.startswith("weak") else x1
    i = region.index
    if region.layout == "weak-small":
        if i == 1:
            return 1.0
        if i == 2:
            return x2 / (lam * lam)
        return _rational(s, x2, lam)
    if region.layout == "weak-medium":
        if i == 1:
            return 1.0
        if i == 2:
            num = (2.0 * (lam * lam - eps * eps) * s - (lam - eps) * x2
                   + lam * (2.0 * eps * eps + eps * lam - lam * lam))
            return num / (2.0 * eps * lam * lam)
        if i == 3:
            return _rational(s, x2, lam)
        return x2 / (lam * lam)
    if region.layout == "weak-large":
        if i == 1:
            return 1.0
        if i == 2:
            return 1.0 - (x2 - tangent_line_upper(s, lam, eps)) / (8.0 * eps * eps)
        if i == 3:
            return _rational(s, x2, lam)
        if i == 4:
            return _exp_form(s, x2, lam, eps)
        return x2 / (4.0 * eps * eps) * math.exp(2.0 - lam / eps)
    if region.layout == "one-jump":
        if i in (1, 2):
            return 1.0
        if i == 3:
            return 1.0 - (x2 - tangent_line_upper(s, lam, eps)) / (8.0 * eps * eps)
        if i == 4:
            return _rational(s, x2, lam)
        return _exp_form(s, x2, lam, eps)
    raise ValueError(f"unknown layout {region.layout!r}")


def eval_b(x1: float, x2: float, p: Params, tol: float | None = None) -> float:
    """Sharp two-sided bound at a strip point; symmetric in x1, in [0, 1]."""
    region = classify_weak(x1, x2, p, tol)
    return min(1.0, max(0.0, value_in_region(x1, x2, p.lam, p.eps, region)))


def eval_bmax(x1, x2, p_or_lam, eps=None, tol=None) -> float:
    """One-sided sup bound ({phi >= lam}); lam may be any real."""
    lam, eps = _coerce(p_or_lam, eps)
    region = classify_one_jump(x1, x2, lam, eps, tol)
    return min(1.0, max(0.0, value_in_region(x1, x2, lam, eps, region)))


def eval_bmin(x1, x2, p_or_lam, eps=None, tol=None) -> float:
    """One-sided inf bound; equals 1 at the singular point (lam, lam**2)."""
    lam, eps = _coerce(p_or_lam, eps)
    region = classify_one_jump(x1, x2, lam, eps, tol)
    i = region.index
    if i in (4, 5):
        return 0.0
    if i == 3:
        v = (x2 - tangent_line_lower(x1, lam, eps)) / (8.0 * eps * eps)
    elif i == 2:
        g = _oscillation(x1, x2)
        d = g + (lam - x1) ** 2
        if d <= 0.0:
            return 1.0  # the singular point: only the constant test function
        v = 1.0 - g / d
    else:  # region 1
        ss = _sqrt_defect(x1, x2, eps)
        r_up = ss / eps
        v = 1.0 - 0.5 * math.e * (1.0 - r_up) * math.exp((lam - x1) / eps + r_up)
    return min(1.0, max(0.0, v))


def weak_jn_bound(p: Params) -> float:
    """Sharp constant in the weak distribution estimate; equals eval_b at (0, eps**2)."""
    lam, eps = p.lam, p.eps
    if lam <= eps:
        return 1.0
    if lam <= 2.0 * eps:
        return eps * eps / (lam * lam)
    return math.e ** 2 / 4.0 * math.exp(-lam / eps)


# ---------------------------------------------------------------------------
# gradients


def _grad_rational(x1, x2, lam):
    g = _oscillation(x1, x2)
    d = g + (lam - x1) ** 2
    gx1 = 2.0 * (lam - x1) * (x2 - lam * x1) / (d * d)
    gx2 = (lam - x1) ** 2 / (d * d)
    return gx1, gx2


def _grad_exp(x1, x2, lam, eps):
    ss = _sqrt_defect(x1, x2, eps)
    ee = math.exp((x1 - lam) / eps + ss / eps)
    gx1 = 0.5 * math.e * (eps - x1 - ss) / (eps * eps) * ee
    gx2 = math.e / (4.0 * eps * eps) * ee
    return gx1, gx2


def _grad_weak(x1, x2, lam, eps, region):
    s = abs(x1)
    sgn = 1.0 if x1 >= 0 else -1.0
    i = region.index
    if region.layout == "weak-small":
        if i == 1:
            return 0.0, 0.0
        if i == 2:
            return 0.0, 1.0 / (lam * lam)
        gx1, gx2 = _grad_rational(s, x2, lam)
        return sgn * gx1, gx2
    if region.layout == "weak-medium":
        if i == 1:
            return 0.0, 0.0
        if i == 2:
            return (sgn * (lam * lam - eps * eps) / (eps * lam * lam),
                    -(lam - eps) / (2.0 * eps * lam * lam))
        if i == 3:
            gx1, gx2 = _grad_rational(s, x2, lam)
            return sgn * gx1, gx2
        return 0.0, 1.0 / (lam * lam)
    # weak-large
    if i == 1:
        return 0.0, 0.0
    if i == 2:
        return sgn * (lam + eps) / (4.0 * eps * eps), -1.0 / (8.0 * eps * eps)
    if i == 3:
        gx1, gx2 = _grad_rational(s, x2, lam)
        return sgn * gx1, gx2
    if i == 4:
        gx1, gx2 = _grad_exp(s, x2, lam, eps)
        return sgn * gx1, gx2
    return 0.0, math.exp(2.0 - lam / eps) / (4.0 * eps * eps)


def _check_margin(x1, x2, p_or_lam, eps, margin, classify, current):
    if margin <= 0:
        return
    for dx1, dx2 in ((margin, 0.0), (-margin, 0.0), (0.0, margin), (0.0, -margin)):
        try:
            other = classify(x1 + dx1, x2 + dx2, p_or_lam, eps)
        except StripDomainError:
            continue
        if other != current:
            raise StripDomainError(
                f"point ({x1}, {x2}) is within {margin} of a region boundary "
                f"({current} vs {other}); derivatives may jump there"
            )


def grad_b(x1: float, x2: float, p: Params, margin: float = 0.0):
    """Analytic gradient of eval_b at a region-interior point.

    With ``margin > 0`` the four compass perturbations must classify into
    the same region, otherwise the evaluation is refused (the gradient can
    jump across region boundaries).
    """
    region = classify_weak(x1, x2, p)
    _check_margin(x1, x2, p, None, margin,
                  lambda a, b, q, _e: classify_weak(a, b, q), region)
    return _grad_weak(x1, x2, p.lam, p.eps, region)


def grad_bmax(x1, x2, p_or_lam, eps=None, margin: float = 0.0):
    lam, eps = _coerce(p_or_lam, eps)
    region = classify_one_jump(x1, x2, lam, eps)
    _check_margin(x1, x2, lam, eps, margin, classify_one_jump, region)
    i = region.index
    if i in (1, 2):
        return 0.0, 0.0
    if i == 3:
        return (lam + eps) / (4.0 * eps * eps), -1.0 / (8.0 * eps * eps)
    if i == 4:
        return _grad_rational(x1, x2, lam)
    return _grad_exp(x1, x2, lam, eps)


def grad_bmin(x1, x2, p_or_lam, eps=None, margin: float = 0.0):
    lam, eps = _coerce(p_or_lam, eps)
    region = classify_one_jump(x1, x2, lam, eps)
    _check_margin(x1, x2, lam, eps, margin, classify_one_jump, region)
    i = region.index
    if i in (4, 5):
        return 0.0, 0.0
    if i == 3:
        return -(lam - eps) / (4.0 * eps * eps), 1.0 / (8.0 * eps * eps)
    if i == 2:
        gx1, gx2 = _grad_rational(x1, x2, lam)
        return -gx1, -gx2
    ss = _sqrt_defect(x1, x2, eps)
    ee = math.exp((lam - x1) / eps + ss / eps)
    return (0.5 * math.e * (x1 + eps - ss) / (eps * eps) * ee,
            -math.e / (4.0 * eps * eps) * ee)


# ---------------------------------------------------------------------------
# Hessians


def _hess_rational(x1, x2, lam, sgn=1.0):
    g = _oscillation(x1, x2)
    d = g + (lam - x1) ** 2
    d3 = d ** 3
    h11 = -2.0 * (lam * lam - x2) ** 2 / d3
    h12 = sgn * 2.0 * (lam * lam - x2) * (lam - x1) / d3
    h22 = -2.0 * (lam - x1) ** 2 / d3
    return np.array([[h11, h12], [h12, h22]])


def _hess_exp(x1, x2, lam, eps, sgn=1.0):
    ss = _sqrt_defect(x1, x2, eps)
    if ss == 0.0:
        raise StripDomainError(
            f"curvature of the exponential piece is unbounded on the upper parabola "
            f"(point ({x1}, {x2}))"
        )
    r = (x1 + ss) / eps
    pref = math.exp(1.0 + r - lam / eps) / (8.0 * eps ** 3 * ss)
    return pref * np.array([[-4.0 * eps * eps * r * r, sgn * 2.0 * eps * r],
                            [sgn * 2.0 * eps * r, -1.0]])


_ZERO2 = np.zeros((2, 2))


def hessian_b(x1: float, x2: float, p: Params, margin: float = 0.0) -> np.ndarray:
    """Analytic Hessian of eval_b; zero on affine regions, rank one elsewhere.

    The curved pieces are degenerate (vanishing determinant), the sign of
    the nonzero eigenvalue being negative: the graph is ruled by straight
    extremal segments.
    """
    region = classify_weak(x1, x2, p)
    _check_margin(x1, x2, p, None, margin,
                  lambda a, b, q, _e: classify_weak(a, b, q), region)
    s = abs(x1)
    sgn = 1.0 if x1 >= 0 else -1.0
    i = region.index
    if region.layout == "weak-large":
        if i == 3:
            return _hess_rational(s, x2, p.lam, sgn)
        if i == 4:
            return _hess_exp(s, x2, p.lam, p.eps, sgn)
        return _ZERO2.copy()
    if i == 3:
        return _hess_rational(s, x2, p.lam, sgn)
    return _ZERO2.copy()


def hessian_bmax(x1, x2, p_or_lam, eps=None, margin: float = 0.0) -> np.ndarray:
    lam, eps = _coerce(p_or_lam, eps)
    region = classify_one_jump(x1, x2, lam, eps)
    _check_margin(x1, x2, lam, eps, margin, classify_one_jump, region)
    i = region.index
    if i == 4:
        return _hess_rational(x1, x2, lam)
    if i == 5:
        return _hess_exp(x1, x2, lam, eps)
    return _ZERO2.copy()


def hessian_bmin(x1, x2, p_or_lam, eps=None, margin: float = 0.0) -> np.ndarray:
    lam, eps = _coerce(p_or_lam, eps)
    region = classify_one_jump(x1, x2, lam, eps)
    _check_margin(x1, x2, lam, eps, margin, classify_one_jump, region)
    i = region.index
    if i == 2:
        return -_hess_rational(x1, x2, lam)
    if i == 1:
        ss = _sqrt_defect(x1, x2, eps)
        if ss == 0.0:
            raise StripDomainError(
                f"curvature unbounded on the upper parabola (point ({x1}, {x2}))"
            )
        rm = (ss - x1) / eps
        pref = math.e * math.exp((lam - x1) / eps + ss / eps) / (8.0 * eps ** 3 * ss)
        return pref * np.array([[4.0 * eps * eps * rm * rm, 2.0 * eps * rm],
                                [2.0 * eps * rm, 1.0]])
    return _ZERO2.copy()


def describe_b(x1: float, x2: float, p: Params, gradient: bool = False,
               hessian: bool = False) -> BellmanValue:
    """eval_b bundled with its region and, when requested, derivatives."""
    region = classify_weak(x1, x2, p)
    value = min(1.0, max(0.0, value_in_region(x1, x2, p.lam, p.eps, region)))
    grad = grad_b(x1, x2, p) if gradient else None
    hess = hessian_b(x1, x2, p) if hessian else None
    return BellmanValue(value=value, region=region, gradient=grad, hessian=hess)
