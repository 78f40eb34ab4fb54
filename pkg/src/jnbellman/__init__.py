"""Sharp distribution bounds for bounded-mean-oscillation functions.

The package evaluates the extremal (Bellman) functions behind the weak
exponential distribution estimate for BMO functions with the L2-based
norm, builds the optimal test functions attaining them, and verifies
everything against a from-scratch grid oracle that knows nothing beyond
the boundary data and local concavity.
"""

from .closed_form import (
    BellmanValue,
    describe_b,
    eval_b,
    eval_bmax,
    eval_bmin,
    grad_b,
    grad_bmax,
    grad_bmin,
    hessian_b,
    hessian_bmax,
    hessian_bmin,
    value_in_region,
    weak_jn_bound,
)
from .extremizers import build_extremizer, verification_report
from .geometry import (
    Params,
    Regime,
    Region,
    StripDomainError,
    classify_one_jump,
    classify_weak,
    in_strip,
    regime,
)
from .oracle import (
    BoundarySet,
    GridField,
    StripGrid,
    chord_feasible,
    field_gap,
    init_field,
    relax,
    solve,
)
from .piecewise import (
    PiecewiseFunction,
    Segment,
    bmo_norm,
    delivery_curve,
    moments,
    sample,
    superlevel_measure,
)

__version__ = "0.1.0"

__all__ = [
    "BellmanValue",
    "BoundarySet",
    "GridField",
    "Params",
    "PiecewiseFunction",
    "Regime",
    "Region",
    "Segment",
    "StripDomainError",
    "StripGrid",
    "bmo_norm",
    "build_extremizer",
    "chord_feasible",
    "classify_one_jump",
    "classify_weak",
    "delivery_curve",
    "describe_b",
    "eval_b",
    "eval_bmax",
    "eval_bmin",
    "field_gap",
    "grad_b",
    "grad_bmax",
    "grad_bmin",
    "hessian_b",
    "hessian_bmax",
    "hessian_bmin",
    "in_strip",
    "init_field",
    "moments",
    "regime",
    "relax",
    "sample",
    "solve",
    "superlevel_measure",
    "value_in_region",
    "verification_report",
    "weak_jn_bound",
]
