"""Command-line interface.

Subcommands: ``eval`` (value/region/regime at a point, JSON), ``grid``
(CSV table of values over a strip grid), ``extremizer`` (segment list as
JSON or a sample table as CSV, with a verification block), ``verify``
(randomized invariant suite), ``oracle`` (grid relaxation compared
against the closed form) and ``jn-bound`` (the sharp constant).

Exit codes: 0 on success, 1 when a verification or convergence check
fails, 2 on usage errors.  All randomness flows from ``--seed``, and a
repeated invocation writes byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import sys

from .closed_form import describe_b, eval_b, grad_b, weak_jn_bound
from .extremizers import build_extremizer, sample_rows, to_json_dict, verification_report
from .geometry import Params, StripDomainError, regime
from .oracle import BoundarySet, StripGrid, export_field_csv, field_gap, solve
from .verify import run_verification

_DEFAULT_SEED = 20120521


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jnbellman",
        description="Sharp oscillation-vs-level distribution bounds: closed forms, "
                    "extremal test functions and a concave-relaxation oracle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_params(sp):
        sp.add_argument("--lambda", dest="lam", type=float, required=True,
                        help="level threshold (>= 0)")
        sp.add_argument("--eps", type=float, required=True,
                        help="oscillation norm bound (> 0)")

    sp = sub.add_parser("eval", help="evaluate the sharp bound at a strip point")
    add_params(sp)
    sp.add_argument("--x1", type=float, required=True, help="mean coordinate")
    sp.add_argument("--x2", type=float, required=True, help="second-moment coordinate")
    sp.add_argument("--out", help="write JSON here instead of stdout")

    sp = sub.add_parser("grid", help="CSV table of values over an n1 x n2 strip grid")
    add_params(sp)
    sp.add_argument("--n1", type=int, default=81)
    sp.add_argument("--n2", type=int, default=41)
    sp.add_argument("--out", help="write CSV here instead of stdout")

    sp = sub.add_parser("extremizer", help="optimal test function for a point (large regime)")
    add_params(sp)
    sp.add_argument("--x1", type=float, required=True)
    sp.add_argument("--x2", type=float, required=True)
    sp.add_argument("--points", type=int, default=256, help="CSV sample count")
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.add_argument("--out", help="write here instead of stdout")

    sp = sub.add_parser("verify", help="run the randomized invariant suite")
    add_params(sp)
    sp.add_argument("--points", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=_DEFAULT_SEED)

    sp = sub.add_parser("oracle", help="grid relaxation vs the closed form")
    add_params(sp)
    sp.add_argument("--n1", type=int, default=161)
    sp.add_argument("--n2", type=int, default=81)
    sp.add_argument("--directions", type=int, default=64)
    sp.add_argument("--radii", type=int, default=24)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--max-sweeps", type=int, default=600)
    sp.add_argument("--out", help="write the comparison CSV here")

    sp = sub.add_parser("jn-bound", help="sharp constant of the weak distribution bound")
    add_params(sp)

    return parser


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_eval(args) -> int:
    p = Params(args.lam, args.eps)
    bv = describe_b(args.x1, args.x2, p)
    try:
        gradient = list(grad_b(args.x1, args.x2, p, margin=1e-7))
    except StripDomainError:
        gradient = None
    payload = {
        "value": bv.value,
        "region": str(bv.region),
        "regime": regime(p).value,
        "gradient": gradient,
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


def _cmd_grid(args) -> int:
    p = Params(args.lam, args.eps)
    span = p.lam + 2.0 * p.eps
    lines = ["x1,y,x2,value"]
    for i in range(args.n1):
        x1 = -span + 2.0 * span * i / (args.n1 - 1)
        for j in range(args.n2):
            y = j / (args.n2 - 1)
            x2 = x1 * x1 + y * p.eps ** 2
            lines.append(f"{x1:.12g},{y:.12g},{x2:.12g},{eval_b(x1, x2, p):.12g}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_extremizer(args) -> int:
    p = Params(args.lam, args.eps)
    phi = build_extremizer(args.x1, args.x2, p)
    if args.format == "csv":
        lines = ["t,phi"]
        for t, v in sample_rows(phi, args.points):
            lines.append(f"{t:.12g},{v:.12g}")
        _emit("\n".join(lines) + "\n", args.out)
        return 0
    payload = to_json_dict(phi)
    payload["verification"] = verification_report(phi)
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    report = payload["verification"]
    ok = (report["moment_error"] <= 1e-9
          and report["sharpness_error"] <= 1e-9
          and report["norm_slack"] >= -1e-6
          and report["delivery_max_violation"] <= 1e-9)
    return 0 if ok else 1


def _cmd_verify(args) -> int:
    p = Params(args.lam, args.eps)
    report = run_verification(p, n_points=args.points, seed=args.seed)
    print(f"verification: lam={p.lam} eps={p.eps} points={args.points} seed={args.seed}")
    for check in report.checks:
        print(check.line())
    n_pass = sum(c.passed for c in report.checks)
    print(f"{n_pass}/{len(report.checks)} checks passed")
    return 0 if report.all_passed else 1


def _cmd_oracle(args) -> int:
    p = Params(args.lam, args.eps)
    span = max(p.lam + 2.0 * p.eps, 5.0 * p.eps)
    grid = StripGrid(args.n1, args.n2, -span, span, p)
    field = solve(grid, BoundarySet.abs_at_least(p.lam), tol=args.tol,
                  max_sweeps=args.max_sweeps, directions=args.directions, radii=args.radii)
    reference = lambda a, b: eval_b(a, b, p)
    gap = field_gap(field, reference, edge_margin=p.eps)
    if args.out:
        export_field_csv(field, args.out, reference)
    last_delta = field.log[-1][1] if field.log else float("nan")
    print(f"sweeps={field.sweeps} converged={field.converged} last_delta={last_delta:.3e}")
    print(f"sup_gap_vs_closed_form={gap:.6g} (edge margin {p.eps:g})")
    return 0 if field.converged else 1


def _cmd_jn_bound(args) -> int:
    value = weak_jn_bound(Params(args.lam, args.eps))
    print(f"{value:.17g}")
    return 0


_HANDLERS = {
    "eval": _cmd_eval,
    "grid": _cmd_grid,
    "extremizer": _cmd_extremizer,
    "verify": _cmd_verify,
    "oracle": _cmd_oracle,
    "jn-bound": _cmd_jn_bound,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ValueError, StripDomainError) as exc:
        parser.exit(2, f"error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
