"""Command-line front end for batch planning studies.

Exit codes are a stable contract: 0 success, 1 validation failure,
2 solver failure, 64 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import (
    SolverFailure,
    frontier_csv,
    min_viable_price,
    risk_frontier,
    solve_case,
)
from .caseio import (
    CaseFile,
    CaseLoadError,
    CaseValidationError,
    load_case,
    write_report,
)
from .model import RiskConfig, validate_facility
from .program import build_extensive_form
from .results import plan_from_dict, plan_to_dict
from .solver import SolverOptions, export_mps

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_USAGE = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bioplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, solver_flags=True):
        p.add_argument("case", help="path to a JSON case file")
        p.add_argument("--lambda", dest="lam", type=float, default=None,
                       help="risk weight in [0, 1] (overrides the case file)")
        p.add_argument("--alpha", type=float, default=None,
                       help="CVaR tail level in [0, 1)")
        p.add_argument("--segments", type=int, default=None,
                       help="piecewise segments per plant")
        p.add_argument("--reduce-scenarios", type=int, default=None, metavar="N",
                       help="keep only the first N scenarios (renormalized)")
        if solver_flags:
            p.add_argument("--workers", type=int, default=None,
                           help="parallel LP workers for the enumeration")
            p.add_argument("--max-enumeration", type=int, default=None)
            p.add_argument("--lp-kernel", choices=["auto", "builtin", "highs"],
                           default=None)

    p = sub.add_parser("validate", help="check a case file and print findings")
    p.add_argument("case")

    p = sub.add_parser("solve", help="solve the expansion plan and write reports")
    add_common(p)
    p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("report", help="re-render reports from a stored solution")
    p.add_argument("solution", help="path to a solution.json written by solve")
    p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("sensitivity", help="bisect a product's viability price")
    add_common(p)
    p.add_argument("--product", required=True)
    p.add_argument("--plant", required=True)
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--tol", type=float, required=True)
    p.add_argument("--out", default=None, help="optional output directory")

    p = sub.add_parser("frontier", help="sweep risk weights and tabulate the frontier")
    add_common(p)
    p.add_argument("--lambdas", required=True,
                   help="comma-separated risk weights, e.g. 0,0.25,0.5")
    p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("export", help="export the extensive form as an MPS file")
    add_common(p, solver_flags=False)
    p.add_argument("--mps", required=True, help="output MPS path")
    return parser


def _load(args) -> CaseFile:
    case = load_case(args.case)
    if getattr(args, "reduce_scenarios", None):
        case = CaseFile(
            case.facility,
            case.scenarios.reduce(args.reduce_scenarios),
            case.risk,
            case.piecewise_segments,
            case.solver_options,
        )
    return case


def _risk(args, case: CaseFile) -> RiskConfig:
    lam = args.lam if args.lam is not None else case.risk.lam
    alpha = args.alpha if args.alpha is not None else case.risk.alpha
    return RiskConfig(lam=lam, alpha=alpha)


def _options(args, case: CaseFile) -> SolverOptions:
    return SolverOptions.from_mapping(
        case.solver_options,
        parallelism=getattr(args, "workers", None),
        max_enumeration=getattr(args, "max_enumeration", None),
        lp_kernel=getattr(args, "lp_kernel", None),
    )


def _print_decomposition(plan) -> None:
    mm = 1e-6
    print(f"objective (MM$): {plan.objective * mm!r}")
    print(f"  capex annuity (MM$): {plan.capex_annuity * mm!r}")
    print(f"  expected cost E[Q] (MM$): {plan.expected_cost * mm!r}")
    print(f"  CVaR[Q] (MM$): {plan.cvar_cost * mm!r}")
    print(f"  lambda: {plan.lam!r}  alpha: {plan.alpha!r}")


def _cmd_validate(args) -> int:
    case = load_case(args.case)  # raises on structural errors
    report = validate_facility(case.facility, case.scenarios)
    for err in report.errors:
        print(f"error: {err}")
    for warn in report.warnings:
        print(f"warning: {warn}")
    print(f"{len(report.errors)} errors, {len(report.warnings)} warnings")
    return EXIT_OK if report.ok else EXIT_VALIDATION


def _cmd_solve(args) -> int:
    case = _load(args)
    plan = solve_case(
        case, risk=_risk(args, case), segments=args.segments,
        options=_options(args, case),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "solution.json").write_text(
        json.dumps(plan_to_dict(plan), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    write_report(plan, out / "report")
    _print_decomposition(plan)
    print(f"wrote {out / 'solution.json'}, {out / 'report.json'}, {out / 'report.txt'}")
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        doc = json.loads(Path(args.solution).read_text(encoding="utf-8"))
        plan = plan_from_dict(doc)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CaseLoadError(f"cannot read solution file: {exc}") from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report(plan, out / "report")
    _print_decomposition(plan)
    return EXIT_OK


def _cmd_sensitivity(args) -> int:
    case = _load(args)
    try:
        result = min_viable_price(
            case, args.product, args.plant, (args.lo, args.hi), args.tol,
            risk=_risk(args, case), segments=args.segments,
            options=_options(args, case),
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    print(f"viability price for {args.product}: {result.viability_price!r}")
    print(f"bracket: ({result.bracket[0]!r}, {result.bracket[1]!r})")
    for price, viable in result.trace:
        print(f"  probe {price!r}: {'viable' if viable else 'not viable'}")
    _print_decomposition(result.viable_plan)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_report(result.viable_plan, out / "report")
    return EXIT_OK


def _cmd_frontier(args) -> int:
    case = _load(args)
    try:
        lams = [float(tok) for tok in args.lambdas.split(",") if tok.strip()]
    except ValueError as exc:
        raise _UsageError(f"bad --lambdas value: {args.lambdas}") from exc
    if not lams:
        raise _UsageError("--lambdas is empty")
    points = risk_frontier(
        case, lams, alpha=args.alpha, segments=args.segments,
        options=_options(args, case),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "frontier.csv").write_text(frontier_csv(points), encoding="utf-8")
    for point in points:
        print(f"lambda={point.lam!r}")
        _print_decomposition(point.plan)
    print(f"wrote {out / 'frontier.csv'}")
    return EXIT_OK


def _cmd_export(args) -> int:
    case = _load(args)
    model, _ = build_extensive_form(case, risk=_risk(args, case),
                                    segments=args.segments)
    export_mps(model, args.mps)
    print(f"wrote {args.mps} ({model.n_variables} variables, "
          f"{model.n_constraints} rows)")
    return EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "solve": _cmd_solve,
    "report": _cmd_report,
    "sensitivity": _cmd_sensitivity,
    "frontier": _cmd_frontier,
    "export": _cmd_export,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help and friends
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CaseLoadError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CaseValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except RuntimeError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
