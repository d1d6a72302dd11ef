"""Command-line front end.

Exit codes: 0 success, 1 a requested check failed, 2 usage or I/O error,
3 an instance violates a mechanism's prerequisites.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .allocation import audit_envy_free, audit_proportional
from .efficiency import INAPPLICABLE, audit_pareto_sp
from .errors import CakeError, EmptySegment, PrereqViolated
from .experiments import compare_mechanisms, welfare_loss_csv, welfare_loss_curve
from .files import read_allocation, read_instance, write_allocation
from .mechanisms import MECHANISMS
from .render import render_svg
from .valuation import AUDIT_TOL

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_PREREQ = 0, 1, 2, 3
CHECKS = ("ef", "prop", "po")


def _fmt(values) -> str:
    return " ".join(f"{x:.6f}" for x in values)


def cmd_run(args: argparse.Namespace) -> int:
    instance = read_instance(args.instance, args.waste_tolerant)
    result = MECHANISMS[args.mechanism](instance)
    if args.out:
        write_allocation(args.out, result.allocation)
    if args.transcript:
        result.log.write(args.transcript)
    print(f"mechanism: {result.mechanism}")
    print(f"utilities: {_fmt(result.utilities)}")
    print(f"sum: {result.total:.6f}")
    print(f"queries: cut={result.log.cut_count} eval={result.log.eval_count}")
    for agent, piece in enumerate(result.allocation.pieces):
        spans = ", ".join(f"[{iv.start:.12g}, {iv.end:.12g}]" for iv in piece)
        print(f"agent {agent}: {spans}")
    return EXIT_OK


def _parse_checks(text: str) -> list[str]:
    checks = [c.strip() for c in text.split(",") if c.strip()]
    bad = [c for c in checks if c not in CHECKS]
    if bad or not checks:
        raise argparse.ArgumentTypeError(f"checks must be a comma list from {','.join(CHECKS)}")
    return checks


def cmd_audit(args: argparse.Namespace) -> int:
    instance = read_instance(args.instance, args.waste_tolerant)
    allocation = read_allocation(args.allocation)
    status = EXIT_OK
    for check in args.checks:
        if check == "ef":
            report = audit_envy_free(instance, allocation, args.epsilon)
            print(report.describe())
            passed = report.passed
        elif check == "prop":
            report = audit_proportional(instance, allocation, args.epsilon)
            print(report.describe())
            passed = report.passed
        else:
            verdict = audit_pareto_sp(instance, allocation, args.epsilon)
            print(verdict.describe())
            if verdict.verdict == INAPPLICABLE:
                status = max(status, EXIT_PREREQ)
                continue
            passed = verdict.is_po
        if not passed:
            status = max(status, EXIT_FAIL)
    return status


def cmd_compare(args: argparse.Namespace) -> int:
    instance = read_instance(args.instance, args.waste_tolerant)
    table = compare_mechanisms(instance)
    print(table.format())
    if args.csv:
        Path(args.csv).write_text(table.to_csv(), encoding="utf-8")
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    if not 2 <= args.n_min <= args.n_max:
        print(f"error: need 2 <= --n-min <= --n-max, got {args.n_min}, {args.n_max}", file=sys.stderr)
        return EXIT_USAGE
    rows = welfare_loss_curve(args.n_min, args.n_max)
    text = welfare_loss_csv(rows)
    if args.csv:
        Path(args.csv).write_text(text, encoding="utf-8")
    for r in rows:
        print(f"n={r.n} T_PO={r.t_po:.6f} T_WW={r.t_ww:.6f} WL={r.wl:.6f}")
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    instance = read_instance(args.instance, args.waste_tolerant)
    allocation = read_allocation(args.allocation) if args.allocation else None
    Path(args.out).write_text(render_svg(instance, allocation), encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="peakcake", description="Cake cutting with single-peaked valuations.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--instance", required=True, help="instance JSON file")
        p.add_argument("--waste-tolerant", action="store_true", help="accept supports that leave part of the cake unwanted")

    p = sub.add_parser("run", help="run a mechanism")
    common(p)
    p.add_argument("--mechanism", required=True, choices=sorted(MECHANISMS))
    p.add_argument("--out", help="write the allocation here")
    p.add_argument("--transcript", help="write the query transcript here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("audit", help="audit an allocation")
    common(p)
    p.add_argument("--allocation", required=True)
    p.add_argument("--checks", type=_parse_checks, default=list(CHECKS), help="comma list from ef,prop,po")
    p.add_argument("--epsilon", type=float, default=AUDIT_TOL)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("compare", help="run and audit every mechanism")
    common(p)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("experiment", help="run a named experiment")
    p.add_argument("name", choices=["welfare-loss"])
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("render", help="draw densities and an optional allocation as SVG")
    common(p)
    p.add_argument("--allocation")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (PrereqViolated, EmptySegment) as exc:
        print(f"prerequisite violated: {exc}", file=sys.stderr)
        return EXIT_PREREQ
    except (OSError, CakeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
