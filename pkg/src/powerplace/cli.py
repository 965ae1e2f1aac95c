"""Command-line front end: validate, build, solve, verify, oracle, tables.

Exit codes: 0 ok, 1 usage, 2 validation, 3 infeasible,
4 limit reached with incumbent, 5 verification failed.
Errors go to stderr as JSON lines.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path as FsPath

from . import fileio, mps, oracle, render
from .formulation import FormulationError, build_model
from .model import (GroupDirective, ValidationError, group_elements, validate)
from .solution import assignment_from_document, build_solution_document
from .solver import SolveOptions, branch_and_bound, verify_assignment

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_LIMIT = 4
EXIT_VERIFICATION = 5


@dataclass
class RunConfig:
    command: str
    input: str | None
    objective: str = "l1"
    output_dir: str = "."
    groups: list[GroupDirective] | None = None
    options: SolveOptions | None = None


def _emit_error(kind: str, messages) -> None:
    print(json.dumps({"error": kind, "messages": list(messages)}),
          file=sys.stderr)


def _parse_group(value: str) -> GroupDirective:
    try:
        subsystem, blocks = value.rsplit(":", 1)
        return GroupDirective(tuple(subsystem.split(".")), int(blocks))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"{value!r} is not of the form <subsystem>:<blocks>")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="powerplace",
        description="Optimal 2D placement of hierarchical powertrain layouts")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_solve=False):
        p.add_argument("input", help="path to a .system file")
        p.add_argument("--group", action="append", type=_parse_group, default=[],
                       metavar="SUBSYSTEM:BLOCKS",
                       help="group identical chained children into blocks")
        if with_solve:
            p.add_argument("--gap", type=float, default=1e-6,
                           help="relative optimality gap (default 1e-6)")
            p.add_argument("--time-limit", type=float, default=None,
                           help="wall-clock limit in seconds")
            p.add_argument("--node-limit", type=int, default=1_000_000)
            p.add_argument("--threads", type=int, default=1)
            p.add_argument("--deterministic",
                           action=argparse.BooleanOptionalAction, default=True)
        p.add_argument("--output-dir", default=".",
                       help="directory for generated files")

    add_common(sub.add_parser("validate", help="check a system description"))
    build_p = sub.add_parser("build", help="emit the exchange-format model")
    add_common(build_p)
    build_p.add_argument("--objective", choices=("l1", "sq-l2-export"),
                         default="l1")
    solve_p = sub.add_parser("solve", help="solve and write .solution and .svg")
    add_common(solve_p, with_solve=True)
    verify_p = sub.add_parser("verify", help="check a .solution against the model")
    add_common(verify_p)
    verify_p.add_argument("solution", help="path to a .solution file")
    oracle_p = sub.add_parser("oracle", help="brute-force enumeration (small inputs)")
    add_common(oracle_p)
    sub.add_parser("tables", help="print the regenerated orientation tables")
    return parser


def _load(args):
    desc = fileio.parse_system(args.input)
    directives = list(desc.groupings) + list(args.group)
    if directives:
        desc = group_elements(desc, directives)
    return validate(desc)


def _cmd_validate(args) -> int:
    system = _load(args)
    print(f"valid: {len(system.nodes)} elements on {system.n_levels + 1} level(s)")
    for lam, nodes in enumerate(system.levels):
        subs = sum(1 for n in nodes if not n.is_component)
        print(f"  level {lam}: {len(nodes)} element(s), {subs} subsystem(s)")
    total_pairs = sum(len(v) for v in system.pairs_by_parent.values())
    mech = len([c for c in system.connections if c.domain.value == "mechanical"])
    elec = len(system.connections) - mech
    print(f"  connections: {mech} mechanical, {elec} electrical")
    print(f"  interference pairs: {total_pairs}")
    return EXIT_OK


def _cmd_build(args) -> int:
    system = _load(args)
    mode = "squared-euclidean" if args.objective == "sq-l2-export" else "l1"
    formulation = build_model(system, mode)
    out = FsPath(args.output_dir) / (FsPath(args.input).stem + ".mps")
    mps.write_exchange(formulation.model, out)
    stats = formulation.model.stats()
    print(f"wrote {out} ({stats['variables']} variables, "
          f"{stats['binaries']} binaries, {stats['rows']} rows)")
    return EXIT_OK


def _cmd_solve(args) -> int:
    system = _load(args)
    formulation = build_model(system, "l1")
    options = SolveOptions(gap=args.gap, node_limit=args.node_limit,
                           time_limit=args.time_limit,
                           deterministic=args.deterministic,
                           threads=1 if args.deterministic else args.threads)
    result = branch_and_bound(formulation.model, options)
    print(f"status {result.status}: {result.nodes} nodes"
          + (f", objective {result.objective:.9g}, bound {result.bound:.9g}"
             if result.assignment is not None else ""))
    if result.status == "infeasible":
        _emit_error("infeasible", ["no feasible placement exists"])
        return EXIT_INFEASIBLE
    if result.assignment is None:
        _emit_error("limit", [f"stopped at {result.status} without incumbent"])
        return EXIT_INFEASIBLE
    report = verify_assignment(formulation.model, result.assignment)
    if not report.ok:
        _emit_error("verification", [v.tag for v in report.violations])
        return EXIT_VERIFICATION
    doc = build_solution_document(formulation, result, args.deterministic)
    stem = FsPath(args.input).stem
    out_dir = FsPath(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sol_path = out_dir / f"{stem}.solution"
    svg_path = out_dir / f"{stem}.svg"
    fileio.write_solution(doc, sol_path)
    render.render_layout(doc, svg_path)
    print(f"wrote {sol_path} and {svg_path}")
    return EXIT_OK if result.status == "optimal" else EXIT_LIMIT


def _cmd_verify(args) -> int:
    system = _load(args)
    formulation = build_model(system, "l1")
    doc = fileio.read_solution(args.solution)
    x = assignment_from_document(doc, formulation.model)
    report = verify_assignment(formulation.model, x)
    print(report.summary())
    return EXIT_OK if report.ok else EXIT_VERIFICATION


def _cmd_oracle(args) -> int:
    system = _load(args)
    formulation = build_model(system, "l1")
    result = oracle.enumerate_optimal(formulation.model)
    if result.status == "infeasible":
        _emit_error("infeasible", ["every binary assignment is infeasible"])
        return EXIT_INFEASIBLE
    print(f"optimal objective {result.objective:.9g} over "
          f"{len(result.feasible)} feasible assignment(s); "
          f"{len(result.optimal_assignments)} optimal")
    return EXIT_OK


def _cmd_tables(_args) -> int:
    print(oracle.format_truth_tables())
    return EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "build": _cmd_build,
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "oracle": _cmd_oracle,
    "tables": _cmd_tables,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, fileio.SystemFormatError) as exc:
        _emit_error("validation", exc.errors)
        return EXIT_VALIDATION
    except FormulationError as exc:
        _emit_error("formulation", [str(exc)])
        return EXIT_VALIDATION
    except oracle.EnumerationCapExceeded as exc:
        _emit_error("usage", [str(exc)])
        return EXIT_USAGE
    except FileNotFoundError as exc:
        _emit_error("usage", [str(exc)])
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
