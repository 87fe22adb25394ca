"""Command-line front end.

Exit status: 0 on success, 1 when ``solve`` answers NO, 2 on bad input.
Results go to standard output as JSON; errors go to standard error as JSON
objects carrying a machine-readable ``error`` code.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import fixtures
from .algebra import AlgebraError, dot_reduct, quotient_algebra
from .bulatov import bulatov_solution
from .digraph import build_digraph, to_dot
from .instance import InstanceError, brute_force_solve, validate_standard, two_three_consistency
from .maltsev import (
    BLOCK_SOLVERS,
    QUOTIENT_DOT,
    build_counterexample,
    build_quotient_instance,
    hypothesis_check,
    main_solve,
)
from .serialize import (
    FormatError,
    UnknownFixtureError,
    algebra_from_json,
    algebra_to_json,
    dumps,
    instance_from_json,
    instance_to_json,
    load_json,
    raw_from_json,
    term_from_json,
    term_to_json,
)

EXIT_OK, EXIT_NO, EXIT_ERROR = 0, 1, 2


def _load(arg: str):
    """A JSON file path or an inline JSON document."""
    if os.path.exists(arg):
        return load_json(arg)
    try:
        return json.loads(arg)
    except json.JSONDecodeError:
        raise FormatError(f"{arg!r} is neither a readable file nor JSON") from None


def _load_algebra(arg: str):
    """A fixture name, an algebra file or inline algebra JSON."""
    if not os.path.exists(arg) and not arg.lstrip().startswith(("{", '"')):
        return algebra_from_json(arg)
    return algebra_from_json(_load(arg))


def _emit(data):
    sys.stdout.write(dumps(data) + "\n")


def cmd_consistency(args) -> int:
    inst = two_three_consistency(raw_from_json(_load(args.raw)))
    out = instance_to_json(inst)
    out["report"] = validate_standard(inst).to_json()
    _emit(out)
    return EXIT_OK


def cmd_bulatov(args) -> int:
    inst = instance_from_json(_load(args.instance))
    dot = term_from_json(_load(args.dot))
    assignment, trace = bulatov_solution(inst, dot, debug=args.debug_audit)
    out = {"assignment": assignment}
    if args.trace:
        out["trace"] = [step.to_json() for step in trace]
    _emit(out)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = instance_from_json(_load(args.instance))
    dot = term_from_json(_load(args.dot))
    verdict = main_solve(inst, dot, BLOCK_SOLVERS[args.block_solver](), debug=args.debug_audit)
    _emit(verdict.to_json(trace=args.trace))
    return EXIT_OK if verdict.solvable else EXIT_NO


def cmd_check_algebra(args) -> int:
    alg = _load_algebra(args.algebra)
    dot = term_from_json(_load(args.dot))
    report = hypothesis_check(alg, dot)
    if args.digraph_dot:
        if report.theta is None:
            raise AlgebraError("no quotient to draw: the witness relation is not a congruence")
        quo, theta = quotient_algebra(dot_reduct(alg, dot), report.theta)
        dg = build_digraph(quo, QUOTIENT_DOT, check=report.b)
        labels = ["{" + ",".join(map(str, b)) + "}" for b in theta.blocks]
        with open(args.digraph_dot, "w") as fh:
            fh.write(to_dot(dg, labels))
    _emit(report.to_json())
    return EXIT_OK


def cmd_demo(args) -> int:
    alg, dot, inst = build_counterexample()
    oracle = brute_force_solve(inst)
    verdict = main_solve(inst, dot)
    _emit({
        "oracle": {"solvable": oracle is not None, "witness": oracle},
        "algorithm": verdict.to_json(trace=True),
        "hypotheses_failing": verdict.hypotheses.failing(),
        "agree": (oracle is not None) == verdict.solvable,
    })
    return EXIT_OK


def cmd_fixtures(args) -> int:
    if args.action == "list":
        _emit({
            "algebras": {name: fx.description for name, fx in fixtures.ALGEBRAS.items()},
            "instances": sorted(fixtures.instances()),
        })
        return EXIT_OK
    if args.action == "family":
        member = fixtures.block_family(np.random.default_rng(args.seed), args.quotient, args.twisted)
        _emit({"algebra": algebra_to_json(member.algebra), "dot": term_to_json(member.dot)})
        return EXIT_OK
    name = args.name
    if name in fixtures.ALGEBRAS:
        fx = fixtures.ALGEBRAS[name]
        _emit({"algebra": algebra_to_json(fx.build()), "dot": term_to_json(fx.dot)})
        return EXIT_OK
    found = fixtures.instances()
    if name in found:
        inst, dot = found[name]
        _emit({"instance": instance_to_json(inst), "dot": term_to_json(dot)})
        return EXIT_OK
    raise UnknownFixtureError(f"unknown fixture {name!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maltsevcsp", description="binary CSPs over finite idempotent algebras")
    p.add_argument("--seed", type=int, default=0, help="seed for generated fixtures")
    p.add_argument("--debug-audit", action="store_true", help="re-validate every intermediate instance")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("consistency", help="(2,3)-consistency closure of a raw instance")
    c.add_argument("raw")
    c.set_defaults(func=cmd_consistency)

    b = sub.add_parser("bulatov", help="Bulatov solution of a standard instance over a 2-semilattice")
    b.add_argument("instance")
    b.add_argument("--dot", required=True, help="binary term (file or inline JSON)")
    b.add_argument("--trace", action="store_true")
    b.set_defaults(func=cmd_bulatov)

    s = sub.add_parser("solve", help="decide a standard instance through its quotient")
    s.add_argument("instance")
    s.add_argument("--dot", required=True, help="binary term (file or inline JSON)")
    s.add_argument("--block-solver", choices=sorted(BLOCK_SOLVERS), default="brute")
    s.add_argument("--trace", action="store_true")
    s.set_defaults(func=cmd_solve)

    a = sub.add_parser("check-algebra", help="hypothesis report for an algebra and a binary term")
    a.add_argument("algebra", help="algebra file, inline JSON or fixture name")
    a.add_argument("--dot", required=True)
    a.add_argument("--digraph-dot", metavar="PATH", help="write the quotient arrow digraph in DOT format")
    a.set_defaults(func=cmd_check_algebra)

    d = sub.add_parser("demo", help="built-in demonstrations")
    d.add_argument("which", choices=["counterexample"])
    d.set_defaults(func=cmd_demo)

    f = sub.add_parser("fixtures", help="built-in fixtures")
    fsub = f.add_subparsers(dest="action", required=True)
    fsub.add_parser("list")
    show = fsub.add_parser("show")
    show.add_argument("name")
    fam = fsub.add_parser("family", help="a seeded member of the block family")
    fam.add_argument("--quotient", choices=["semilattice", "rps"], default="semilattice")
    fam.add_argument("--twisted", action="store_true")
    f.set_defaults(func=cmd_fixtures)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, InstanceError, AlgebraError, OSError) as exc:
        code = getattr(exc, "code", None) or ("io_error" if isinstance(exc, OSError) else "error")
        sys.stderr.write(json.dumps({"error": code, "message": str(exc)}, sort_keys=True) + "\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
