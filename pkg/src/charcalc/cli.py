"""Command line entry point.

Exit status: 0 when everything passes, 1 when a check fails, 2 on input errors.
"""

import argparse
import sys

from . import local_smith
from .classes import chern_to_ch, todd
from .render import render
from .scenario import (
    BinOp,
    Name,
    Neg,
    Num,
    Pow,
    ScenarioError,
    ScenarioNameError,
    ScenarioTypeError,
    format_entry,
    parse,
    parse_expression,
    run,
)
from .spaces import generic_bundle


def _read(path):
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _emit(args, line=""):
    if not args.quiet:
        print(line)


def _load(args):
    try:
        text = _read(args.file)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None
    try:
        return parse(text)
    except ScenarioError as exc:
        print(f"{args.file}:{exc.line}:{exc.col}: {exc.kind}: {exc.message}", file=sys.stderr)
        return None


def cmd_scenario(args, only_checks: bool) -> int:
    sc = _load(args)
    if sc is None:
        return 2
    if only_checks:
        sc.statements = [s for s in sc.statements if s.kind != "eval"]
    try:
        report = run(sc)
    except (ScenarioError, ValueError, KeyError) as exc:
        print(f"{args.file}: error: {exc}", file=sys.stderr)
        return 2
    for entry in report.entries:
        for line in format_entry(entry, args.latex, sc):
            _emit(args, line)
    return report.exit_code


def cmd_expand(args) -> int:
    if args.rank < 0 or args.dim < 0:
        print("error: rank and dimension must be non-negative", file=sys.stderr)
        return 2
    E = generic_bundle(args.dim, args.rank)
    value = todd(E) if args.what == "todd" else chern_to_ch(E).ch
    _emit(args, render(value, args.latex))
    return 0


def read_matrix(text: str, precision=None):
    """First line: ``r precision var...``; then r*r entries in row-major order, one per line."""
    lines = [l.split("#", 1)[0].strip() for l in text.splitlines()]
    lines = [l for l in lines if l]
    if not lines:
        raise ValueError("empty matrix file")
    head = lines[0].split()
    if len(head) < 3:
        raise ValueError("header must be 'r precision var...'")
    r = int(head[0])
    if precision is None:
        precision = int(head[1])
    names = head[2:]
    entries = lines[1:]
    if len(entries) != r * r:
        raise ValueError(f"expected {r * r} entries, found {len(entries)}")
    R = local_smith.LocalRing(names, precision)
    values = [series_from_text(R, text, lineno) for lineno, text in enumerate(entries, start=2)]
    return local_smith.LocalMatrix(R, [values[i * r:(i + 1) * r] for i in range(r)])


def series_from_text(R, text: str, line: int = 1):
    """Evaluate a polynomial in the scenario expression grammar as a LocalSeries."""

    def ev(node):
        if isinstance(node, Num):
            return R.constant(node.value)
        if isinstance(node, Name):
            if node.name not in R.index:
                raise ScenarioNameError(f"unknown variable {node.name!r}", node.line, node.col)
            return R.var(node.name)
        if isinstance(node, Neg):
            return -ev(node.arg)
        if isinstance(node, Pow):
            return ev(node.base) ** node.exponent
        if isinstance(node, BinOp):
            a, b = ev(node.left), ev(node.right)
            return a + b if node.op == "+" else a - b if node.op == "-" else a * b
        raise ScenarioTypeError("only polynomials are allowed in a matrix entry", node.line, node.col)

    return ev(parse_expression(text, line))


def cmd_smith(args) -> int:
    try:
        M = read_matrix(_read(args.file), args.precision)
    except ScenarioError as exc:
        print(f"{args.file}:{exc.line}:{exc.col}: {exc.kind}: {exc.message}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"{args.file}: error: {exc}", file=sys.stderr)
        return 2
    try:
        result = local_smith.diagonalize(M)
    except local_smith.PrincipalityViolation as exc:
        _emit(args, f"no diagonalization: {exc}")
        return 1
    except local_smith.PrecisionExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    check = local_smith.verify_smith(M, result)
    _emit(args, "diagonal: " + ", ".join(local_smith.render_series(d, args.latex) for d in result.diagonal))
    _emit(args, "phi: " + ", ".join(local_smith.render_monomial(M.ring, p, args.latex) for p in result.phi))
    _emit(args, f"M = U D V: {check.status}")
    return 0 if check.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="charcalc", description="Chern character and Riemann-Roch calculator")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--latex", action="store_true", help="render results as LaTeX")
    common.add_argument("--quiet", action="store_true", help="print nothing; report through the exit status")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("eval", parents=[common], help="run every statement of a scenario file")
    p.add_argument("file")
    p = sub.add_parser("check", parents=[common], help="run only the checks and expectations of a scenario file")
    p.add_argument("file")
    p = sub.add_parser("expand", parents=[common], help="universal formula in the Chern classes c1..cr")
    p.add_argument("what", choices=["todd", "newton"])
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p = sub.add_parser("smith", parents=[common], help="diagonalize a matrix over a local power series ring")
    p.add_argument("file")
    p.add_argument("--precision", type=int)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if args.command == "eval":
        return cmd_scenario(args, only_checks=False)
    if args.command == "check":
        return cmd_scenario(args, only_checks=True)
    if args.command == "expand":
        return cmd_expand(args)
    return cmd_smith(args)


if __name__ == "__main__":
    sys.exit(main())
