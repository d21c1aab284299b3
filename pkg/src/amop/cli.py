"""Command-line entry points.

Exit codes: 0 AM/pass, 1 NotAM/fail, 2 Undecidable, 64 usage, 65 bad data,
74 I/O failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .calculus import DimensionError, least_squares_min_norm
from .classify import Verdict
from .core import TAU_NUM, DiagonalModel, FiniteOperator
from .formula import FormulaError
from .report import classification_document, render, solution_document, verification_document
from .specfile import SpecError, read_spec, build_model, read_vector
from .truncation import DEFAULT_CHECKS, ConfigError, RangeError, TruncationPlan, run_suite

EXIT_OK, EXIT_FAIL, EXIT_UNDECIDABLE = 0, 1, 2
EXIT_USAGE, EXIT_DATA, EXIT_IO = 64, 65, 74


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _load(path: str):
    spec = read_spec(path)
    return spec, build_model(spec)


def cmd_classify(spec_path: str, out_path: str | None = None) -> int:
    spec, model = _load(spec_path)
    doc, report = classification_document(model, spec.echo())
    _write(render(doc), out_path)
    for line in doc["human"]:
        print(line, file=sys.stderr)
    return {Verdict.AM: EXIT_OK, Verdict.NOT_AM: EXIT_FAIL, Verdict.UNDECIDABLE: EXIT_UNDECIDABLE}[report.verdict]


def _parse_sizes(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise UsageError(f"--sizes expects comma-separated integers, got {text!r}") from None
    return sizes


def cmd_verify(spec_path: str, plan: TruncationPlan, out_path: str | None = None) -> int:
    spec, model = _load(spec_path)
    if isinstance(model, FiniteOperator):
        raise SpecError("kind", "verify needs a diagonal model")
    records = run_suite(model, plan)
    doc = verification_document(records, plan, spec.echo())
    _write(render(doc), out_path)
    for line in doc["human"]:
        print(line, file=sys.stderr)
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def cmd_solve(spec_path: str, rhs_path: str, out_path: str | None = None) -> int:
    spec, model = _load(spec_path)
    if isinstance(model, DiagonalModel):
        raise SpecError("kind", "solve needs a matrix spec")
    rhs = read_vector(rhs_path)
    sol = least_squares_min_norm(model, rhs)
    doc = solution_document(sol, rhs, spec.echo(), TAU_NUM)
    _write(render(doc), out_path)
    for line in doc["human"]:
        print(line, file=sys.stderr)
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="amop", description="Classify and verify minimum-attaining operators.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="AM verdict and spectrum report for a spec")
    p.add_argument("spec")
    p.add_argument("-o", "--out")

    p = sub.add_parser("verify", help="finite-section verification suite")
    p.add_argument("spec")
    p.add_argument("--sizes", default="4,8,16,32,64")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--conjugate", action="store_true")
    p.add_argument("--checks", default=",".join(DEFAULT_CHECKS))
    p.add_argument("-o", "--out")

    p = sub.add_parser("solve", help="minimal-norm least-squares solution")
    p.add_argument("spec")
    p.add_argument("rhs")
    p.add_argument("-o", "--out")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "classify":
            return cmd_classify(args.spec, args.out)
        if args.command == "verify":
            try:
                plan = TruncationPlan(_parse_sizes(args.sizes), args.seed, args.conjugate,
                                      tuple(c.strip() for c in args.checks.split(",") if c.strip()))
            except ConfigError as exc:
                raise UsageError(str(exc)) from None
            return cmd_verify(args.spec, plan, args.out)
        return cmd_solve(args.spec, args.rhs, args.out)
    except UsageError as exc:
        print(f"amop: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"amop: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SpecError, FormulaError, DimensionError, RangeError, ValueError) as exc:
        print(f"amop: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
