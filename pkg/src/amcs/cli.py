"""Command line: ``amcs solve | oracle | run | encode``.

Exit codes: 0 when at least one answer set exists (or a run finished),
1 for an inconsistent program, 2 for any error.  Budgets can be raised or
lowered with ``AMCS_MAX_GROUND_ATOMS``, ``AMCS_MAX_TERM_DEPTH`` and
``AMCS_ORACLE_BUDGET``.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, TextIO

from .asp import (
    GroundingError,
    Limits,
    NonIntegerWeight,
    OracleBudgetExceeded,
    ParseError,
    UnsafeRule,
    ground,
    oracle_answer_sets,
    parse,
    parse_facts,
    solve,
    solve_optimal,
)
from .asp.terms import term_key
from .packing import DecodeError, encode_facts, render_facts
from .runtime import ContextBusy, DuplicateName, UnknownStakeholder, dumps
from .scenario import ValidationError, load_buffer, load_scenario

EXIT_OK, EXIT_UNSAT, EXIT_ERROR = 0, 1, 2

_ERRORS = (
    OSError,
    ParseError,
    UnsafeRule,
    GroundingError,
    NonIntegerWeight,
    OracleBudgetExceeded,
    ValidationError,
    DecodeError,
    UnknownStakeholder,
    ContextBusy,
    DuplicateName,
)


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _ground(args, limits: Limits):
    program = parse(_read(args.program))
    facts = parse_facts(_read(args.facts)) if args.facts else set()
    return ground(program, facts, limits)


def render_answers(answers, out: TextIO) -> None:
    for i, answer in enumerate(answers, 1):
        out.write(f"Answer: {i}\n")
        out.write(answer.render())
        if answer.objective is not None:
            out.write(f"Optimization: {answer.objective}\n")
    if not answers:
        out.write("UNSATISFIABLE\n")


def cmd_solve(args, limits: Limits, out: TextIO) -> int:
    gp = _ground(args, limits)
    if args.opt:
        if gp.objective is None:
            raise ValueError("--opt needs a program with #maximize or #minimize")
        best = solve_optimal(gp)
        answers = [] if best is None else [best]
    else:
        answers = solve(gp, None if args.all else args.models)
    render_answers(answers, out)
    return EXIT_OK if answers else EXIT_UNSAT


def cmd_oracle(args, limits: Limits, out: TextIO) -> int:
    gp = _ground(args, limits)
    answers = sorted(
        oracle_answer_sets(gp, limits.oracle_atoms),
        key=lambda a: [term_key(x) for x in a.sorted_atoms()],
    )
    render_answers(answers, out)
    return EXIT_OK if answers else EXIT_UNSAT


def cmd_run(args, limits: Limits, out: TextIO) -> int:
    spec = load_scenario(args.scenario)
    engine = spec.engine(limits)
    records = engine.run_until(args.until)
    text = dumps(records, spec.name, spec.seed)
    if args.trace and args.trace != "-":
        with open(args.trace, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_encode(args, limits: Limits, out: TextIO) -> int:
    out.write(render_facts(encode_facts(load_buffer(args.buffer), args.arrival)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="amcs", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="print answer sets of a program")
    s.add_argument("program")
    s.add_argument("facts", nargs="?")
    group = s.add_mutually_exclusive_group()
    group.add_argument("--models", type=int, default=1, metavar="N", help="stop after N answer sets (default 1)")
    group.add_argument("--all", action="store_true", help="enumerate every answer set")
    group.add_argument("--opt", action="store_true", help="print one optimal answer set")
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", help="brute-force stable-model listing (small programs)")
    o.add_argument("program")
    o.add_argument("facts", nargs="?")
    o.set_defaults(func=cmd_oracle)

    r = sub.add_parser("run", help="simulate a scenario and write its trace")
    r.add_argument("scenario")
    r.add_argument("--until", type=int, default=None, metavar="T", help="stop at virtual time T (ms); default: quiescence")
    r.add_argument("--trace", default=None, metavar="OUT", help="trace file (default stdout)")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("encode", help="print the input facts of a buffer description")
    e.add_argument("buffer")
    e.add_argument("--arrival", action="store_true", help="also emit arrived/2 facts")
    e.set_defaults(func=cmd_encode)
    return p


def main(argv: Optional[list] = None, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = build_parser().parse_args(argv)
    if getattr(args, "models", 1) < 1:
        err.write("error: --models must be positive\n")
        return EXIT_ERROR
    try:
        limits = Limits.from_env()
        return args.func(args, limits, out)
    except _ERRORS + (ValueError,) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
