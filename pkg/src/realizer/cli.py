"""Command-line driver.

Exit codes: 0 success, 1 parse or type error (or unreadable input),
2 machine stuck or out of fuel, 3 invalid trace or disagreement between the
two evaluators, 4 unsupported request.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from realizer.compile import compile_term
from realizer.core import DEFAULT_FUEL, Strategy, TypeCheckError, typecheck
from realizer.frontend import (
    ParseError,
    TraceFormatError,
    decode_trace,
    encode_trace,
    machine_to_json,
    parse_program,
    render,
)
from realizer.machine import (
    ALPHA0,
    FuelExhausted,
    InvalidTrace,
    MachineStuck,
    MConfig,
    check_trace,
    run,
)
from realizer.realizability import (
    AntiReductionError,
    Unsupported,
    WitnessMismatch,
    normalize,
    pole_named,
    with_deep_stack,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_MACHINE = 2
EXIT_INVALID = 3
EXIT_UNSUPPORTED = 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="realizer",
        description="Normalize simply-typed lambda terms with sums through a mu/mu-tilde machine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def program_command(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("file", nargs="?", type=Path, help="program file (.stlc)")
        src.add_argument("-e", "--expr", help="program given inline")
        p.add_argument("--variant", choices=[s.value for s in Strategy], default="cbn",
                       help="evaluation strategy of the compilation (default: cbn)")
        p.add_argument("--fuel", type=_positive, default=DEFAULT_FUEL,
                       help=f"machine step budget (default: {DEFAULT_FUEL})")
        p.add_argument("--emit", choices=["text", "json"], default="text")
        return p

    program_command("check", "print the type of a program")
    program_command("compile", "print the compiled machine term")
    program_command("run", "run the compiled program on the machine and print the trace")
    norm = program_command("normalize", "normalize by realizability")
    norm.add_argument("--pole", choices=["trace", "nat"], default="trace",
                      help="observe the full trace or only the final integer")
    program_command("compare", "check that realizability and the machine agree step for step")

    verify = sub.add_parser("verify", help="check a JSON trace against the machine")
    verify.add_argument("file", type=Path, help="trace file in the JSON trace format")
    return parser


def _positive(text: str) -> int:
    n = int(text)
    if n <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return n


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(EXIT_INPUT, f"cannot read {path}: {exc}") from None


def _load(args):
    origin = "<expr>" if args.expr is not None else str(args.file)
    source = args.expr if args.expr is not None else _read(args.file)
    try:
        term = parse_program(source)
        ty = typecheck((), term)
    except ParseError as exc:
        raise CliError(EXIT_INPUT, f"{origin}:{exc.span.line}: parse error: {exc}") from None
    except TypeCheckError as exc:
        where = f"{origin}:{exc.span.line}" if exc.span else origin
        detail = str(exc)
        if exc.expected is not None:
            detail += f"; expected {render(exc.expected)}"
        if exc.found is not None:
            detail += f"; found {render(exc.found)}"
        raise CliError(EXIT_INPUT, f"{where}: type error: {detail}") from None
    return term, ty


def _emit_trace(tr, emit: str) -> str:
    return encode_trace(tr) if emit == "json" else render(tr)


def _machine_trace(term, strategy, fuel):
    try:
        return run(MConfig(compile_term(term, strategy), ALPHA0), fuel)
    except MachineStuck as exc:
        raise CliError(EXIT_MACHINE, f"machine stuck: {exc.reason}") from None
    except FuelExhausted as exc:
        raise CliError(EXIT_MACHINE, f"out of fuel: {exc}") from None


def _realize(term, strategy, pole):
    try:
        return normalize(term, strategy, pole_named(pole))
    except Unsupported as exc:
        raise CliError(EXIT_UNSUPPORTED, str(exc)) from None
    except (WitnessMismatch, AntiReductionError) as exc:
        raise CliError(EXIT_INVALID, f"internal evaluator error: {exc}") from None


def dispatch(args) -> str:
    if args.command == "verify":
        try:
            tr = decode_trace(_read(args.file))
        except TraceFormatError as exc:
            raise CliError(EXIT_INPUT, f"{args.file}: {exc}") from None
        try:
            check_trace(tr)
        except InvalidTrace as exc:
            raise CliError(EXIT_INVALID, str(exc)) from None
        return f"valid ({len(tr)} steps)"

    term, ty = _load(args)
    strategy = Strategy(args.variant)
    match args.command:
        case "check":
            return json.dumps({"type": render(ty)}) if args.emit == "json" else render(ty)
        case "compile":
            m = compile_term(term, strategy)
            return json.dumps(machine_to_json(m)) if args.emit == "json" else render(m)
        case "run":
            return _emit_trace(_machine_trace(term, strategy, args.fuel), args.emit)
        case "normalize":
            result = _realize(term, strategy, args.pole)
            if isinstance(result, int):
                return json.dumps(result) if args.emit == "json" else str(result)
            return _emit_trace(result, args.emit)
        case "compare":
            machine = _machine_trace(term, strategy, args.fuel)
            realized = _realize(term, strategy, "trace")
            if machine != realized:
                raise CliError(EXIT_INVALID, "traces differ: "
                               f"machine {len(machine)} steps, realizability {len(realized)} steps")
            return f"traces identical ({len(machine)} steps)"
    raise CliError(EXIT_INPUT, f"unknown command {args.command}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = with_deep_stack(dispatch, args)
    except CliError as exc:
        print(f"realizer: {exc}", file=sys.stderr)
        return exc.code
    print(out)
    return EXIT_OK
