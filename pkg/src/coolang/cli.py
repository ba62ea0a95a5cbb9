"""coolc: compile, preexecute, and run programs from the command line."""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from typing import Optional

from .errors import (
    CoolRuntimeError,
    DerivationFailure,
    FormatError,
    InferenceFailure,
    LoadError,
    NotInvertible,
    ParseError,
    PrecompileError,
)
from .loader import load
from .parser import parse
from .precompile import precompile
from .preexec import preexecute
from .runtime import Interpreter
from .search import SearchOptions
from .serialize import deserialize, serialize, write_file

_COMPILE_ERRORS = (PrecompileError, ParseError, LoadError, FormatError)
_INFERENCE_ERRORS = (InferenceFailure, NotInvertible, DerivationFailure)


def _load_input(path: str):
    with open(path) as f:
        text = f.read()
    if text.startswith("COOLCC 1"):
        return deserialize(text)
    return load(parse(precompile(text)))


def _options(args) -> SearchOptions:
    return SearchOptions(
        silo_size=args.silo_size,
        max_rounds=args.max_rounds,
        max_tree_nodes=args.max_tree_nodes,
    )


def _tracer(args):
    sink = None
    if args.trace_silo:
        sink = open(args.trace_silo, "w")
    elif os.environ.get("COOLC_TRACE") == "1":
        sink = sys.stderr

    if sink is None:
        return None, lambda: None

    def observer(rnd, weight, segment):
        digest = hashlib.sha1(repr(segment.digest()).encode()).hexdigest()[:12]
        print(f"round {rnd} weight {weight} {digest}", file=sink)

    def close():
        if sink is not sys.stderr:
            sink.close()

    return observer, close


def _out_path(args, suffix: str) -> str:
    if args.output:
        return args.output
    stem, _ = os.path.splitext(args.input)
    return stem + suffix


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="coolc", description="constraint and object oriented language toolchain"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("compile", "translate source into a code table file"),
        ("preexec", "bind expressions to declarations ahead of running"),
        ("run", "preexecute if needed, then execute"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("input")
        p.add_argument("-o", "--output", default=None)
        p.add_argument("--silo-size", type=int, default=64)
        p.add_argument("--max-rounds", type=int, default=16)
        p.add_argument("--max-tree-nodes", type=int, default=8)
        p.add_argument("--trace-silo", default=None, metavar="PATH")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 4 if exc.code not in (0, None) else 0

    observer, close_trace = _tracer(args)
    try:
        tables = _load_input(args.input)
        if args.command == "compile":
            write_file(tables, _out_path(args, ".ccode"))
            return 0
        if not tables.preexecuted:
            preexecute(tables, options=_options(args), observer=observer)
        if args.command == "preexec":
            write_file(tables, _out_path(args, ".ccode"))
            return 0
        interp = Interpreter(tables)
        interp.run()
        for line in interp.output:
            print(line)
        return 0
    except OSError as exc:
        print(f"coolc: {exc}", file=sys.stderr)
        return 4
    except _COMPILE_ERRORS as exc:
        print(f"coolc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except _INFERENCE_ERRORS as exc:
        print(f"coolc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except CoolRuntimeError as exc:
        print(f"coolc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    finally:
        close_trace()


if __name__ == "__main__":
    sys.exit(main())
