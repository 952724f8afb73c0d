"""Command-line front end.

Exit codes: 0 success, 1 semantic failure (validation, admissibility,
tolerance, budget), 2 I/O or parse failure.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import __version__
from .documents import (
    DocumentError,
    dump_result,
    events_to_list,
    read_instance,
    read_strategy,
    read_text,
    write_atomic,
    write_instance,
)
from .generators import GenerationError, GeneratorSpec, gen_instance
from .model import validate_model
from .oracle import BudgetExceededError, EnumerationBudget, enumerate_optimum
from .solver import (
    backward_induction_explicit,
    backward_induction_implicit,
    equivalence_report,
    extract_strategy,
)
from .strategy import InadmissibleStrategyError, evaluate
from .tree import VALUE_TOL

EXIT_OK, EXIT_FAIL, EXIT_IO = 0, 1, 2


def _anchor(text: str) -> tuple[int, int]:
    try:
        node, mode = text.split(":")
        node_i, mode_i = int(node), int(mode)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NODE:MODE, got {text!r}") from None
    if node_i < 0 or mode_i < 1:
        raise argparse.ArgumentTypeError("node must be >= 0 and mode >= 1")
    return node_i, mode_i - 1


def _pair(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    return lo, hi


def _branching(text: str):
    try:
        parts = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or N1,N2,..., got {text!r}") from None
    return parts[0] if len(parts) == 1 else parts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optswitch",
        description="Finite-horizon optimal switching with signed costs on scenario trees.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check tree and switching-cost conditions")
    p.add_argument("instance")

    p = sub.add_parser("solve", help="backward induction, optional strategy at the anchor")
    p.add_argument("instance")
    p.add_argument("--implicit", action="store_true", help="use the implicit recursion")
    p.add_argument("--report", action="store_true", help="append equivalence deviations")
    p.add_argument("--anchor", type=_anchor, metavar="NODE:MODE")
    p.add_argument("--out", metavar="PATH")

    p = sub.add_parser("evaluate", help="performance index of a strategy document")
    p.add_argument("instance")
    p.add_argument("strategy")
    p.add_argument("--out", metavar="PATH")

    p = sub.add_parser("oracle", help="brute-force optimum vs backward induction")
    p.add_argument("instance")
    p.add_argument("--anchor", type=_anchor, metavar="NODE:MODE")
    p.add_argument("--budget", type=int, default=EnumerationBudget.max_assignments,
                   help="maximum number of mode assignments to enumerate")
    p.add_argument("--out", metavar="PATH")

    p = sub.add_parser("generate", help="random valid instance on standard output")
    p.add_argument("--horizon", type=int, default=2)
    p.add_argument("--branching", type=_branching, default=2)
    p.add_argument("--modes", type=int, default=2)
    p.add_argument("--psi-range", type=_pair, default=(-1.0, 1.0))
    p.add_argument("--terminal-range", type=_pair, default=(-1.0, 1.0))
    p.add_argument("--gamma-range", type=_pair, default=(-0.4, 1.5))
    p.add_argument("--random-branching", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--anchor", type=_anchor, metavar="NODE:MODE")
    p.add_argument("--out", metavar="PATH")
    return parser


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _load_valid(path: str):
    model, anchor, _ = read_instance(read_text(path))
    problems = validate_model(model)
    return model, anchor, problems


def _print_violations(problems) -> None:
    for v in problems:
        print(v)


def _resolve_anchor(model, arg, doc_anchor):
    anchor = arg if arg is not None else doc_anchor
    if anchor is not None and (anchor[0] >= len(model.tree) or anchor[1] >= model.num_modes):
        raise DocumentError(f"anchor {anchor[0]}:{anchor[1] + 1} out of range")
    return anchor


def cmd_validate(args) -> int:
    _, _, problems = _load_valid(args.instance)
    _print_violations(problems)
    return EXIT_FAIL if problems else EXIT_OK


def cmd_solve(args) -> int:
    model, doc_anchor, problems = _load_valid(args.instance)
    if problems:
        _print_violations(problems)
        return EXIT_FAIL
    anchor = _resolve_anchor(model, args.anchor, doc_anchor)
    vf = (backward_induction_implicit if args.implicit else backward_induction_explicit)(model)
    result: dict = {
        "format": "optswitch-solution",
        "version": 1,
        "variant": vf.variant,
        "num_modes": model.num_modes,
        "values": [[float(x) for x in row] for row in vf.y],
    }
    if anchor is not None:
        strategy = extract_strategy(vf, *anchor)
        result["anchor"] = {"node": anchor[0], "mode": anchor[1] + 1}
        result["strategy"] = {"events": events_to_list(strategy)}
        result["J"] = evaluate(strategy, model)
    if args.report:
        result["report"] = equivalence_report(model).to_dict()
    _emit(dump_result(result), args.out)
    if args.report and max(result["report"].values()) >= VALUE_TOL:
        return EXIT_FAIL
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model, _, problems = _load_valid(args.instance)
    if problems:
        _print_violations(problems)
        return EXIT_FAIL
    try:
        strategy = read_strategy(read_text(args.strategy), model)
    except InadmissibleStrategyError as exc:
        _print_violations(exc.violations)
        return EXIT_FAIL
    result = {
        "format": "optswitch-evaluation",
        "version": 1,
        "start": {"node": strategy.start_node, "mode": strategy.start_mode + 1},
        "J": evaluate(strategy, model),
    }
    _emit(dump_result(result), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    model, doc_anchor, problems = _load_valid(args.instance)
    if problems:
        _print_violations(problems)
        return EXIT_FAIL
    anchor = _resolve_anchor(model, args.anchor, doc_anchor) or (model.tree.root, 0)
    budget = EnumerationBudget(max_assignments=args.budget)
    try:
        value, argmax = enumerate_optimum(model, anchor[0], anchor[1], budget)
    except BudgetExceededError as exc:
        print(f"refused: {exc}")
        return EXIT_FAIL
    dp = float(backward_induction_explicit(model).y[anchor])
    diff = abs(value - dp)
    result = {
        "format": "optswitch-oracle",
        "version": 1,
        "anchor": {"node": anchor[0], "mode": anchor[1] + 1},
        "oracle_value": value,
        "dp_value": dp,
        "difference": diff,
        "argmax": {"events": events_to_list(argmax)},
    }
    _emit(dump_result(result), args.out)
    return EXIT_FAIL if diff >= VALUE_TOL else EXIT_OK


def cmd_generate(args) -> int:
    spec = GeneratorSpec(
        horizon=args.horizon,
        branching=args.branching,
        num_modes=args.modes,
        psi_range=args.psi_range,
        terminal_range=args.terminal_range,
        gamma_range=args.gamma_range,
        seed=args.seed,
        random_branching=args.random_branching,
    )
    try:
        model = gen_instance(spec)
    except GenerationError as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    anchor = _resolve_anchor(model, args.anchor, None)
    _emit(write_instance(model, anchor, name=f"generated-seed-{args.seed}"), args.out)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "evaluate": cmd_evaluate,
    "oracle": cmd_oracle,
    "generate": cmd_generate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except DocumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def run() -> None:
    sys.exit(main())
