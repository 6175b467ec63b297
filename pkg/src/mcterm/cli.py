"""Command-line interface.

Exit codes: 0 terminating / valid certificate, 1 non-terminating / invalid,
2 usage or input error, 3 resource budget exceeded, 4 internal disagreement
between the two deciders (only reachable with --algo both).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Sequence

from . import __version__
from .decider import ClosureOptions, closure_set, decide_from_closure_set
from .dsl import ParseError, format_system, parse_system
from .elaborate import fully_elaborate
from .model import (
    ConfigurationError,
    ConstraintSystem,
    ResourceBudgetError,
    Verdict,
    Witness,
    validate_system,
)
from .oracle import random_system, verify_ranking_numeric, verify_ranking_symbolic
from .ranking import (
    RankingParseError,
    decide_from_elaborated,
    format_ranking,
    parse_ranking,
)

EXIT_TERMINATING = 0
EXIT_NONTERMINATING = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_DISAGREEMENT = 4


def _load_system(path: str) -> ConstraintSystem:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from exc
    cs = parse_system(text)
    errors = [d for d in validate_system(cs) if d.severity == "error"]
    if errors:
        raise ParseError("; ".join(str(d) for d in errors))
    return cs


def _witness_names(witness: Witness, cs: ConstraintSystem) -> tuple[str, ...]:
    # Witnesses from the elaboration decider live on elaborated points and
    # use sorted-order variable coordinates, not the declared names.
    if witness.mc.src_point in cs.points:
        return cs.var_names
    return tuple(f"y{i}" for i in range(1, cs.n + 1))


def _witness_json(witness: Witness | None, cs: ConstraintSystem) -> dict | None:
    if witness is None:
        return None
    names = _witness_names(witness, cs)
    return {
        "src_point": witness.mc.src_point,
        "dst_point": witness.mc.dst_point,
        "constraints": witness.mc.text(names),
        "elaborated_coordinates": witness.mc.src_point not in cs.points,
        "cycle": list(witness.cycle),
    }


def _ranking_json(ranking, cs: ConstraintSystem) -> list | None:
    if ranking is None:
        return None
    out = []
    for point, rows in ranking.rows.items():
        for row in rows:
            vector = [
                e if pos % 2 == 0 else (None if e is None else cs.var_names[e - 1])
                for pos, e in enumerate(row.vector.entries)
            ]
            out.append(
                {
                    "point": point,
                    "guards": [g.text(cs.var_names) for g in row.guards],
                    "vector": vector,
                }
            )
    return out


def _print_witness(witness: Witness, cs: ConstraintSystem, out) -> None:
    names = _witness_names(witness, cs)
    where = witness.mc.src_point
    suffix = "" if where in cs.points else " (elaborated coordinates)"
    print(f"witness: cyclic constraint at {where}{suffix}", file=out)
    print(f"  {witness.mc.text(names)}", file=out)
    print(f"  collapses CFG cycle: {' -> '.join(witness.cycle)}", file=out)


def _cmd_analyze(args: argparse.Namespace) -> int:
    if args.subsumption and args.idempotent_only:
        print(
            "error: subsumption pruning may remove the idempotent counter-example; "
            "--subsumption and --idempotent-only cannot be combined",
            file=sys.stderr,
        )
        return EXIT_USAGE
    cs = _load_system(args.file)
    opts = ClosureOptions(
        subsumption=args.subsumption,
        idempotent_only=args.idempotent_only,
        budget=args.budget,
    )
    started = time.perf_counter()
    closure_size = None
    elaborated_points = None
    verdicts: dict[str, Verdict] = {}
    if args.algo in ("closure", "both"):
        cset = closure_set(cs, opts)
        closure_size = len(cset)
        verdicts["closure"] = decide_from_closure_set(cset, cs.n, opts)
    if args.algo in ("elaborate", "both"):
        elab = fully_elaborate(cs, args.ordering_cap)
        elaborated_points = len(elab.system.points)
        verdicts["elaborate"] = decide_from_elaborated(elab, cs)
    elapsed = time.perf_counter() - started

    if args.algo == "both" and verdicts["closure"].terminating != verdicts["elaborate"].terminating:
        print(
            "internal error: closure and elaboration deciders disagree "
            f"({verdicts['closure'].result} vs {verdicts['elaborate'].result})",
            file=sys.stderr,
        )
        return EXIT_DISAGREEMENT

    verdict = verdicts.get("elaborate") or verdicts["closure"]
    if args.json:
        payload = {
            "verdict": verdict.result,
            "algorithm": args.algo,
            "closure_set_size": closure_size,
            "elaborated_points": elaborated_points,
            "ranking": _ranking_json(verdict.ranking, cs),
            "witness": _witness_json(verdict.witness, cs),
            "timings": {"analysis_s": round(elapsed, 6)},
        }
        print(json.dumps(payload, indent=2))
    else:
        print(f"verdict: {verdict.result} (algorithm: {args.algo})")
        if closure_size is not None:
            print(f"closure set size: {closure_size}")
        if elaborated_points is not None:
            print(f"elaborated points: {elaborated_points}")
        if args.witness and verdict.witness is not None:
            _print_witness(verdict.witness, cs, sys.stdout)
    return EXIT_TERMINATING if verdict.terminating else EXIT_NONTERMINATING


def _cmd_rank(args: argparse.Namespace) -> int:
    cs = _load_system(args.file)
    started = time.perf_counter()
    elab = fully_elaborate(cs, args.ordering_cap)
    verdict = decide_from_elaborated(elab, cs)
    elapsed = time.perf_counter() - started
    if not verdict.terminating:
        if args.json:
            print(
                json.dumps(
                    {
                        "verdict": verdict.result,
                        "ranking": None,
                        "witness": _witness_json(verdict.witness, cs),
                        "timings": {"analysis_s": round(elapsed, 6)},
                    },
                    indent=2,
                )
            )
        else:
            print("verdict: non-terminating (no ranking exists)")
            _print_witness(verdict.witness, cs, sys.stdout)
        return EXIT_NONTERMINATING

    ranking = verdict.ranking
    verification: dict[str, bool | None] = {"symbolic": None, "numeric": None}
    ok = True
    if args.verify in ("symbolic", "both"):
        report = verify_ranking_symbolic(cs, ranking)
        verification["symbolic"] = report.ok
        ok = ok and report.ok
    if args.verify in ("numeric", "both"):
        report = verify_ranking_numeric(cs, ranking, args.domain_size)
        verification["numeric"] = report.ok
        ok = ok and report.ok
    if args.json:
        print(
            json.dumps(
                {
                    "verdict": verdict.result,
                    "ranking": _ranking_json(ranking, cs),
                    "verification": verification,
                    "elaborated_points": len(elab.system.points),
                    "timings": {"analysis_s": round(elapsed, 6)},
                },
                indent=2,
            )
        )
    else:
        print(format_ranking(ranking, cs), end="")
        for mode, result in verification.items():
            if result is not None:
                print(f"# verification ({mode}): {'pass' if result else 'FAIL'}")
    return EXIT_TERMINATING if ok else EXIT_NONTERMINATING


def _cmd_elaborate(args: argparse.Namespace) -> int:
    cs = _load_system(args.file)
    elab = fully_elaborate(cs, args.ordering_cap)
    text = format_system(elab.system)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")
    return EXIT_TERMINATING


def _cmd_check_ranking(args: argparse.Namespace) -> int:
    cs = _load_system(args.file)
    try:
        with open(args.rankfile, "r", encoding="utf-8") as fh:
            ranking = parse_ranking(fh.read(), cs)
    except OSError as exc:
        print(f"error: cannot read {args.rankfile}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = verify_ranking_symbolic(cs, ranking)
    if report.ok:
        print("ranking: valid (symbolic verification passed)")
        return EXIT_TERMINATING
    print("ranking: INVALID")
    for failure in report.failures():
        print(f"  {failure.mc}: [{failure.src_guard}] -> [{failure.dst_guard}]: {failure.detail}")
    return EXIT_NONTERMINATING


def _cmd_random(args: argparse.Namespace) -> int:
    cs = random_system(args.vars, args.points, args.mcs, args.density, args.seed)
    print(format_system(cs), end="")
    return EXIT_TERMINATING


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcterm",
        description="Termination analysis for monotonicity constraint systems.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="decide termination of a system")
    analyze.add_argument("file")
    analyze.add_argument("--algo", choices=["closure", "elaborate", "both"], default="elaborate")
    analyze.add_argument("--subsumption", action="store_true")
    analyze.add_argument("--idempotent-only", action="store_true")
    analyze.add_argument("--witness", action="store_true", help="print the witness cycle")
    analyze.add_argument("--json", action="store_true")
    analyze.add_argument("--budget", type=int, default=ClosureOptions().budget)
    analyze.add_argument("--ordering-cap", type=int, default=6)
    analyze.set_defaults(func=_cmd_analyze)

    rank = sub.add_parser("rank", help="synthesize and verify a ranking function")
    rank.add_argument("file")
    rank.add_argument("--verify", choices=["symbolic", "numeric", "both"], default="both")
    rank.add_argument("--domain-size", type=int, default=4)
    rank.add_argument("--json", action="store_true")
    rank.add_argument("--ordering-cap", type=int, default=6)
    rank.set_defaults(func=_cmd_rank)

    elaborate = sub.add_parser("elaborate", help="emit the fully elaborated system")
    elaborate.add_argument("file")
    elaborate.add_argument("--out")
    elaborate.add_argument("--ordering-cap", type=int, default=6)
    elaborate.set_defaults(func=_cmd_elaborate)

    check = sub.add_parser("check-ranking", help="verify an external ranking certificate")
    check.add_argument("file")
    check.add_argument("rankfile")
    check.set_defaults(func=_cmd_check_ranking)

    rnd = sub.add_parser("random", help="emit a seeded random system")
    rnd.add_argument("--vars", type=int, required=True)
    rnd.add_argument("--points", type=int, required=True)
    rnd.add_argument("--mcs", type=int, required=True)
    rnd.add_argument("--density", type=float, required=True)
    rnd.add_argument("--seed", type=int, required=True)
    rnd.set_defaults(func=_cmd_random)
    return parser


def run_cli(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help/--version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ParseError, RankingParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))
