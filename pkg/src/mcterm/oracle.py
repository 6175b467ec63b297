"""Independent checkers: brute-force cycle search, multipath powers,
symbolic and numeric ranking verification, and a seeded system generator.

These deliberately avoid the main decision paths so they can act as
oracles for them; the closure engine remains the only symbolic authority.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Optional, Sequence

from . import closure
from .decider import build_circular_variant
from .model import (
    Arc,
    ConstraintSystem,
    Invariant,
    MonotonicityConstraint,
    ResourceBudgetError,
    VarTerm,
)
from .ranking import Guard, RankingFunction


@dataclass(frozen=True)
class NumericState:
    point: str
    values: tuple[int, ...]


def default_walk_bound(n: int) -> int:
    return 2 * (2 * n) ** 2


def ltt_bruteforce(
    g: MonotonicityConstraint, max_len: int | None = None, n: int | None = None
) -> bool:
    """Exhaustive search for a descending closed walk with shortcut balance
    <= 0 (forward or balanced) in the circular variant, up to max_len arcs.

    Implemented as a layered minimum-balance sweep, which decides exactly
    the same predicate as enumerating every closed walk of that length.
    """
    cv = build_circular_variant(g, n)
    if max_len is None:
        max_len = default_walk_bound(cv.n)
    if max_len < 2:
        raise ValueError("max_len must be at least 2")
    edges = cv.edges
    nodes = range(2 * cv.n)
    for start in nodes:
        # state: (node, seen-strict) -> minimum balance after exactly t arcs
        frontier: dict[tuple[int, bool], int] = {(start, False): 0}
        for _ in range(max_len):
            nxt: dict[tuple[int, bool], int] = {}
            for (v, strict_seen), bal in frontier.items():
                for e in edges:
                    if e.src != v:
                        continue
                    key = (e.dst, strict_seen or e.strict)
                    cand = bal + e.weight
                    if cand < nxt.get(key, 1 << 30):
                        nxt[key] = cand
            frontier = nxt
            if frontier.get((start, True), 1) <= 0:
                return True
            if not frontier:
                break
    return False


def satisfiable_power(g: MonotonicityConstraint, k: int) -> bool:
    """Do k copies of the cyclic constraint compose consistently?"""
    if k < 1:
        raise ValueError("k must be positive")
    return closure.collapse([g] * k) is not None


# --- numeric semantics -------------------------------------------------------


def satisfies_arcs(src: Sequence[int], dst: Sequence[int] | None, arcs) -> bool:
    for a in arcs:
        lhs = (dst if a.src.primed else src)[a.src.index - 1]
        rhs = (dst if a.dst.primed else src)[a.dst.index - 1]
        if a.strict:
            if not lhs > rhs:
                return False
        elif not lhs >= rhs:
            return False
    return True


def point_states(cs: ConstraintSystem, point: str, domain: int) -> list[tuple[int, ...]]:
    inv = cs.invariant_of(point)
    return [
        values
        for values in product(range(domain + 1), repeat=cs.n)
        if satisfies_arcs(values, None, inv.arcs)
    ]


def numeric_transitions(
    cs: ConstraintSystem, domain: int
) -> Iterator[tuple[MonotonicityConstraint, tuple[int, ...], tuple[int, ...]]]:
    """Every concrete transition over values {0..domain}."""
    states = {p: point_states(cs, p, domain) for p in cs.points}
    for g in cs.mcs:
        for src in states[g.src_point]:
            for dst in states[g.dst_point]:
                if satisfies_arcs(src, dst, g.arcs):
                    yield g, src, dst


# --- ranking verification ----------------------------------------------------


@dataclass(frozen=True)
class SymbolicCheck:
    mc: str
    src_guard: str
    dst_guard: str
    status: str  # "ok" | "skip" | "fail"
    detail: str = ""


@dataclass(frozen=True)
class SymbolicReport:
    checks: tuple[SymbolicCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def failures(self) -> list[SymbolicCheck]:
        return [c for c in self.checks if c.status == "fail"]


class GuardCoverageError(ValueError):
    """The guards of some point do not cover its invariant's state space."""


def _ordering_entails_guard(chain_closure: frozenset[Arc], guard: Guard) -> bool:
    return all(closure.arc_set_entails(chain_closure, a) for a in guard.arcs)


def check_guard_coverage(cs: ConstraintSystem, ranking: RankingFunction) -> None:
    """Guards must be exhaustive: every total ordering of the variables that
    is consistent with the point invariant must satisfy some guard."""
    from .elaborate import enumerate_orderings

    orderings = enumerate_orderings(cs.n, cap=max(6, cs.n))
    for point, inv in cs.points.items():
        rows = ranking.rows.get(point)
        if not rows:
            raise GuardCoverageError(f"no ranking rows for point {point}")
        for pi in orderings:
            chain = closure.close_invariant(Invariant(frozenset(pi.guard_arcs()) | inv.arcs))
            if chain is None:
                continue  # ordering contradicts the invariant
            if not any(
                _ordering_entails_guard(chain, g) for row in rows for g in row.guards
            ):
                raise GuardCoverageError(
                    f"point {point}: no guard covers ordering {pi.label(cs.var_names)}"
                )


def verify_ranking_symbolic(cs: ConstraintSystem, ranking: RankingFunction) -> SymbolicReport:
    """For every constraint and guard-region pair, close the conjunction and
    walk the two vectors positionwise: integer slots compare numerically,
    variable slots must be entailed equal to continue or strictly descending
    to accept. Unsatisfiable combinations are skipped."""
    check_guard_coverage(cs, ranking)
    names = cs.var_names
    checks: list[SymbolicCheck] = []
    for g in cs.mcs:
        src_rows = ranking.rows.get(g.src_point, ())
        dst_rows = ranking.rows.get(g.dst_point, ())
        for src_row in src_rows:
            for dst_row in dst_rows:
                for src_guard in src_row.guards:
                    for dst_guard in dst_row.guards:
                        checks.append(
                            _symbolic_case(cs, g, src_guard, dst_guard, src_row, dst_row, names)
                        )
    return SymbolicReport(tuple(checks))


def _symbolic_case(cs, g, src_guard, dst_guard, src_row, dst_row, names) -> SymbolicCheck:
    label = lambda gu: gu.text(names)
    primed_guard = frozenset(
        Arc(VarTerm(a.src.index, True), VarTerm(a.dst.index, True), a.strict)
        for a in dst_guard.arcs
    )
    combined = MonotonicityConstraint(
        g.name, g.src_point, g.dst_point, g.arcs | frozenset(src_guard.arcs) | primed_guard
    )
    closed = closure.close(
        combined, cs.invariant_of(g.src_point), cs.invariant_of(g.dst_point)
    )
    if closed is None:
        return SymbolicCheck(g.name, label(src_guard), label(dst_guard), "skip")
    sv, dv = src_row.vector.entries, dst_row.vector.entries
    for pos in range(max(len(sv), len(dv))):
        a = sv[pos] if pos < len(sv) else (0 if pos % 2 == 0 else None)
        b = dv[pos] if pos < len(dv) else (0 if pos % 2 == 0 else None)
        if pos % 2 == 0:
            if a > b:
                return SymbolicCheck(g.name, label(src_guard), label(dst_guard), "ok")
            if a < b:
                return SymbolicCheck(
                    g.name,
                    label(src_guard),
                    label(dst_guard),
                    "fail",
                    f"integer position {pos} increases ({a} -> {b})",
                )
            continue
        if a is None and b is None:
            continue
        if a is not None and b is None:
            return SymbolicCheck(g.name, label(src_guard), label(dst_guard), "ok")
        if a is None:
            return SymbolicCheck(
                g.name,
                label(src_guard),
                label(dst_guard),
                "fail",
                f"sentinel at source position {pos} compares below a variable",
            )
        src_term, dst_term = VarTerm(a), VarTerm(b, True)
        if closure.entails(closed, Arc(src_term, dst_term, True)):
            return SymbolicCheck(g.name, label(src_guard), label(dst_guard), "ok")
        if closure.entails(closed, Arc(src_term, dst_term, False)) and closure.entails(
            closed, Arc(dst_term, src_term, False)
        ):
            continue
        return SymbolicCheck(
            g.name,
            label(src_guard),
            label(dst_guard),
            "fail",
            f"cannot certify {src_term.text(names)} > {dst_term.text(names)} "
            f"nor equality at position {pos}",
        )
    return SymbolicCheck(
        g.name,
        label(src_guard),
        label(dst_guard),
        "fail",
        "vectors compare equal end to end (no strict descent)",
    )


@dataclass(frozen=True)
class NumericCounterexample:
    mc: str
    src: NumericState
    dst: NumericState
    src_value: tuple
    dst_value: tuple


@dataclass(frozen=True)
class NumericReport:
    ok: bool
    counterexample: Optional[NumericCounterexample]
    transitions_checked: int


def verify_ranking_numeric(
    cs: ConstraintSystem,
    ranking: RankingFunction,
    domain: int = 4,
    budget: int = 2_000_000,
) -> NumericReport:
    """Enumerate every transition over {0..domain} and check strict
    lexicographic descent; numeric counterexamples are sound refutations,
    numeric passes are bounded evidence."""
    if domain < 1:
        raise ValueError("domain size must be >= 1")
    size = (domain + 1) ** (2 * cs.n) * max(1, len(cs.mcs))
    if size > budget:
        raise ResourceBudgetError(
            f"numeric enumeration of ~{size} pairs exceeds the budget {budget}"
        )
    checked = 0
    for g, src, dst in numeric_transitions(cs, domain):
        checked += 1
        sv = ranking.value_at(g.src_point, src)
        dv = ranking.value_at(g.dst_point, dst)
        if sv is None or dv is None or not sv > dv:
            return NumericReport(
                False,
                NumericCounterexample(
                    g.name,
                    NumericState(g.src_point, src),
                    NumericState(g.dst_point, dst),
                    sv,
                    dv,
                ),
                checked,
            )
    return NumericReport(True, None, checked)


# --- random systems ----------------------------------------------------------


def random_system(
    n: int,
    points: int,
    mcs: int,
    density: float,
    seed: int,
    inv_density: float = 0.0,
) -> ConstraintSystem:
    """Seeded, reproducible generator. Every candidate arc (ordered pair of
    distinct terms) is included independently with probability `density`;
    unsatisfiable constraints are kept, deciders must cope with them."""
    rng = random.Random(seed)
    var_names = tuple(f"x{i}" for i in range(1, n + 1))
    point_ids = [f"p{i}" for i in range(1, points + 1)]
    terms = [VarTerm(i, primed) for primed in (False, True) for i in range(1, n + 1)]

    def random_arcs(candidates: list[tuple[VarTerm, VarTerm]], p: float) -> frozenset[Arc]:
        arcs = []
        for src, dst in candidates:
            if rng.random() < p:
                arcs.append(Arc(src, dst, strict=rng.random() < 0.5))
        return frozenset(arcs)

    pairs = [(a, b) for a in terms for b in terms if a != b]
    unprimed_pairs = [
        (a, b) for a, b in pairs if not a.primed and not b.primed
    ]
    sys_points = {
        pid: Invariant(random_arcs(unprimed_pairs, inv_density)) for pid in point_ids
    }
    sys_mcs = tuple(
        MonotonicityConstraint(
            f"g{k}",
            rng.choice(point_ids),
            rng.choice(point_ids),
            random_arcs(pairs, density),
        )
        for k in range(1, mcs + 1)
    )
    return ConstraintSystem(n, var_names, sys_points, sys_mcs)
