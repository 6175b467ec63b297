"""Orderings, full elaboration and fixed-point stabilization.

Full elaboration splits every flow point into one copy per weak total order
of the variables, re-indexes variables into sorted order per copy, and keeps
only the satisfiable closed constraints. The result is stable and has the
downward closure property, which reduces termination to plain size-change
termination and enables polynomial ranking construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from . import closure
from .model import (
    Arc,
    ConstraintSystem,
    Invariant,
    MonotonicityConstraint,
    ResourceBudgetError,
    VarTerm,
    arc_key,
)

DEFAULT_ORDERING_CAP = 6


@dataclass(frozen=True)
class Ordering:
    """A weak total order of {1..n} as an ordered set partition: variables
    within a block are equal, earlier blocks are strictly below later ones."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        if not self.blocks:
            raise ValueError("ordering must have at least one block")
        norm = []
        for block in self.blocks:
            if not block:
                raise ValueError("empty block in ordering")
            if seen & set(block):
                raise ValueError("blocks must be disjoint")
            seen.update(block)
            norm.append(tuple(sorted(block)))
        if seen != set(range(1, len(seen) + 1)):
            raise ValueError("blocks must cover 1..n")
        object.__setattr__(self, "blocks", tuple(norm))

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    def sorted_variables(self) -> tuple[int, ...]:
        """Original variable indices in ascending value order; ties within a
        block are broken by original index. Position i holds psi(i)."""
        return tuple(v for block in self.blocks for v in block)

    def position_of(self, var: int) -> int:
        return self.sorted_variables().index(var) + 1

    def label(self, names: Sequence[str] | None = None) -> str:
        def nm(i: int) -> str:
            return VarTerm(i).text(names)

        return "<".join("=".join(nm(v) for v in block) for block in self.blocks)

    def sorted_invariant(self) -> Invariant:
        """The chain y_1 (< or =) y_2 ... over re-indexed variables."""
        arcs: list[Arc] = []
        pos = 0
        for bi, block in enumerate(self.blocks):
            for off in range(len(block)):
                pos += 1
                if off > 0:
                    arcs.append(Arc(VarTerm(pos), VarTerm(pos - 1), False))
                    arcs.append(Arc(VarTerm(pos - 1), VarTerm(pos), False))
                elif bi > 0:
                    arcs.append(Arc(VarTerm(pos), VarTerm(pos - 1), True))
        return Invariant(frozenset(arcs))

    def guard_arcs(self) -> tuple[Arc, ...]:
        """The same chain expressed over the original variable indices."""
        arcs: list[Arc] = []
        order = self.sorted_variables()
        pos_block = [bi for bi, block in enumerate(self.blocks) for _ in block]
        for k in range(1, len(order)):
            a, b = order[k - 1], order[k]
            if pos_block[k] == pos_block[k - 1]:
                arcs.append(Arc(VarTerm(a), VarTerm(b), False))
                arcs.append(Arc(VarTerm(b), VarTerm(a), False))
            else:
                arcs.append(Arc(VarTerm(b), VarTerm(a), True))
        return tuple(arcs)

    @classmethod
    def of_values(cls, values: Sequence) -> "Ordering":
        """The weak order induced by a concrete assignment (1-based vars)."""
        groups: dict[object, list[int]] = {}
        for i, v in enumerate(values, start=1):
            groups.setdefault(v, []).append(i)
        return cls(tuple(tuple(groups[v]) for v in sorted(groups)))


def ordered_bell(n: int) -> int:
    """Number of weak total orders of n elements (recurrence form)."""
    if n == 0:
        return 1
    return sum(comb(n, k) * ordered_bell(n - k) for k in range(1, n + 1))


def _ordered_partitions(elems: tuple[int, ...]) -> Iterator[tuple[tuple[int, ...], ...]]:
    if not elems:
        yield ()
        return
    first = elems[0]
    for size in range(1, len(elems) + 1):
        for rest_of_block in combinations(elems[1:], size - 1):
            block = tuple(sorted((first,) + rest_of_block))
            remaining = tuple(e for e in elems if e not in block)
            for tail in _ordered_partitions(remaining):
                for pos in range(len(tail) + 1):
                    yield tail[:pos] + (block,) + tail[pos:]


def enumerate_orderings(n: int, cap: int = DEFAULT_ORDERING_CAP) -> list[Ordering]:
    """All weak total orders of {1..n}, canonical, lexicographic by block
    structure. Count equals the nth ordered Bell number."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > cap:
        raise ResourceBudgetError(
            f"ordering enumeration capped at n={cap} "
            f"(B_{n}={ordered_bell(n)} points per flow point); raise the cap to override"
        )
    seen: set[tuple] = set()
    out: list[Ordering] = []
    for part in _ordered_partitions(tuple(range(1, n + 1))):
        if part not in seen:
            seen.add(part)
            out.append(Ordering(part))
    out.sort(key=lambda o: o.blocks)
    return out


# --- full elaboration ---------------------------------------------------------


@dataclass(frozen=True)
class ElaboratedSystem:
    """A fully elaborated system plus the simulation maps back to the
    original: phi maps an original point to its elaborated copies and psi
    gives, per copy, the original variable at each sorted position."""

    system: ConstraintSystem
    phi: Mapping[str, tuple[str, ...]]
    psi: Mapping[str, tuple[int, ...]]
    orderings: Mapping[str, Ordering]
    base_point: Mapping[str, str]
    candidates: int

    def isolated_points(self) -> set[str]:
        touched = {g.src_point for g in self.system.mcs} | {
            g.dst_point for g in self.system.mcs
        }
        return set(self.system.points) - touched


def _rename_arcs(
    arcs: Iterable[Arc], src_pos: Mapping[int, int], dst_pos: Mapping[int, int]
) -> frozenset[Arc]:
    def rename(t: VarTerm) -> VarTerm:
        table = dst_pos if t.primed else src_pos
        return VarTerm(table[t.index], t.primed)

    return frozenset(Arc(rename(a.src), rename(a.dst), a.strict) for a in arcs)


def fully_elaborate(cs: ConstraintSystem, ordering_cap: int = DEFAULT_ORDERING_CAP) -> ElaboratedSystem:
    """One flow point per (original point, ordering) with the sorted chain
    invariant; one candidate constraint per (MC, source ordering, target
    ordering), closed, with unsatisfiable candidates removed."""
    orderings = enumerate_orderings(cs.n, ordering_cap)
    names = cs.var_names
    points: dict[str, Invariant] = {}
    phi: dict[str, tuple[str, ...]] = {}
    psi: dict[str, tuple[int, ...]] = {}
    point_orderings: dict[str, Ordering] = {}
    base_point: dict[str, str] = {}
    pid_of: dict[tuple[str, Ordering], str] = {}

    for f in cs.points:
        copies = []
        for pi in orderings:
            pid = f"{f}@{pi.label(names)}"
            points[pid] = pi.sorted_invariant()
            psi[pid] = pi.sorted_variables()
            point_orderings[pid] = pi
            base_point[pid] = f
            pid_of[(f, pi)] = pid
            copies.append(pid)
        phi[f] = tuple(copies)

    position_maps = {
        pi: {v: k + 1 for k, v in enumerate(pi.sorted_variables())} for pi in orderings
    }
    prime_inv = lambda arcs: frozenset(
        Arc(VarTerm(a.src.index, True), VarTerm(a.dst.index, True), a.strict) for a in arcs
    )

    mcs: list[MonotonicityConstraint] = []
    candidates = 0
    for g in cs.mcs:
        inv_src = cs.invariant_of(g.src_point)
        inv_dst = cs.invariant_of(g.dst_point)
        for pi in orderings:
            for varpi in orderings:
                candidates += 1
                src_pos = position_maps[pi]
                dst_pos = position_maps[varpi]
                arcs = set(_rename_arcs(g.arcs, src_pos, dst_pos))
                # The original invariants travel with the constraint so that
                # contradictory orderings are filtered out by the closure.
                arcs |= _rename_arcs(inv_src.arcs, src_pos, src_pos)
                arcs |= prime_inv(_rename_arcs(inv_dst.arcs, dst_pos, dst_pos))
                src_pid = pid_of[(g.src_point, pi)]
                dst_pid = pid_of[(g.dst_point, varpi)]
                raw = MonotonicityConstraint(
                    f"{g.name}@{pi.label(names)}@{varpi.label(names)}",
                    src_pid,
                    dst_pid,
                    frozenset(arcs),
                )
                closed = closure.close(raw, points[src_pid], points[dst_pid])
                if closed is not None:
                    mcs.append(closed)

    elaborated = ConstraintSystem(
        cs.n,
        tuple(f"y{i}" for i in range(1, cs.n + 1)),
        points,
        tuple(mcs),
    )
    return ElaboratedSystem(elaborated, phi, psi, point_orderings, base_point, candidates)


# --- stability ----------------------------------------------------------------


def is_stable(cs: ConstraintSystem) -> bool:
    """Closed and satisfiable constraints whose entailed source-source and
    target-target relations are all recorded in the endpoint invariants."""
    inv_closures: dict[str, Optional[frozenset[Arc]]] = {
        p: closure.close_invariant(inv) for p, inv in cs.points.items()
    }
    for g in cs.mcs:
        c = closure.close(g, cs.invariant_of(g.src_point), cs.invariant_of(g.dst_point))
        if c is None or c.arcs != g.arcs:
            return False
        for a in g.arcs:
            if not a.src.primed and not a.dst.primed:
                recorded = inv_closures.get(g.src_point)
                if recorded is None or not closure.arc_set_entails(recorded, a):
                    return False
            elif a.src.primed and a.dst.primed:
                recorded = inv_closures.get(g.dst_point)
                unprimed = Arc(VarTerm(a.src.index), VarTerm(a.dst.index), a.strict)
                if recorded is None or not closure.arc_set_entails(recorded, unprimed):
                    return False
    return True


def is_fully_elaborated(cs: ConstraintSystem) -> bool:
    """Every invariant totally orders the variables; every constraint is
    closed and satisfiable."""
    for inv in cs.points.values():
        ci = closure.close_invariant(inv)
        if ci is None:
            return False
        for i in range(1, cs.n + 1):
            for j in range(i + 1, cs.n + 1):
                a, b = VarTerm(i), VarTerm(j)
                decided = (
                    closure.arc_set_entails(ci, Arc(a, b, True))
                    or closure.arc_set_entails(ci, Arc(b, a, True))
                    or (Arc(a, b, False) in ci and Arc(b, a, False) in ci)
                )
                if not decided:
                    return False
    for g in cs.mcs:
        c = closure.close(g, cs.invariant_of(g.src_point), cs.invariant_of(g.dst_point))
        if c is None or c.arcs != g.arcs:
            return False
    return True


def has_downward_closure(
    g: MonotonicityConstraint,
    src_ordering: Ordering | None = None,
    dst_ordering: Ordering | None = None,
) -> bool:
    """For sorted-indexed constraints: a strict forward arc to position j
    implies strict arcs to every lower position, and a non-strict one
    implies some arc to every lower position."""
    n = max((max(a.src.index, a.dst.index) for a in g.arcs), default=0)
    if dst_ordering is not None:
        n = max(n, dst_ordering.n)

    def dst_var_at(pos: int) -> int:
        if dst_ordering is None:
            return pos
        return dst_ordering.sorted_variables()[pos - 1]

    def dst_pos(var: int) -> int:
        return dst_ordering.position_of(var) if dst_ordering else var

    for a in g.arcs:
        if a.src.primed or not a.dst.primed:
            continue
        j = dst_pos(a.dst.index)
        for k in range(1, j):
            target = VarTerm(dst_var_at(k), True)
            if a.strict:
                if Arc(a.src, target, True) not in g.arcs:
                    return False
            else:
                if (
                    Arc(a.src, target, True) not in g.arcs
                    and Arc(a.src, target, False) not in g.arcs
                ):
                    return False
    return True


# --- fixed-point stabilization -------------------------------------------------


def _invariant_suffix(inv: Invariant, names: Sequence[str]) -> str:
    from .model import constraint_strings

    return "&".join(constraint_strings(inv.arcs, names)).replace(" ", "")


def stabilize(cs: ConstraintSystem, max_points: int = 10_000) -> ConstraintSystem:
    """Fixed-point stabilization: repeatedly split a flow point whose
    invariant misses a relation entailed by an incident constraint, copying
    incident constraints to both halves, until the system is stable.

    Size-change instances are stable already and pass through unchanged.
    """
    names = cs.var_names
    base: dict[str, str] = {p: p for p in cs.points}
    points: dict[str, Invariant] = dict(cs.points)

    def close_all(
        mcs: Iterable[MonotonicityConstraint],
    ) -> list[MonotonicityConstraint]:
        out = []
        seen: set[tuple] = set()
        for g in mcs:
            c = closure.close(g, points.get(g.src_point), points.get(g.dst_point))
            if c is None:
                continue
            key = (c.name, c.src_point, c.dst_point, c.arcs)
            if key not in seen:
                seen.add(key)
                out.append(c)
        return out

    mcs = close_all(cs.mcs)

    while True:
        inv_closures = {p: closure.close_invariant(inv) for p, inv in points.items()}
        violation: tuple[str, tuple[int, int, bool]] | None = None
        for g in sorted(mcs, key=lambda m: (m.src_point, m.dst_point, m.name)):
            for a in sorted(g.arcs, key=arc_key):
                if a.src.primed != a.dst.primed:
                    continue
                point = g.dst_point if a.src.primed else g.src_point
                recorded = inv_closures[point]
                plain = Arc(VarTerm(a.src.index), VarTerm(a.dst.index), a.strict)
                if recorded is not None and closure.arc_set_entails(recorded, plain):
                    continue
                cand = (point, (a.src.index, a.dst.index, a.strict))
                if violation is None or cand < violation:
                    violation = cand
        if violation is None:
            break

        point, (i, j, strict) = violation
        held = Arc(VarTerm(i), VarTerm(j), strict)
        # Negation of x_i > x_j is x_j >= x_i; of x_i >= x_j is x_j > x_i.
        refused = Arc(VarTerm(j), VarTerm(i), not strict)
        replacements = []
        for extra in (held, refused):
            inv = Invariant(points[point].arcs | {extra})
            pid = f"{base[point]}@{_invariant_suffix(inv, names)}"
            if pid not in points:
                points[pid] = inv
                base[pid] = base[point]
            replacements.append(pid)
        del points[point]
        del base[point]

        rerouted: list[MonotonicityConstraint] = []
        for g in mcs:
            srcs = replacements if g.src_point == point else [g.src_point]
            dsts = replacements if g.dst_point == point else [g.dst_point]
            for s in srcs:
                for d in dsts:
                    rerouted.append(
                        MonotonicityConstraint(g.name, s, d, g.arcs, closed=False)
                    )
        mcs = close_all(rerouted)
        if len(points) > max_points:
            raise ResourceBudgetError(
                f"stabilization exceeded the {max_points}-point budget"
            )

    return ConstraintSystem(cs.n, names, points, tuple(mcs))
