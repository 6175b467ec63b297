"""Consequence closure, composition, collapse and subsumption.

Every operation works on the weighted-graph view of a constraint: non-strict
arcs weigh 0, strict arcs weigh -1. A constraint is unsatisfiable exactly
when that graph has a negative-weight cycle; otherwise its closure has an
arc a -> b for every path a ~> b, strict when some path has negative weight.
Unsatisfiable results are returned as None.

All functions are pure; inputs are never mutated.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Optional, Sequence

from .model import (
    Arc,
    EndpointMismatchError,
    Invariant,
    MonotonicityConstraint,
    VarTerm,
)

_INF = 1 << 30


def _needed_n(arc_groups: Iterable[Iterable[Arc]]) -> int:
    n = 0
    for arcs in arc_groups:
        for a in arcs:
            n = max(n, a.src.index, a.dst.index)
    return n


def _fresh_matrix(size: int) -> list[list[int]]:
    w = [[_INF] * size for _ in range(size)]
    for i in range(size):
        w[i][i] = 0
    return w


def _add(w: list[list[int]], u: int, v: int, strict: bool) -> None:
    weight = -1 if strict else 0
    if weight < w[u][v]:
        w[u][v] = weight


def _all_pairs_lightest(w: list[list[int]]) -> None:
    # Cubic dynamic programming over all intermediate nodes; with negative
    # cycles the exact values are irrelevant, only the sign of w[v][v].
    size = len(w)
    for k in range(size):
        wk = w[k]
        for i in range(size):
            wik = w[i][k]
            if wik == _INF:
                continue
            wi = w[i]
            for j in range(size):
                d = wk[j]
                if d != _INF and wik + d < wi[j]:
                    wi[j] = wik + d


def _has_negative_cycle(w: list[list[int]]) -> bool:
    return any(w[v][v] < 0 for v in range(len(w)))


def close(
    mc: MonotonicityConstraint,
    inv_src: Invariant | None = None,
    inv_dst: Invariant | None = None,
) -> Optional[MonotonicityConstraint]:
    """Consequence closure of `mc` taking the endpoint invariants into
    account; None when unsatisfiable."""
    groups: list[Iterable[Arc]] = [mc.arcs]
    if inv_src is not None:
        groups.append(inv_src.arcs)
    if inv_dst is not None:
        groups.append(inv_dst.arcs)
    n = _needed_n(groups)
    size = 2 * n

    def node(t: VarTerm) -> int:
        return t.index - 1 + (n if t.primed else 0)

    w = _fresh_matrix(size)
    for a in mc.arcs:
        _add(w, node(a.src), node(a.dst), a.strict)
    if inv_src is not None:
        for a in inv_src.arcs:
            _add(w, node(a.src), node(a.dst), a.strict)
    if inv_dst is not None:
        for a in inv_dst.arcs:
            # Invariant of the target point constrains the primed layer.
            _add(w, node(a.src) + n, node(a.dst) + n, a.strict)
    _all_pairs_lightest(w)
    if _has_negative_cycle(w):
        return None

    def term(i: int) -> VarTerm:
        return VarTerm(i + 1, False) if i < n else VarTerm(i - n + 1, True)

    arcs = frozenset(
        Arc(term(u), term(v), w[u][v] < 0)
        for u in range(size)
        for v in range(size)
        if u != v and w[u][v] != _INF
    )
    return MonotonicityConstraint(mc.name, mc.src_point, mc.dst_point, arcs, closed=True)


def close_invariant(inv: Invariant) -> Optional[frozenset[Arc]]:
    """Closure of an invariant on its own; None when unsatisfiable."""
    n = _needed_n([inv.arcs])
    w = _fresh_matrix(n)
    for a in inv.arcs:
        _add(w, a.src.index - 1, a.dst.index - 1, a.strict)
    _all_pairs_lightest(w)
    if _has_negative_cycle(w):
        return None
    return frozenset(
        Arc(VarTerm(u + 1), VarTerm(v + 1), w[u][v] < 0)
        for u in range(n)
        for v in range(n)
        if u != v and w[u][v] != _INF
    )


def arc_set_entails(arcs: frozenset[Arc], c: Arc) -> bool:
    """Membership test on a closed arc set: an arc at least as strong as c."""
    return c in arcs or (not c.strict and Arc(c.src, c.dst, True) in arcs)


def entails(g: MonotonicityConstraint, c: Arc) -> bool:
    """Does closed `g` entail constraint `c`?"""
    if not g.closed:
        raise ValueError("entails requires a consequence-closed constraint")
    return arc_set_entails(g.arcs, c)


def entails_equality(g: MonotonicityConstraint, a: VarTerm, b: VarTerm) -> bool:
    if a == b:
        return True
    return entails(g, Arc(a, b, False)) and entails(g, Arc(b, a, False))


def compose(
    g1: MonotonicityConstraint,
    g2: MonotonicityConstraint,
    inv_src: Invariant | None = None,
    inv_mid: Invariant | None = None,
    inv_dst: Invariant | None = None,
) -> Optional[MonotonicityConstraint]:
    """Composition g1;g2 over the three-layer multipath graph.

    The middle layer receives g1's primed arcs, g2's unprimed arcs and the
    middle point's invariant; the result carries every implied relation
    among the source and target layers (including source-source and
    target-target arcs). None when the multipath is unsatisfiable.

    Closed inputs already subsume their endpoint invariants, so the
    invariant arguments are only needed for raw constraints.
    """
    if g1.dst_point != g2.src_point:
        raise EndpointMismatchError(
            f"cannot compose {g1.name}:{g1.src_point}->{g1.dst_point} "
            f"with {g2.name}:{g2.src_point}->{g2.dst_point}"
        )
    groups: list[Iterable[Arc]] = [g1.arcs, g2.arcs]
    for inv in (inv_src, inv_mid, inv_dst):
        if inv is not None:
            groups.append(inv.arcs)
    n = _needed_n(groups)
    size = 3 * n

    def layered(t: VarTerm, base: int) -> int:
        return t.index - 1 + (base + n if t.primed else base)

    w = _fresh_matrix(size)
    for a in g1.arcs:
        _add(w, layered(a.src, 0), layered(a.dst, 0), a.strict)
    for a in g2.arcs:
        _add(w, layered(a.src, n), layered(a.dst, n), a.strict)
    if inv_src is not None:
        for a in inv_src.arcs:
            _add(w, a.src.index - 1, a.dst.index - 1, a.strict)
    if inv_mid is not None:
        for a in inv_mid.arcs:
            _add(w, n + a.src.index - 1, n + a.dst.index - 1, a.strict)
    if inv_dst is not None:
        for a in inv_dst.arcs:
            _add(w, 2 * n + a.src.index - 1, 2 * n + a.dst.index - 1, a.strict)
    _all_pairs_lightest(w)
    if _has_negative_cycle(w):
        return None

    outer = list(range(n)) + list(range(2 * n, 3 * n))

    def term(i: int) -> VarTerm:
        return VarTerm(i + 1, False) if i < n else VarTerm(i - 2 * n + 1, True)

    arcs = frozenset(
        Arc(term(u), term(v), w[u][v] < 0)
        for u in outer
        for v in outer
        if u != v and w[u][v] != _INF
    )
    return MonotonicityConstraint(
        f"{g1.name};{g2.name}", g1.src_point, g2.dst_point, arcs, closed=True
    )


def collapse(
    path: Sequence[MonotonicityConstraint],
    invariants: Mapping[str, Invariant] | None = None,
) -> Optional[MonotonicityConstraint]:
    """Left fold of composition along a CFG path; close() for a singleton."""
    if not path:
        raise ValueError("collapse of an empty path")
    for a, b in zip(path, path[1:]):
        if a.dst_point != b.src_point:
            raise EndpointMismatchError(
                f"path break: {a.name} ends at {a.dst_point}, {b.name} starts at {b.src_point}"
            )

    def inv(point: str) -> Invariant | None:
        return invariants.get(point) if invariants is not None else None

    acc = close(path[0], inv(path[0].src_point), inv(path[0].dst_point))
    if acc is None:
        return None
    for g in path[1:]:
        step = close(g, inv(g.src_point), inv(g.dst_point))
        if step is None:
            return None
        acc = compose(acc, step)
        if acc is None:
            return None
    return acc


def subsumes(g: MonotonicityConstraint, h: MonotonicityConstraint) -> bool:
    """True when g is less constrained than h (every transition described by
    h is described by g); both must be closed with equal endpoints."""
    if not (g.closed and h.closed):
        raise ValueError("subsumption requires consequence-closed constraints")
    if (g.src_point, g.dst_point) != (h.src_point, h.dst_point):
        raise EndpointMismatchError(
            f"subsumption across endpoints {g.src_point}->{g.dst_point} vs "
            f"{h.src_point}->{h.dst_point}"
        )
    return all(arc_set_entails(h.arcs, a) for a in g.arcs)
