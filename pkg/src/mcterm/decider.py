"""Closure-based termination decision.

Saturates the set of collapses of satisfiable multipaths, then applies the
Local Termination Test to every cyclic member: a cyclic constraint passes
when its circular variant contains a descending cycle that is forward
(traverses shortcut edges more often backward than forward) or balanced
(equally often in both directions). Any failing member is a non-termination
witness.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional

from . import closure
from .graphs import component_index, tarjan_sccs
from .model import (
    ConfigurationError,
    ConstraintSystem,
    MonotonicityConstraint,
    ResourceBudgetError,
    VarTerm,
    Verdict,
    Witness,
    arc_key,
)

DEFAULT_BUDGET = 500_000


@dataclass(frozen=True)
class ClosureOptions:
    subsumption: bool = False
    idempotent_only: bool = False
    budget: int = DEFAULT_BUDGET


@dataclass
class ClosureMember:
    mc: MonotonicityConstraint
    provenance: tuple[str, ...]


MemberKey = tuple[str, str, frozenset]


@dataclass
class ClosureSet:
    """Closed MCs keyed by (source point, target point, arc set), each with
    one originating MC-name sequence."""

    members: dict[MemberKey, ClosureMember] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[ClosureMember]:
        return iter(self.members.values())

    def cyclic_members(self) -> list[ClosureMember]:
        out = [m for m in self.members.values() if m.mc.cyclic]
        out.sort(key=lambda m: (m.mc.src_point, m.mc.dst_point, sorted(map(arc_key, m.mc.arcs))))
        return out


def _better_provenance(new: tuple[str, ...], old: tuple[str, ...]) -> bool:
    return (len(new), new) < (len(old), old)


class _SaturationStop(Exception):
    """Raised by an on_new callback to cut the saturation short."""

    def __init__(self, member: ClosureMember):
        self.member = member


def closure_set(cs: ConstraintSystem, opts: ClosureOptions | None = None) -> ClosureSet:
    """Fixed point of pairwise composition, seeded with the closures of the
    system's satisfiable MCs. With subsumption enabled, a new element
    subsumed by an existing one is dropped and existing elements subsumed by
    a new one are replaced."""
    return _run_saturation(cs, opts or ClosureOptions())


def _run_saturation(cs: ConstraintSystem, opts: ClosureOptions, on_new=None) -> ClosureSet:
    cset = ClosureSet()
    members = cset.members
    queue: deque[MemberKey] = deque()

    def add(mc: MonotonicityConstraint, provenance: tuple[str, ...]) -> None:
        key: MemberKey = (mc.src_point, mc.dst_point, mc.arcs)
        existing = members.get(key)
        if existing is not None:
            if _better_provenance(provenance, existing.provenance):
                existing.provenance = provenance
            return
        if opts.subsumption:
            same_ends = [
                k for k in members if k[0] == mc.src_point and k[1] == mc.dst_point
            ]
            for k in same_ends:
                if closure.subsumes(members[k].mc, mc):
                    return  # already covered by a less constrained member
            for k in same_ends:
                if closure.subsumes(mc, members[k].mc):
                    del members[k]
        member = ClosureMember(mc, provenance)
        members[key] = member
        queue.append(key)
        if len(members) > opts.budget:
            raise ResourceBudgetError(
                f"closure set exceeded the {opts.budget}-element budget"
            )
        if on_new is not None:
            on_new(member)

    for g in cs.mcs:
        c = closure.close(g, cs.invariant_of(g.src_point), cs.invariant_of(g.dst_point))
        if c is not None:
            add(c, (g.name,))

    while queue:
        key = queue.popleft()
        member = members.get(key)
        if member is None:
            continue  # replaced by subsumption before being processed
        g = member.mc
        for other_key in list(members):
            other = members.get(other_key)
            if other is None:
                continue
            h = other.mc
            if g.dst_point == h.src_point:
                comp = closure.compose(g, h)
                if comp is not None:
                    add(comp, member.provenance + other.provenance)
            if other_key != key and h.dst_point == g.src_point:
                comp = closure.compose(h, g)
                if comp is not None:
                    add(comp, other.provenance + member.provenance)
            if members.get(key) is None:
                break  # this member was itself replaced; stop extending it
    return cset


def is_idempotent(g: MonotonicityConstraint) -> bool:
    if not g.cyclic:
        return False
    gg = closure.compose(g, g)
    return gg is not None and gg.arcs == g.arcs


# --- circular variant -------------------------------------------------------


@dataclass(frozen=True)
class CvEdge:
    """Edge of a circular variant. shift = +1 for a forward shortcut
    (x_i to x_i'), -1 for a backward shortcut, 0 for a base arc."""

    src: int
    dst: int
    strict: bool
    shift: int

    @property
    def weight(self) -> int:
        return self.shift

    @property
    def shortcut(self) -> bool:
        return self.shift != 0

    def text(self, n: int, names=None) -> str:
        def t(i: int) -> str:
            return VarTerm(i + 1, False).text(names) if i < n else VarTerm(i - n + 1, True).text(names)

        if self.shortcut:
            return f"{t(self.src)} ~> {t(self.dst)} (shortcut)"
        rel = ">" if self.strict else ">="
        return f"{t(self.src)} {rel} {t(self.dst)}"


@dataclass(frozen=True)
class CircularVariant:
    """A cyclic MC plus the no-change shortcut edge pair per variable."""

    base: MonotonicityConstraint
    n: int
    edges: tuple[CvEdge, ...]


def build_circular_variant(g: MonotonicityConstraint, n: int | None = None) -> CircularVariant:
    if not g.cyclic:
        raise ValueError("circular variant is only defined for a cyclic constraint")
    if n is None:
        n = max((max(a.src.index, a.dst.index) for a in g.arcs), default=1)

    def node(t: VarTerm) -> int:
        return t.index - 1 + (n if t.primed else 0)

    edges = [CvEdge(node(a.src), node(a.dst), a.strict, 0) for a in g.arcs]
    for i in range(n):
        edges.append(CvEdge(i, i + n, False, +1))
        edges.append(CvEdge(i + n, i, False, -1))
    edges.sort(key=lambda e: (e.src, e.dst, e.shift, not e.strict))
    return CircularVariant(g, n, tuple(edges))


@dataclass(frozen=True)
class LttResult:
    passed: bool
    cycle: tuple[CvEdge, ...] | None = None

    def __bool__(self) -> bool:
        return self.passed


def _successor_map(nodes: list[int], edges: list[CvEdge]) -> dict[int, list[int]]:
    succ: dict[int, list[int]] = {v: [] for v in nodes}
    for e in edges:
        succ[e.src].append(e.dst)
    for v in succ:
        succ[v] = sorted(set(succ[v]))
    return succ


def _negative_cycle(nodes: list[int], edges: list[CvEdge]) -> Optional[list[CvEdge]]:
    """Bellman-Ford negative-cycle extraction (virtual zero source)."""
    dist = {v: 0 for v in nodes}
    pred: dict[int, CvEdge] = {}
    marked = None
    for _ in range(len(nodes)):
        marked = None
        for e in edges:
            if dist[e.src] + e.weight < dist[e.dst]:
                dist[e.dst] = dist[e.src] + e.weight
                pred[e.dst] = e
                marked = e.dst
        if marked is None:
            return None
    v = marked
    for _ in range(len(nodes)):
        v = pred[v].src
    cycle: list[CvEdge] = []
    cur = v
    while True:
        e = pred[cur]
        cycle.append(e)
        cur = e.src
        if cur == v:
            break
    cycle.reverse()
    return cycle


def _bfs_edge_path(start: int, goal: int, edges: list[CvEdge]) -> list[CvEdge]:
    """Fewest-arc path start ~> goal; deterministic tie-breaking."""
    if start == goal:
        return []
    frontier = [start]
    back: dict[int, CvEdge] = {}
    seen = {start}
    while frontier:
        nxt: list[int] = []
        for v in frontier:
            for e in edges:
                if e.src == v and e.dst not in seen:
                    seen.add(e.dst)
                    back[e.dst] = e
                    if e.dst == goal:
                        path = []
                        cur = goal
                        while cur != start:
                            path.append(back[cur])
                            cur = back[cur].src
                        path.reverse()
                        return path
                    nxt.append(e.dst)
        frontier = nxt
    raise ValueError("no path inside a strongly connected component")


def local_termination_test(g: MonotonicityConstraint, n: int | None = None) -> LttResult:
    """Pass iff the circular variant has a descending forward or balanced
    cycle; the witness is the cycle's edge list."""
    if not g.closed:
        raise ValueError("local termination test requires a closed constraint")
    cv = build_circular_variant(g, n)
    nodes = list(range(2 * cv.n))
    succ = _successor_map(nodes, list(cv.edges))
    for comp in tarjan_sccs(nodes, succ):
        comp_set = set(comp)
        inner = [e for e in cv.edges if e.src in comp_set and e.dst in comp_set]
        strict_edges = [e for e in inner if e.strict]
        if not strict_edges:
            continue
        neg = _negative_cycle(sorted(comp_set), inner)
        if neg is not None:
            if any(e.strict for e in neg):
                return LttResult(True, tuple(neg))
            # Splice the least strict arc into the negative cycle, repeating
            # the cycle often enough to keep the total weight negative.
            s = strict_edges[0]
            entry = min(e.src for e in neg)
            p1 = _bfs_edge_path(s.dst, entry, inner)
            p2 = _bfs_edge_path(entry, s.src, inner)
            detour = sum(e.weight for e in p1) + sum(e.weight for e in p2)
            loops = detour + 1 if detour >= 0 else 1
            rotated = _rotate_cycle(neg, entry)
            walk = [s] + p1 + rotated * loops + p2
            return LttResult(True, tuple(walk))
        # No forward cycle here: look for a balanced descending one via the
        # zero-reduced-weight subgraph of shortest-path potentials.
        pot = _potentials(sorted(comp_set), inner)
        zero = [e for e in inner if pot[e.src] + e.weight - pot[e.dst] == 0]
        z_succ = _successor_map(sorted(comp_set), zero)
        z_comp = component_index(tarjan_sccs(sorted(comp_set), z_succ))
        for s in strict_edges:
            if s in zero and z_comp[s.src] == z_comp[s.dst]:
                path = _bfs_edge_path(s.dst, s.src, zero)
                return LttResult(True, tuple([s] + path))
    return LttResult(False)


def _rotate_cycle(cycle: list[CvEdge], start: int) -> list[CvEdge]:
    for i, e in enumerate(cycle):
        if e.src == start:
            return cycle[i:] + cycle[:i]
    raise ValueError("rotation point not on cycle")


def _potentials(nodes: list[int], edges: list[CvEdge]) -> dict[int, int]:
    source = nodes[0]
    dist = {v: _BIG for v in nodes}
    dist[source] = 0
    for _ in range(len(nodes) - 1):
        changed = False
        for e in edges:
            if dist[e.src] + e.weight < dist[e.dst]:
                dist[e.dst] = dist[e.src] + e.weight
                changed = True
        if not changed:
            break
    return dist


_BIG = 1 << 30


def sagiv_test(g: MonotonicityConstraint, n: int | None = None) -> bool:
    """Zig-zag test: a descending cycle alternating forward arcs of g with
    backward shortcut edges. Strictly weaker than the LTT (diagnostic only;
    complete for size-change graphs, incomplete for general constraints)."""
    if not g.closed:
        raise ValueError("Sagiv's test requires a closed constraint")
    if n is None:
        n = max((max(a.src.index, a.dst.index) for a in g.arcs), default=1)
    forward = [
        (a.src.index, a.dst.index, a.strict)
        for a in g.arcs
        if not a.src.primed and a.dst.primed
    ]
    nodes = list(range(1, n + 1))
    succ: dict[int, list[int]] = {i: [] for i in nodes}
    for i, j, _ in forward:
        succ[i].append(j)
    for v in succ:
        succ[v] = sorted(set(succ[v]))
    comp = component_index(tarjan_sccs(nodes, succ))
    return any(strict and comp[i] == comp[j] for i, j, strict in forward)


# --- the decision procedure --------------------------------------------------


def decide_from_closure_set(cset: ClosureSet, n: int, opts: ClosureOptions) -> Verdict:
    for member in cset.cyclic_members():
        if opts.idempotent_only and not is_idempotent(member.mc):
            continue
        if not local_termination_test(member.mc, n):
            return Verdict(
                terminating=False,
                witness=Witness(mc=member.mc, cycle=member.provenance),
            )
    return Verdict(terminating=True)


def find_ltt_failure(
    cs: ConstraintSystem, n: int | None = None, opts: ClosureOptions | None = None
) -> Optional[ClosureMember]:
    """First cyclic closure-set member failing the local termination test,
    tested as members appear so non-termination is certified without full
    saturation. Subsumption pruning is on by default: a pruned failing
    member implies its (weaker, kept) subsumer fails as well."""
    if n is None:
        n = cs.n
    opts = opts or ClosureOptions(subsumption=True)

    def on_new(member: ClosureMember) -> None:
        if member.mc.cyclic and not local_termination_test(member.mc, n):
            raise _SaturationStop(member)

    try:
        _run_saturation(cs, opts, on_new)
    except _SaturationStop as stop:
        return stop.member
    return None


def decide_closure(cs: ConstraintSystem, opts: ClosureOptions | None = None) -> Verdict:
    """Algorithm: build the closure set, then test every cyclic member.

    Testing only idempotent members is sound on the full closure set but
    interacts unsoundly with subsumption pruning (the idempotent
    counter-example may have been pruned), so that combination is rejected.
    """
    opts = opts or ClosureOptions()
    if opts.subsumption and opts.idempotent_only:
        raise ConfigurationError(
            "subsumption pruning may remove the idempotent counter-example; "
            "combining --subsumption with --idempotent-only is unsound"
        )
    cset = closure_set(cs, opts)
    return decide_from_closure_set(cset, cs.n, opts)
