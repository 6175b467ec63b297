"""Thread preservers, ranking construction and certificate types.

On a fully elaborated system the construction is polynomial: per strongly
connected component, the maximal thread preserver yields one variable that
never increases across internal transitions; constraints that strictly
decrease it are deleted, elsewhere it is hidden (its non-strict arcs act as
a freezer), and the residual system is processed recursively. Component
indices in reverse-topological order handle inter-component transitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

from .decider import find_ltt_failure
from .elaborate import ElaboratedSystem, Ordering, fully_elaborate, has_downward_closure
from .graphs import component_index, tarjan_sccs
from .model import (
    Arc,
    ConstraintSystem,
    MonotonicityConstraint,
    VarTerm,
    Verdict,
    Witness,
)

NEG_INF = float("-inf")


@dataclass(frozen=True)
class ThreadPreserver:
    assignment: Mapping[str, frozenset[int]]

    def __getitem__(self, point: str) -> frozenset[int]:
        return self.assignment[point]


def compute_mtp(
    cs: ConstraintSystem, hidden: Mapping[str, set[int]] | None = None
) -> ThreadPreserver:
    """Greatest fixed point: start from all non-hidden variables and delete
    i from P(f) while some constraint out of f has no forward arc from x_i
    into P(g). The result is the unique maximal thread preserver."""
    hidden = hidden or {}
    p: dict[str, set[int]] = {
        f: set(range(1, cs.n + 1)) - set(hidden.get(f, ())) for f in cs.points
    }
    outgoing: dict[str, list[MonotonicityConstraint]] = {f: [] for f in cs.points}
    for g in cs.mcs:
        if g.src_point in outgoing and g.dst_point in p:
            outgoing[g.src_point].append(g)
    changed = True
    while changed:
        changed = False
        for f in p:
            for g in outgoing[f]:
                targets = p[g.dst_point]
                for i in sorted(p[f]):
                    supported = any(
                        not a.src.primed
                        and a.dst.primed
                        and a.src.index == i
                        and a.dst.index in targets
                        for a in g.arcs
                    )
                    if not supported:
                        p[f].discard(i)
                        changed = True
    return ThreadPreserver({f: frozenset(v) for f, v in p.items()})


def reverse_topological_kappa(cs: ConstraintSystem) -> dict[str, int]:
    """1-based component index per flow point; components that can be
    reached get smaller indices, so kappa strictly drops along every
    inter-component constraint."""
    succ: dict[str, list[str]] = {f: [] for f in cs.points}
    for g in cs.mcs:
        succ[g.src_point].append(g.dst_point)
    for f in succ:
        succ[f] = sorted(set(succ[f]))
    return component_index(tarjan_sccs(sorted(cs.points), succ))


# --- certificate types ----------------------------------------------------------


@dataclass(frozen=True)
class RankVector:
    """Alternating (integer, variable) tuple compared lexicographically.

    Even positions (0-based) hold integers, odd positions hold a 1-based
    variable index or None; the None sentinel compares equal to itself and
    below every variable value. Each variable appears at most once.
    """

    entries: tuple

    def __post_init__(self) -> None:
        if len(self.entries) % 2 != 0:
            raise ValueError("rank vector must have even length")
        seen: set[int] = set()
        for pos, e in enumerate(self.entries):
            if pos % 2 == 0:
                if not isinstance(e, int):
                    raise ValueError(f"position {pos} must be an integer")
            else:
                if e is None:
                    continue
                if not isinstance(e, int) or e < 1:
                    raise ValueError(f"position {pos} must be a variable index or None")
                if e in seen:
                    raise ValueError(f"variable x{e} appears twice in one vector")
                seen.add(e)

    def variables(self) -> set[int]:
        return {e for pos, e in enumerate(self.entries) if pos % 2 == 1 and e is not None}

    def value(self, values: Sequence) -> tuple:
        out = []
        for pos, e in enumerate(self.entries):
            if pos % 2 == 0:
                out.append(e)
            else:
                out.append(NEG_INF if e is None else values[e - 1])
        return tuple(out)

    def text(self, names: Sequence[str] | None = None) -> str:
        parts = []
        for pos, e in enumerate(self.entries):
            if pos % 2 == 0:
                parts.append(str(e))
            else:
                parts.append("_" if e is None else VarTerm(e).text(names))
        return "<" + ", ".join(parts) + ">"


@dataclass(frozen=True)
class Guard:
    """A conjunction of order constraints over unprimed variables."""

    arcs: tuple[Arc, ...]
    label: str | None = None

    def holds(self, values: Sequence) -> bool:
        for a in self.arcs:
            lhs, rhs = values[a.src.index - 1], values[a.dst.index - 1]
            if a.strict:
                if not lhs > rhs:
                    return False
            elif not lhs >= rhs:
                return False
        return True

    def text(self, names: Sequence[str] | None = None) -> str:
        if self.label:
            return self.label
        if not self.arcs:
            return "true"
        from .model import constraint_strings

        return ", ".join(constraint_strings(frozenset(self.arcs), names))

    @classmethod
    def from_ordering(cls, ordering: Ordering, names: Sequence[str] | None = None) -> "Guard":
        return cls(ordering.guard_arcs(), ordering.label(names))

    @classmethod
    def true(cls) -> "Guard":
        return cls((), "true")


@dataclass(frozen=True)
class RankRow:
    """One region of a guarded ranking: any of `guards` selects `vector`."""

    guards: tuple[Guard, ...]
    vector: RankVector

    def matches(self, values: Sequence) -> bool:
        return any(g.holds(values) for g in self.guards)


@dataclass(frozen=True)
class RankingFunction:
    """Per flow point, mutually exclusive guarded regions with one rank
    vector each; vectors across one function share a common length."""

    rows: Mapping[str, tuple[RankRow, ...]]
    bound: int

    def value_at(self, point: str, values: Sequence) -> Optional[tuple]:
        for row in self.rows.get(point, ()):
            if row.matches(values):
                return row.vector.value(values)
        return None

    def vector_at(self, point: str, values: Sequence) -> Optional[RankVector]:
        for row in self.rows.get(point, ()):
            if row.matches(values):
                return row.vector
        return None


@dataclass(frozen=True)
class RankingFailure:
    """A strongly connected region with an empty maximal thread preserver;
    carries the sub-system for witness extraction."""

    scc_points: tuple[str, ...]
    subsystem: ConstraintSystem


BuildOutcome = Union[RankingFunction, RankingFailure]


def build_ranking(elab: ElaboratedSystem) -> BuildOutcome:
    """Ranking construction over the elaborated points.

    Each pass appends (kappa, variable) per point: kappa is the reverse
    topological component index, the variable is the least element of the
    component's maximal thread preserver over non-hidden variables. Trivial
    components contribute (kappa, None). Recursion depth is at most n, so
    vectors never exceed 2(n + 1) entries.
    """
    cs = elab.system
    for g in cs.mcs:
        if not has_downward_closure(g):
            raise ValueError(f"constraint {g.name} lacks downward closure")

    hidden: dict[str, set[int]] = {f: set() for f in cs.points}
    vectors: dict[str, list] = {f: [] for f in cs.points}
    mcs = list(cs.mcs)
    bound = 1

    while True:
        live = ConstraintSystem(cs.n, cs.var_names, cs.points, tuple(mcs))
        kappa = reverse_topological_kappa(live)
        bound = max(bound, max(kappa.values(), default=1))
        intra = [g for g in mcs if kappa[g.src_point] == kappa[g.dst_point]]
        if not intra:
            for f in vectors:
                vectors[f].extend([kappa[f], None])
            break

        comps: dict[int, list[str]] = {}
        for f in cs.points:
            comps.setdefault(kappa[f], []).append(f)
        chosen: dict[str, int] = {}
        for ci, comp_points in sorted(comps.items()):
            comp_mcs = [g for g in intra if kappa[g.src_point] == ci]
            if not comp_mcs:
                continue
            sub = ConstraintSystem(
                cs.n,
                cs.var_names,
                {f: cs.points[f] for f in comp_points},
                tuple(comp_mcs),
            )
            mtp = compute_mtp(sub, hidden)
            for f in comp_points:
                if not mtp[f]:
                    return RankingFailure(tuple(sorted(comp_points)), sub)
                chosen[f] = min(mtp[f])

        for f in vectors:
            vectors[f].extend([kappa[f], chosen.get(f)])

        kept: list[MonotonicityConstraint] = []
        for g in intra:
            i_f, i_g = chosen[g.src_point], chosen[g.dst_point]
            arc = Arc(VarTerm(i_f), VarTerm(i_g, True), True)
            if arc in g.arcs:
                continue  # strictly decreasing: covered by this pass
            if Arc(VarTerm(i_f), VarTerm(i_g, True), False) not in g.arcs:
                raise AssertionError(
                    f"thread preserver arc x{i_f} -> x{i_g}' missing in {g.name}"
                )
            kept.append(g)
        for f in chosen:
            hidden[f].add(chosen[f])
        mcs = kept
        if not mcs:
            break

    rows = {
        f: (
            RankRow(
                guards=(Guard.from_ordering(elab.orderings[f], cs.var_names),),
                vector=RankVector(tuple(vec)),
            ),
        )
        for f, vec in vectors.items()
    }
    bound = max(
        [bound]
        + [e for vec in vectors.values() for pos, e in enumerate(vec) if pos % 2 == 0]
    )
    return RankingFunction(rows, bound)


def translate_ranking(
    rank_a: RankingFunction, elab: ElaboratedSystem, original: ConstraintSystem
) -> RankingFunction:
    """Pull a ranking on the elaborated points back to the original system:
    one row per elaborated copy, guarded by its ordering over the original
    variables, with vector variables mapped through the copy's renaming.
    Rows with identical vectors are merged."""
    names = original.var_names
    rows: dict[str, tuple[RankRow, ...]] = {}
    for f, copies in elab.phi.items():
        translated: list[tuple[Ordering, RankVector]] = []
        for pid in copies:
            point_rows = rank_a.rows.get(pid)
            if not point_rows:
                raise ValueError(f"ranking is missing elaborated point {pid}")
            vector = point_rows[0].vector
            psi = elab.psi[pid]
            entries = tuple(
                e if pos % 2 == 0 or e is None else psi[e - 1]
                for pos, e in enumerate(vector.entries)
            )
            translated.append((elab.orderings[pid], RankVector(entries)))

        merged: dict[RankVector, list[Ordering]] = {}
        for ordering, vec in translated:
            merged.setdefault(vec, []).append(ordering)
        keyed_rows = []
        for vec, orderings in merged.items():
            orderings.sort(key=lambda o: o.blocks)
            row = RankRow(tuple(Guard.from_ordering(o, names) for o in orderings), vec)
            keyed_rows.append((orderings[0].blocks, row))
        keyed_rows.sort(key=lambda item: item[0])
        rows[f] = tuple(row for _, row in keyed_rows)
    return RankingFunction(rows, rank_a.bound)


def decide_from_elaborated(
    elab: ElaboratedSystem, original: ConstraintSystem
) -> Verdict:
    outcome = build_ranking(elab)
    if isinstance(outcome, RankingFailure):
        failing = find_ltt_failure(outcome.subsystem, elab.system.n)
        if failing is None:
            raise AssertionError(
                "internal error: empty thread preserver but every cyclic "
                "member of the component's closure set passes the local "
                "termination test"
            )
        return Verdict(
            terminating=False, witness=Witness(failing.mc, failing.provenance)
        )
    return Verdict(terminating=True, ranking=translate_ranking(outcome, elab, original))


def decide_elaborate(cs: ConstraintSystem, ordering_cap: int = 6) -> Verdict:
    """Stabilize by full elaboration, then decide by ranking construction;
    failures are certified through the closure decider on the failing
    component."""
    elab = fully_elaborate(cs, ordering_cap)
    return decide_from_elaborated(elab, cs)


# --- serialization ----------------------------------------------------------------


def format_ranking(rf: RankingFunction, system: ConstraintSystem) -> str:
    """Round-trippable text form: per point, `if <guards> -> <vector>` rows."""
    names = system.var_names
    lines = [f"bound {rf.bound}"]
    for point in rf.rows:
        lines.append(f"point {point}")
        for row in rf.rows[point]:
            guards = " | ".join(g.text(names) for g in row.guards)
            lines.append(f"  if {guards} -> {row.vector.text(names)}")
    return "\n".join(lines) + "\n"


class RankingParseError(ValueError):
    pass


def _parse_guard(text: str, system: ConstraintSystem) -> Guard:
    text = text.strip()
    if text == "true":
        return Guard.true()
    arcs: list[Arc] = []
    for part in text.split(","):
        arcs.extend(_parse_chain(part.strip(), system))
    return Guard(tuple(arcs), text)


def _parse_chain(text: str, system: ConstraintSystem) -> list[Arc]:
    """`a < b = c >= d` style chains over declared variable names."""
    import re

    tokens = re.split(r"(<=|>=|=|<|>)", text.replace(" ", ""))
    if len(tokens) < 3 or len(tokens) % 2 == 0:
        raise RankingParseError(f"cannot parse guard constraint {text!r}")
    name_to_index = {nm: i + 1 for i, nm in enumerate(system.var_names)}
    arcs: list[Arc] = []
    for k in range(0, len(tokens) - 2, 2):
        lhs, rel, rhs = tokens[k], tokens[k + 1], tokens[k + 2]
        for nm in (lhs, rhs):
            if nm not in name_to_index:
                raise RankingParseError(f"unknown variable {nm!r} in guard")
        a, b = VarTerm(name_to_index[lhs]), VarTerm(name_to_index[rhs])
        if rel == "<":
            arcs.append(Arc(b, a, True))
        elif rel == "<=":
            arcs.append(Arc(b, a, False))
        elif rel == ">":
            arcs.append(Arc(a, b, True))
        elif rel == ">=":
            arcs.append(Arc(a, b, False))
        else:
            arcs.append(Arc(a, b, False))
            arcs.append(Arc(b, a, False))
    return arcs


def parse_ranking(text: str, system: ConstraintSystem) -> RankingFunction:
    name_to_index = {nm: i + 1 for i, nm in enumerate(system.var_names)}
    rows: dict[str, list[RankRow]] = {}
    bound = 0
    point: str | None = None
    raw_rows: list[tuple[str, list[Guard], list]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("bound "):
            bound = int(line.split()[1])
            continue
        if line.startswith("point "):
            point = line.split(None, 1)[1].strip()
            rows.setdefault(point, [])
            continue
        if line.startswith("if "):
            if point is None:
                raise RankingParseError(f"line {lineno}: row before any point")
            body = line[3:]
            if "->" not in body:
                raise RankingParseError(f"line {lineno}: missing '->'")
            guard_text, vector_text = body.rsplit("->", 1)
            guards = [_parse_guard(g, system) for g in guard_text.split("|")]
            vector_text = vector_text.strip()
            if not (vector_text.startswith("<") and vector_text.endswith(">")):
                raise RankingParseError(f"line {lineno}: vector must be <...>")
            entries: list = []
            items = [p.strip() for p in vector_text[1:-1].split(",")] if vector_text[1:-1].strip() else []
            for pos, item in enumerate(items):
                if pos % 2 == 0:
                    try:
                        entries.append(int(item))
                    except ValueError:
                        raise RankingParseError(
                            f"line {lineno}: expected integer at position {pos}, got {item!r}"
                        ) from None
                elif item == "_":
                    entries.append(None)
                elif item in name_to_index:
                    entries.append(name_to_index[item])
                else:
                    raise RankingParseError(f"line {lineno}: unknown variable {item!r}")
            raw_rows.append((point, guards, entries))
            continue
        raise RankingParseError(f"line {lineno}: cannot parse {line!r}")

    if not raw_rows:
        raise RankingParseError("ranking file declares no rows")
    # Vectors of differing lengths are padded with (0, sentinel) pairs to a
    # common length so that lexicographic comparison stays positional.
    width = max(len(entries) for _, _, entries in raw_rows)
    if width % 2 == 1:
        width += 1
    for point_name, guards, entries in raw_rows:
        padded = list(entries)
        if len(padded) % 2 == 1:
            padded.append(None)  # a bare trailing integer gets the sentinel slot
        while len(padded) < width:
            padded.extend([0, None])
        rows.setdefault(point_name, []).append(
            RankRow(tuple(guards), RankVector(tuple(padded[:width])))
        )
    ints = [e for _, _, entries in raw_rows for pos, e in enumerate(entries) if pos % 2 == 0]
    bound = max([bound] + ints) if ints else bound
    return RankingFunction({p: tuple(r) for p, r in rows.items()}, bound)
