"""Core data model: variables, order constraints, constraint systems, verdicts.

All types are immutable values; no operation in this package mutates its
inputs, so everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence


class EndpointMismatchError(ValueError):
    """Two constraints were combined across mismatched flow points."""


class ResourceBudgetError(RuntimeError):
    """A saturation, enumeration or cap budget was exceeded."""


class ConfigurationError(ValueError):
    """An invalid combination of options was requested."""


@dataclass(frozen=True, order=True)
class VarTerm:
    """A variable occurrence: x_i when primed is False, x_i' when True.

    Unprimed terms refer to the source state of a transition, primed terms
    to the target state. Indices are 1-based.
    """

    index: int
    primed: bool = False

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError(f"variable index must be >= 1, got {self.index}")

    def text(self, names: Sequence[str] | None = None) -> str:
        if names is not None and 1 <= self.index <= len(names):
            base = names[self.index - 1]
        else:
            base = f"x{self.index}"
        return base + ("'" if self.primed else "")


# Sort terms unprimed-first, then by index; used for canonical output.
def term_key(t: VarTerm) -> tuple[bool, int]:
    return (t.primed, t.index)


@dataclass(frozen=True)
class Arc:
    """A single order constraint src > dst (strict) or src >= dst.

    A strict self-arc (x > x) is allowed as an explicit contradiction
    marker; satisfiability is the closure engine's job, not the parser's.
    Non-strict self-arcs are vacuous and may not be constructed.
    """

    src: VarTerm
    dst: VarTerm
    strict: bool

    def __post_init__(self) -> None:
        if self.src == self.dst and not self.strict:
            raise ValueError("vacuous non-strict self-arc; drop it instead")

    def text(self, names: Sequence[str] | None = None) -> str:
        rel = ">" if self.strict else ">="
        return f"{self.src.text(names)} {rel} {self.dst.text(names)}"


def arc_key(a: Arc) -> tuple:
    return (term_key(a.src), term_key(a.dst), not a.strict)


def canonicalize_arcs(arcs: Iterable[Arc]) -> frozenset[Arc]:
    """Collapse parallel arcs between the same endpoints, preferring strict."""
    best: dict[tuple[VarTerm, VarTerm], bool] = {}
    for a in arcs:
        pair = (a.src, a.dst)
        best[pair] = best.get(pair, False) or a.strict
    return frozenset(Arc(s, d, strict) for (s, d), strict in best.items())


def is_equality(arcs: frozenset[Arc], a: VarTerm, b: VarTerm) -> bool:
    """True when the arc set records a = b (both non-strict directions)."""
    if a == b:
        return True
    return Arc(a, b, False) in arcs and Arc(b, a, False) in arcs


def constraint_strings(arcs: frozenset[Arc], names: Sequence[str] | None = None) -> list[str]:
    """Canonical text rendering of an arc set.

    Equalities (both non-strict directions present) print once as `a = b`;
    every other arc prints individually. Output order is deterministic.
    """
    out: list[tuple[tuple, str]] = []
    done: set[tuple[VarTerm, VarTerm]] = set()
    for a in sorted(arcs, key=arc_key):
        pair = (a.src, a.dst)
        if pair in done:
            continue
        back = Arc(a.dst, a.src, False) if a.src != a.dst else None
        if not a.strict and back is not None and back in arcs:
            lo, hi = sorted((a.src, a.dst), key=term_key)
            out.append(((term_key(lo), term_key(hi), 2), f"{lo.text(names)} = {hi.text(names)}"))
            done.add(pair)
            done.add((a.dst, a.src))
        else:
            out.append(((term_key(a.src), term_key(a.dst), 0 if a.strict else 1), a.text(names)))
            done.add(pair)
    out.sort(key=lambda item: item[0])
    return [text for _, text in out]


def arcs_text(arcs: frozenset[Arc], names: Sequence[str] | None = None) -> str:
    return "{" + ", ".join(constraint_strings(arcs, names)) + "}"


@dataclass(frozen=True)
class MonotonicityConstraint:
    """A conjunction of order constraints over x_1..x_n, x_1'..x_n'.

    Viewed as a labeled digraph: one arc per constraint. `closed` marks that
    the arc set equals its consequence closure with respect to the endpoint
    invariants (set by the closure engine, never by the parser).
    """

    name: str
    src_point: str
    dst_point: str
    arcs: frozenset[Arc]
    closed: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "arcs", canonicalize_arcs(self.arcs))

    @property
    def cyclic(self) -> bool:
        return self.src_point == self.dst_point

    def text(self, names: Sequence[str] | None = None) -> str:
        return arcs_text(self.arcs, names)


@dataclass(frozen=True)
class Invariant:
    """Order constraints among the unprimed variables of one flow point."""

    arcs: frozenset[Arc] = frozenset()

    def __post_init__(self) -> None:
        for a in self.arcs:
            if a.src.primed or a.dst.primed:
                raise ValueError(f"primed term in invariant: {a.text()}")
        object.__setattr__(self, "arcs", canonicalize_arcs(self.arcs))

    @property
    def trivial(self) -> bool:
        return not self.arcs

    def text(self, names: Sequence[str] | None = None) -> str:
        return arcs_text(self.arcs, names)


TRIVIAL_INVARIANT = Invariant(frozenset())


@dataclass(frozen=True)
class ConstraintSystem:
    """An abstract program: flow points with invariants plus transition MCs.

    Variables are indices 1..n internally; `var_names` fixes the external
    names in declaration order.
    """

    n: int
    var_names: tuple[str, ...]
    points: Mapping[str, Invariant]
    mcs: tuple[MonotonicityConstraint, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "var_names", tuple(self.var_names))
        object.__setattr__(self, "points", dict(self.points))
        object.__setattr__(self, "mcs", tuple(self.mcs))

    def invariant_of(self, point: str) -> Invariant:
        return self.points.get(point, TRIVIAL_INVARIANT)

    def restricted(self, keep: Iterable[str]) -> "ConstraintSystem":
        """Sub-system induced by a set of flow points."""
        kept = set(keep)
        return ConstraintSystem(
            self.n,
            self.var_names,
            {p: inv for p, inv in self.points.items() if p in kept},
            tuple(g for g in self.mcs if g.src_point in kept and g.dst_point in kept),
        )


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    subject: str | None = None

    def __str__(self) -> str:
        where = f" [{self.subject}]" if self.subject else ""
        return f"{self.severity}:{where} {self.message}"


def validate_system(cs: ConstraintSystem) -> list[Diagnostic]:
    """Structural diagnostics: errors for malformed references, warnings for
    unsatisfiable invariants or MCs (delegated to the closure engine, the
    single satisfiability authority)."""
    from . import closure  # local import: closure depends on this module

    diags: list[Diagnostic] = []
    if cs.n < 1:
        diags.append(Diagnostic("error", f"variable count must be >= 1, got {cs.n}"))
    if len(cs.var_names) != cs.n:
        diags.append(
            Diagnostic("error", f"{len(cs.var_names)} variable names declared for n={cs.n}")
        )

    def check_index(t: VarTerm, subject: str) -> None:
        if not 1 <= t.index <= cs.n:
            diags.append(
                Diagnostic("error", f"variable index {t.index} out of range 1..{cs.n}", subject)
            )

    for pid, inv in cs.points.items():
        for a in inv.arcs:
            check_index(a.src, pid)
            check_index(a.dst, pid)
    for g in cs.mcs:
        for end in (g.src_point, g.dst_point):
            if end not in cs.points:
                diags.append(Diagnostic("error", f"undeclared flow point '{end}'", g.name))
        for a in g.arcs:
            check_index(a.src, g.name)
            check_index(a.dst, g.name)

    if any(d.severity == "error" for d in diags):
        return diags

    for pid, inv in cs.points.items():
        if closure.close_invariant(inv) is None:
            diags.append(Diagnostic("warning", "unsatisfiable invariant", pid))
    for g in cs.mcs:
        if closure.close(g, cs.invariant_of(g.src_point), cs.invariant_of(g.dst_point)) is None:
            diags.append(Diagnostic("warning", "unsatisfiable monotonicity constraint", g.name))
    return diags


@dataclass(frozen=True)
class Witness:
    """Non-termination evidence: a cyclic closed MC that fails the local
    termination test, plus the CFG cycle (MC names) it collapses."""

    mc: MonotonicityConstraint
    cycle: tuple[str, ...]


@dataclass(frozen=True)
class Verdict:
    terminating: bool
    ranking: object | None = None  # RankingFunction, kept loose to avoid a cycle
    witness: Witness | None = None

    def __post_init__(self) -> None:
        if self.terminating and self.witness is not None:
            raise ValueError("terminating verdict cannot carry a witness")
        if not self.terminating and self.ranking is not None:
            raise ValueError("non-terminating verdict cannot carry a ranking")

    @property
    def result(self) -> str:
        return "terminating" if self.terminating else "non-terminating"
