"""Small deterministic graph helpers shared by the deciders."""

from __future__ import annotations

from typing import Hashable, Iterable, Mapping, Sequence, TypeVar

N = TypeVar("N", bound=Hashable)


def tarjan_sccs(nodes: Sequence[N], successors: Mapping[N, Sequence[N]]) -> list[list[N]]:
    """Strongly connected components in reverse-topological emission order
    (every component is emitted before the components that can reach it).

    Iterative so deep chains cannot hit the recursion limit; deterministic
    for a fixed node/successor ordering.
    """
    index: dict[N, int] = {}
    lowlink: dict[N, int] = {}
    on_stack: set[N] = set()
    stack: list[N] = []
    sccs: list[list[N]] = []
    counter = 0

    for root in nodes:
        if root in index:
            continue
        work: list[tuple[N, int]] = [(root, 0)]
        while work:
            v, i = work[-1]
            if i == 0:
                index[v] = lowlink[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            advanced = False
            succ = successors.get(v, ())
            while i < len(succ):
                u = succ[i]
                i += 1
                if u not in index:
                    work[-1] = (v, i)
                    work.append((u, 0))
                    advanced = True
                    break
                if u in on_stack:
                    lowlink[v] = min(lowlink[v], index[u])
            if advanced:
                continue
            work.pop()
            if lowlink[v] == index[v]:
                comp = []
                while True:
                    u = stack.pop()
                    on_stack.discard(u)
                    comp.append(u)
                    if u == v:
                        break
                sccs.append(sorted(comp, key=lambda x: index[x]))
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
    return sccs


def component_index(sccs: Iterable[Sequence[N]]) -> dict[N, int]:
    """1-based component index per node, in the given (reverse-topo) order."""
    out: dict[N, int] = {}
    for i, comp in enumerate(sccs, start=1):
        for v in comp:
            out[v] = i
    return out
