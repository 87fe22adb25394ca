"""The arrow relation ``a -> b iff a.b = b`` of a 2-semilattice, its strongly
connected components and the unique minimal component."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .algebra import (
    AlgebraError,
    FiniteAlgebra,
    Term,
    binary_table,
    is_two_semilattice,
    subuniverse_closure,
)

ABSORPTION_BOUND = 10


class NotTwoSemilatticeError(AlgebraError):
    code = "not_two_semilattice"


class ComponentOrderError(AlgebraError):
    """Raised when the minimal component is not unique."""

    code = "internal_inconsistency"


def tarjan(vertices: Sequence[Hashable], successors: Callable[[Hashable], Iterable[Hashable]]):
    """Strongly connected components, iteratively (no recursion limit)."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    components = []
    counter = 0
    for root in vertices:
        if root in index:
            continue
        work = [(root, iter(successors(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(successors(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                components.append(comp)
    return components


@dataclass(frozen=True)
class SemilatticeDigraph:
    alg: FiniteAlgebra
    dot: Term
    succ: tuple[frozenset[int], ...]

    @property
    def size(self) -> int:
        return len(self.succ)

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.succ[a]

    def edges(self):
        for a, out in enumerate(self.succ):
            for b in sorted(out):
                yield a, b


@dataclass(frozen=True)
class SccDecomposition:
    """Components indexed by their least vertex.

    ``order`` holds ``(i, j)`` with ``i != j`` whenever some vertex of
    component ``i`` has an arrow into component ``j`` (component ``i`` is
    above ``j``).
    """

    component_of: tuple[int, ...]
    components: tuple[tuple[int, ...], ...]
    order: frozenset[tuple[int, int]]

    def minimal(self) -> list[int]:
        return [i for i in range(len(self.components)) if not any(a == i for a, _ in self.order)]


def build_digraph(alg: FiniteAlgebra, dot: Term, check: bool = True) -> SemilatticeDigraph:
    if check and not is_two_semilattice(alg, dot):
        raise NotTwoSemilatticeError(f"{dot} is not a 2-semilattice operation")
    t = binary_table(alg, dot)
    idx = np.arange(alg.size)
    arrows = t == idx[None, :]
    succ = tuple(frozenset(np.nonzero(arrows[a])[0].tolist()) for a in range(alg.size))
    return SemilatticeDigraph(alg, dot, succ)


def _decompose(vertices: Sequence, succ: Callable) -> tuple[dict, list[tuple], set]:
    comps = [tuple(sorted(c)) for c in tarjan(vertices, succ)]
    comps.sort(key=lambda c: c[0])
    comp_of = {v: i for i, c in enumerate(comps) for v in c}
    order = {
        (comp_of[v], comp_of[w])
        for v in vertices for w in succ(v)
        if comp_of[v] != comp_of[w]
    }
    return comp_of, comps, order


def scc(dg: SemilatticeDigraph) -> SccDecomposition:
    comp_of, comps, order = _decompose(range(dg.size), lambda v: sorted(dg.succ[v]))
    return SccDecomposition(
        tuple(comp_of[v] for v in range(dg.size)), tuple(comps), frozenset(order)
    )


def is_strongly_connected(dg: SemilatticeDigraph) -> bool:
    return len(scc(dg).components) == 1


def _reachers(n: int, succ, target: int) -> set[int]:
    pred: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        for w in succ[v]:
            pred[w].append(v)
    seen = {target}
    todo = [target]
    while todo:
        v = todo.pop()
        for u in pred[v]:
            if u not in seen:
                seen.add(u)
                todo.append(u)
    return seen


def minimal_component(dg: SemilatticeDigraph) -> tuple[int, ...]:
    """The unique minimal strongly connected component.

    Also confirms that its members are exactly the vertices reachable from
    every vertex.
    """
    dec = scc(dg)
    mins = dec.minimal()
    if len(mins) != 1:
        raise ComponentOrderError(f"{len(mins)} minimal components; input is not a 2-semilattice")
    comp = dec.components[mins[0]]
    for a in range(dg.size):
        if (len(_reachers(dg.size, dg.succ, a)) == dg.size) != (a in comp):
            raise ComponentOrderError(f"reachability test disagrees on vertex {a}")
    return comp


def minimal_component_of(elements: Iterable[Hashable], mul: Callable[[Hashable, Hashable], Hashable]) -> frozenset:
    """Minimal component of the arrow digraph on a finite set closed under
    ``mul``; used for potatoes and for relations (pairs, coordinatewise)."""
    elems = sorted(elements)
    if not elems:
        return frozenset()
    succ = {a: [b for b in elems if mul(a, b) == b] for a in elems}
    comp_of, comps, order = _decompose(elems, succ.__getitem__)
    sources = {i for i, _ in order}
    mins = [i for i in range(len(comps)) if i not in sources]
    if len(mins) != 1:
        raise ComponentOrderError(f"{len(mins)} minimal components; not a 2-semilattice")
    return frozenset(comps[mins[0]])


def is_strongly_connected_set(elements: Iterable[Hashable], mul) -> bool:
    elems = sorted(elements)
    if not elems:
        return True
    succ = {a: [b for b in elems if mul(a, b) == b] for a in elems}
    return len(tarjan(elems, succ.__getitem__)) == 1


def check_binary_absorption_free(alg: FiniteAlgebra, dot: Term, bound: int = ABSORPTION_BOUND) -> bool:
    """True iff no proper nonempty subuniverse ``B`` has ``B.A`` and ``A.B``
    inside ``B``.  Subuniverses are found by closing every subset."""
    if alg.size > bound:
        raise AlgebraError(f"algebra of size {alg.size} exceeds the absorption bound {bound}")
    t = binary_table(alg, dot)
    n = alg.size
    seen = set()
    for mask in range(1, 2 ** n):
        seed = [a for a in range(n) if mask >> a & 1]
        sub = subuniverse_closure(alg, seed)
        if sub in seen or len(sub) == n:
            continue
        seen.add(sub)
        inside = np.zeros(n, dtype=bool)
        inside[list(sub)] = True
        rows = t[list(sub), :]
        cols = t[:, list(sub)]
        if inside[rows].all() and inside[cols].all():
            return False
    return True


def to_dot(dg: SemilatticeDigraph, labels: Sequence[str] | None = None, name: str = "arrows") -> str:
    """Plain-text DOT export: one node per element, one edge per arrow."""
    label = (lambda a: labels[a]) if labels else str
    lines = [f"digraph {name} {{"]
    for a in range(dg.size):
        lines.append(f'  n{a} [label="{label(a)}"];')
    for a, b in dg.edges():
        lines.append(f"  n{a} -> n{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"
