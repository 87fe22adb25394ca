"""Independent reference implementations used only by the tests."""
from __future__ import annotations

import itertools

import numpy as np

from maltsevcsp.instance import Instance, RawInstance


def literal_consistency(raw: RawInstance):
    """Triangle-support deletion exactly as a sweep over all triples, repeated
    until a sweep deletes nothing.  Returns (instance, deletions, snapshots)
    where snapshots[i] is the total relation size after sweep i."""
    n = raw.algebra.size
    V = list(raw.variables)
    D = range(n)
    R = {}
    for x in V:
        for y in V:
            R[x, y] = {(a, a) for a in D} if x == y else {(a, b) for a in D for b in D}
    for (x, y), rel in raw.binary:
        R[x, y] &= set(rel)
        R[y, x] &= {(b, a) for a, b in rel}
    for x, pot in raw.unary:
        R[x, x] &= {(a, a) for a in pot}
    deletions = 0
    snapshots = [sum(len(r) for r in R.values())]
    changed = True
    while changed:
        changed = False
        for x in V:
            for y in V:
                for z in V:
                    for a, b in sorted(R[x, y]):
                        if not any((a, c) in R[x, z] and (b, c) in R[y, z] for c in D):
                            R[x, y].discard((a, b))
                            R[y, x].discard((b, a))
                            deletions += 1
                            changed = True
        snapshots.append(sum(len(r) for r in R.values()))
    pots = {x: {a for a, _ in R[x, x]} for x in V}
    inst = Instance.build(raw.algebra, V, pots, {k: v for k, v in R.items()})
    return inst, deletions, snapshots


def all_assignments(inst: Instance):
    """Every solution by plain enumeration of the product of potatoes."""
    names = inst.variables
    pools = [sorted(p) for p in inst.potatoes]
    out = []
    for values in itertools.product(*pools):
        if all((values[x], values[y]) in rel for (x, y), rel in inst.relations.items()):
            out.append(dict(zip(names, values)))
    return out


def reachable_from_all(table: np.ndarray, elements) -> set:
    """Elements reachable from every element along ``a -> a.b`` arrows that
    stay inside ``elements``."""
    elements = sorted(elements)
    succ = {a: {b for b in elements if table[a, b] == b} for a in elements}

    def reach(a):
        seen, todo = {a}, [a]
        while todo:
            v = todo.pop()
            for w in succ[v]:
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        return seen

    common = set(elements)
    for a in elements:
        common &= reach(a)
    return common


# ------------------------------------------------------------- GF(2) oracle


def gf2_solvable(rows: list[tuple[int, int]], n_unknowns: int) -> bool:
    """Rows are (bitmask of unknowns, right-hand side)."""
    pivots: dict[int, tuple[int, int]] = {}
    for mask, rhs in rows:
        while mask:
            top = mask.bit_length() - 1
            if top not in pivots:
                pivots[top] = (mask, rhs)
                break
            pm, pr = pivots[top]
            mask ^= pm
            rhs ^= pr
        else:
            if rhs:
                return False
    return True


def _bits(u: int, width: int) -> list[int]:
    return [(u >> i) & 1 for i in range(width)]


def affine_equations(points: set[tuple[int, ...]], width: int):
    """All (coefficients, constant) with ``c . p`` constant on ``points``,
    each point a tuple of ``width``-bit blocks flattened to bits."""
    vecs = [sum((_bits(c, width) for c in p), []) for p in points]
    dim = len(vecs[0])
    eqs = []
    for coeffs in range(1, 2 ** dim):
        cbits = _bits(coeffs, dim)
        values = {sum(c * v for c, v in zip(cbits, vec)) % 2 for vec in vecs}
        if len(values) == 1:
            eqs.append((cbits, values.pop()))
    return eqs


def affine_instance_solvable(inst: Instance, decode, width: int = 2) -> bool:
    """Solvability of an instance whose potatoes and relations are cosets of
    ``(Z2^width)`` and ``(Z2^width)^2``, by Gaussian elimination.  ``decode``
    maps an element to its ``width``-bit integer."""
    names = inst.variables
    m = len(names)
    rows = []
    for x, pot in enumerate(inst.potatoes):
        if not pot:
            return False
        for cbits, rhs in affine_equations({(decode(a),) for a in pot}, width):
            rows.append((sum(c << (x * width + i) for i, c in enumerate(cbits)), rhs))
    for (x, y), rel in inst.relations.items():
        if x >= y:
            continue
        if not rel:
            return False
        for cbits, rhs in affine_equations({(decode(a), decode(b)) for a, b in rel}, width):
            mask = 0
            for i, c in enumerate(cbits[:width]):
                mask ^= c << (x * width + i)
            for i, c in enumerate(cbits[width:]):
                mask ^= c << (y * width + i)
            rows.append((mask, rhs))
    return gf2_solvable(rows, m * width)


# --------------------------------------------------------- congruence oracle


def respects_partition(alg, labels) -> bool:
    """Every operation maps blockwise-equal argument tuples to one block.

    Checked on whole tuples at once: the block of the output must be a
    function of the tuple of argument blocks."""
    labels = np.asarray(labels)
    n = alg.size
    k_blocks = int(labels.max()) + 1
    for _, arity, table in alg.ops():
        grids = np.indices((n,) * arity).reshape(arity, -1)
        key = np.zeros(grids.shape[1], dtype=np.int64)
        for row in grids:
            key = key * k_blocks + labels[row]
        out = labels[table.reshape(-1)]
        pairs = np.unique(np.stack([key, out]), axis=1)
        if len(np.unique(pairs[0])) != pairs.shape[1]:
            return False
    return True


def set_partitions(n: int):
    """Restricted growth strings of length n."""
    def grow(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for v in range(top + 2):
            yield from grow(prefix + [v], max(top, v))
    if n == 0:
        yield ()
        return
    yield from grow([0], 0)


def congruence_labels(alg) -> set[tuple[int, ...]]:
    return {p for p in set_partitions(alg.size) if respects_partition(alg, p)}


# ------------------------------------------------------ digraph property suite


def digraph_property_violations(alg, dot) -> list[str]:
    """Check the six structural facts about the arrow digraph a -> a.b = b of
    a 2-semilattice, by direct enumeration.  Returns the names that fail."""
    from maltsevcsp.algebra import binary_table, quotient_algebra
    from maltsevcsp.congruence import all_congruences
    from maltsevcsp.digraph import build_digraph, minimal_component, scc

    t = binary_table(alg, dot)
    n = alg.size
    A = range(n)
    arrow = lambda a, b: t[a, b] == b  # noqa: E731
    bad = []
    # 1. loops, a -> a.b, b -> a.b
    if not all(arrow(a, a) and arrow(a, t[a, b]) and arrow(b, t[a, b]) for a in A for b in A):
        bad.append("arrows_to_products")
    dg = build_digraph(alg, dot)
    dec = scc(dg)
    # 2. unique minimal component below every vertex
    mins = [i for i, comp in enumerate(dec.components)
            if not any(dec.component_of[w] != i for v in comp for w in dg.succ[v])]
    if len(mins) != 1:
        bad.append("unique_minimal_component")
        return bad
    low = set(dec.components[mins[0]])
    if not all(any(arrow(b, a) for a in low) for b in A):
        bad.append("arrow_into_minimal")
    # 3. membership iff reachable from everywhere
    if low != reachable_from_all(t, A) or set(minimal_component(dg)) != low:
        bad.append("reachable_from_all")
    # 4. absorbing under dot
    if not all(t[a, b] in low and t[b, a] in low for a in low for b in A):
        bad.append("minimal_absorbs")
    # 5. an arrow spans a two-element semilattice with absorbing head
    for a in A:
        for b in A:
            if arrow(a, b) and not (t[b, a] == b and t[a, a] == a and t[b, b] == b):
                bad.append("arrow_is_semilattice")
                break
        else:
            continue
        break
    # 6. quotients of strongly connected algebras stay strongly connected
    if len(dec.components) == 1:
        for theta in all_congruences(alg):
            quo, _ = quotient_algebra(alg, theta)
            qt = binary_table(quo, dot)
            if reachable_from_all(qt, range(quo.size)) != set(range(quo.size)):
                bad.append("quotient_strongly_connected")
                break
    return bad
