"""Equivalence relations on ``0..n-1``."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence


class UnionFind:
    """Union-find over ``0..n-1`` whose roots are always the least element."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True

    def labels(self) -> tuple[int, ...]:
        return tuple(self.find(a) for a in range(len(self.parent)))


@dataclass(frozen=True)
class Partition:
    """A partition of ``0..n-1`` stored as a representative map.

    ``rep[a]`` is the least element of the block containing ``a``; this
    makes equal partitions compare and hash equal.
    """

    rep: tuple[int, ...]

    def __post_init__(self):
        for a, r in enumerate(self.rep):
            if not 0 <= r <= a or self.rep[r] != r:
                raise ValueError(f"not a canonical representative map: {self.rep}")

    @classmethod
    def from_labels(cls, labels: Sequence) -> "Partition":
        first: dict = {}
        rep = []
        for a, lab in enumerate(labels):
            rep.append(first.setdefault(lab, a))
        return cls(tuple(rep))

    @classmethod
    def from_blocks(cls, n: int, blocks: Iterable[Iterable[int]]) -> "Partition":
        labels: list = [None] * n
        for i, block in enumerate(blocks):
            for a in block:
                if not 0 <= a < n:
                    raise ValueError(f"element {a} outside 0..{n - 1}")
                if labels[a] is not None:
                    raise ValueError(f"element {a} occurs in two blocks")
                labels[a] = i
        if any(lab is None for lab in labels):
            raise ValueError("blocks do not cover the universe")
        return cls.from_labels(labels)

    @classmethod
    def discrete(cls, n: int) -> "Partition":
        return cls(tuple(range(n)))

    @classmethod
    def indiscrete(cls, n: int) -> "Partition":
        return cls((0,) * n)

    @property
    def size(self) -> int:
        return len(self.rep)

    @cached_property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        """Blocks sorted by least element, each block sorted."""
        grouped: dict[int, list[int]] = {}
        for a, r in enumerate(self.rep):
            grouped.setdefault(r, []).append(a)
        return tuple(tuple(grouped[r]) for r in sorted(grouped))

    @cached_property
    def _block_index(self) -> tuple[int, ...]:
        index = [0] * self.size
        for i, block in enumerate(self.blocks):
            for a in block:
                index[a] = i
        return tuple(index)

    def block_index(self, a: int) -> int:
        return self._block_index[a]

    def block_of(self, a: int) -> tuple[int, ...]:
        return self.blocks[self._block_index[a]]

    def same(self, a: int, b: int) -> bool:
        return self.rep[a] == self.rep[b]

    def is_discrete(self) -> bool:
        return len(self.blocks) == self.size

    def is_indiscrete(self) -> bool:
        return len(self.blocks) <= 1

    def refines(self, other: "Partition") -> bool:
        """True iff every block of ``self`` lies inside a block of ``other``."""
        return all(other.rep[a] == other.rep[r] for a, r in enumerate(self.rep))

    def join(self, other: "Partition") -> "Partition":
        if self.size != other.size:
            raise ValueError("partitions of different universes")
        uf = UnionFind(self.size)
        for a in range(self.size):
            uf.union(a, self.rep[a])
            uf.union(a, other.rep[a])
        return Partition(uf.labels())

    def meet(self, other: "Partition") -> "Partition":
        if self.size != other.size:
            raise ValueError("partitions of different universes")
        return Partition.from_labels(list(zip(self.rep, other.rep)))

    def pairs(self) -> Iterable[tuple[int, int]]:
        """All ordered pairs in the relation."""
        for block in self.blocks:
            for a in block:
                for b in block:
                    yield a, b

    def to_json(self) -> dict:
        return {"blocks": [list(b) for b in self.blocks]}

    @classmethod
    def from_json(cls, data: dict, n: int | None = None) -> "Partition":
        blocks = [list(b) for b in data["blocks"]]
        if n is None:
            n = sum(len(b) for b in blocks)
        return cls.from_blocks(n, blocks)

    def __repr__(self) -> str:
        inner = "|".join(",".join(map(str, b)) for b in self.blocks)
        return f"Partition({inner})"


def all_partitions(n: int):
    """Every partition of ``0..n-1`` via restricted growth strings."""
    if n == 0:
        yield Partition(())
        return

    labels = [0] * n

    def grow(i: int, top: int):
        if i == n:
            yield Partition.from_labels(labels)
            return
        for lab in range(top + 2):
            labels[i] = lab
            yield from grow(i + 1, max(top, lab))

    yield from grow(1, 0)
