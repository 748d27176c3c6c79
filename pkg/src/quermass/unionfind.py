"""Disjoint-set forest and a uniform-grid spatial index."""

from __future__ import annotations

import math
from collections import defaultdict


class UnionFind:
    """Union-find with path halving; roots are always the smallest member."""

    def __init__(self, size: int):
        self.parent = list(range(size))
        self.n_sets = size

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.n_sets -= 1
        return True

    def labels(self) -> list[int]:
        """Root of every element. Roots are smallest indices, so labels are canonical."""
        return [self.find(i) for i in range(len(self.parent))]


class UniformGrid:
    """Bucket points into square cells of side ``cell``.

    Keys are arbitrary hashable ids so the sampler can insert and delete
    in O(1) while the kernel uses plain integer indices.
    """

    def __init__(self, cell: float):
        if not cell > 0:
            raise ValueError("cell side must be positive")
        self.cell = float(cell)
        self.cells: dict[tuple[int, int], set] = defaultdict(set)
        self.pos: dict = {}

    def key(self, x: float, y: float) -> tuple[int, int]:
        return (math.floor(x / self.cell), math.floor(y / self.cell))

    def insert(self, ident, x: float, y: float) -> None:
        self.pos[ident] = (x, y)
        self.cells[self.key(x, y)].add(ident)

    def remove(self, ident) -> None:
        x, y = self.pos.pop(ident)
        k = self.key(x, y)
        bucket = self.cells[k]
        bucket.discard(ident)
        if not bucket:
            del self.cells[k]

    def move(self, ident, x: float, y: float) -> None:
        self.remove(ident)
        self.insert(ident, x, y)

    def candidates(self, x: float, y: float, radius: float):
        """Ids in every cell that could hold a point within ``radius`` of (x, y)."""
        c = self.cell
        i0, i1 = math.floor((x - radius) / c), math.floor((x + radius) / c)
        j0, j1 = math.floor((y - radius) / c), math.floor((y + radius) / c)
        cells = self.cells
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                bucket = cells.get((i, j))
                if bucket:
                    yield from bucket

    def query(self, x: float, y: float, radius: float) -> list:
        """Ids whose point lies within ``radius`` (closed) of (x, y)."""
        out = []
        r2 = radius * radius
        pos = self.pos
        for ident in self.candidates(x, y, radius):
            px, py = pos[ident]
            if (px - x) ** 2 + (py - y) ** 2 <= r2:
                out.append(ident)
        return out
