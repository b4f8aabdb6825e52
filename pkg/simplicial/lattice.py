from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

from .errors import ValidationError

# Canonical representative of a class x + Z*n: a tuple of d+1 ints with last entry 0.
Vertex = Tuple[int, ...]

BOX_KINDS = ("B", "Bbar", "Pi")


class Edge(NamedTuple):
    """Undirected edge {base, base + g_dir}, dir in 1..d+1."""
    base: Vertex
    dir: int


class UnrootedLoop(NamedTuple):
    """Loop start -> start+g_{d+1} -> ... following g_{order[0]}, ..., g_{order[d-1]}."""
    start: Vertex
    order: Tuple[int, ...]


@dataclass(frozen=True)
class Region:
    vertices: FrozenSet[Vertex]
    kind: str = "generic"
    n: Optional[int] = None

    def __len__(self):
        return len(self.vertices)

    def __contains__(self, v):
        return v in self.vertices

    def __iter__(self) -> Iterator[Vertex]:
        return iter(sorted(self.vertices))

    def union(self, other: Region) -> Region:
        return Region(self.vertices | other.vertices)


class Lattice:
    """The simplicial lattice X^d = Z^{d+1} / Z(1,...,1)."""

    def __init__(self, d: int):
        if not isinstance(d, int) or d < 2:
            raise ValidationError(f"Invalid dimension: {d}. Must be an integer >= 2")
        self.d = d
        self.span = d + 1
        self.loops_per_edge = math.factorial(d)
        self.origin: Vertex = (0,) * (d + 1)
        self.generators: List[Vertex] = [self.canonicalize(self._unit(i)) for i in range(1, d + 2)]
        # S_d in lexicographic order; index 0 is xi^1
        self.orders: List[Tuple[int, ...]] = list(itertools.permutations(range(1, d + 1)))

    @staticmethod
    @lru_cache(maxsize=None)
    def of(d: int) -> Lattice:
        return Lattice(d)

    def __eq__(self, other):
        return isinstance(other, Lattice) and other.d == self.d

    def __hash__(self):
        return hash(("Lattice", self.d))

    def __repr__(self):
        return f"Lattice(d={self.d})"

    def __reduce__(self):
        return (Lattice.of, (self.d,))

    def _unit(self, i: int) -> Tuple[int, ...]:
        return tuple(1 if j == i - 1 else 0 for j in range(self.d + 1))

    # ---- coordinates ----

    def canonicalize(self, raw: Sequence[int]) -> Vertex:
        if len(raw) != self.d + 1:
            raise ValidationError(f"Expected {self.d + 1} coordinates, got {len(raw)}", witness=tuple(raw))
        last = raw[-1]
        return tuple(int(c) - last for c in raw)

    def add(self, x: Vertex, y: Vertex) -> Vertex:
        return tuple(a + b for a, b in zip(x, y))

    def sub(self, x: Vertex, y: Vertex) -> Vertex:
        return tuple(a - b for a, b in zip(x, y))

    def scale(self, x: Vertex, k: int) -> Vertex:
        return tuple(k * a for a in x)

    def step(self, x: Vertex, i: int, sign: int = 1) -> Vertex:
        """x + sign * g_i."""
        g = self.generators[i - 1]
        return tuple(a + sign * b for a, b in zip(x, g))

    def neighbors(self, v: Vertex) -> List[Vertex]:
        return [self.step(v, i, s) for s in (1, -1) for i in range(1, self.d + 2)]

    def parity(self, v: Vertex) -> int:
        return sum(v) % self.span

    def plus_norm(self, v: Vertex) -> int:
        return sum(v) - self.span * min(v)

    def graph_distance(self, x: Vertex, y: Vertex) -> int:
        z = self.sub(y, x)
        # ||z + k n||_1 is convex piecewise linear in k with kinks at -z_j
        return min(sum(abs(c - k) for c in z) for k in set(z))

    def edge_between(self, x: Vertex, y: Vertex) -> Edge:
        for i in range(1, self.d + 2):
            if self.step(x, i) == y:
                return Edge(x, i)
            if self.step(y, i) == x:
                return Edge(y, i)
        raise ValidationError(f"Vertices {x} and {y} are not adjacent", witness=(x, y))

    def endpoints(self, e: Edge) -> Tuple[Vertex, Vertex]:
        return e.base, self.step(e.base, e.dir)

    # ---- loops ----

    def loop_vertices(self, s: UnrootedLoop) -> List[Vertex]:
        path = [s.start, self.step(s.start, self.d + 1)]
        for i in s.order:
            path.append(self.step(path[-1], i))
        return path

    def edges_of_loop(self, s: UnrootedLoop) -> List[Edge]:
        path = self.loop_vertices(s)
        dirs = (self.d + 1,) + tuple(s.order)
        return [Edge(path[k], dirs[k]) for k in range(self.d + 1)]

    def loops_through(self, e: Edge) -> List[UnrootedLoop]:
        loops = []
        for order in self.orders:
            if e.dir == self.d + 1:
                start = e.base
            else:
                start = self.step(e.base, self.d + 1, -1)
                for i in order[:order.index(e.dir)]:
                    start = self.step(start, i, -1)
            loops.append(UnrootedLoop(start, order))
        return loops

    def loop_with_order(self, e: Edge, order: Tuple[int, ...]) -> UnrootedLoop:
        return self.loops_through(e)[self.orders.index(order)]

    # ---- regions and windows ----

    def make_box(self, kind: str, n: int) -> Region:
        if kind not in BOX_KINDS:
            raise ValidationError(f"Invalid box kind: {kind}. Must be one of {BOX_KINDS}")
        if not isinstance(n, int) or n < 1:
            raise ValidationError(f"Invalid box size: {n}. Must be a positive integer")
        if kind == "B":
            ranges = range(1, n)
        elif kind == "Bbar":
            ranges = range(0, n + 1)
        else:
            ranges = range(-n, n)
        vertices = frozenset(tuple(a) + (0,) for a in itertools.product(ranges, repeat=self.d))
        return Region(vertices, kind=kind, n=n)

    def region(self, vertices: Iterable[Sequence[int]]) -> Region:
        return Region(frozenset(self.canonicalize(v) for v in vertices))

    def region_boundary(self, R) -> FrozenSet[Vertex]:
        verts = R.vertices if isinstance(R, Region) else R
        return frozenset(y for x in verts for y in self.neighbors(x) if y not in verts)

    def incident_edges(self, R) -> FrozenSet[Edge]:
        verts = R.vertices if isinstance(R, Region) else R
        edges = set()
        for x in verts:
            for i in range(1, self.d + 2):
                edges.add(Edge(x, i))
                edges.add(Edge(self.step(x, i, -1), i))
        return frozenset(edges)

    def ball(self, center: Vertex, radius: int) -> FrozenSet[Vertex]:
        seen = {center}
        frontier = [center]
        for _ in range(radius):
            nxt = []
            for x in frontier:
                for y in self.neighbors(x):
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
            frontier = nxt
        return frozenset(seen)

    def box_window(self, vertices: Iterable[Vertex], pad: int = 1) -> FrozenSet[Vertex]:
        """All canonical points of the bounding box of `vertices`, widened by `pad`."""
        verts = list(vertices) or [self.origin]
        lo = [min(v[j] for v in verts) - pad for j in range(self.d)]
        hi = [max(v[j] for v in verts) + pad for j in range(self.d)]
        return frozenset(tuple(a) + (0,) for a in itertools.product(*[range(l, h + 1) for l, h in zip(lo, hi)]))

    def box_shell(self, box: FrozenSet[Vertex]) -> FrozenSet[Vertex]:
        lo = [min(v[j] for v in box) for j in range(self.d)]
        hi = [max(v[j] for v in box) for j in range(self.d)]
        return frozenset(v for v in box if any(v[j] in (lo[j], hi[j]) for j in range(self.d)))

    def edges_within(self, W) -> FrozenSet[Edge]:
        return frozenset(Edge(x, i) for x in W for i in range(1, self.d + 2) if self.step(x, i) in W)

    def loops_within(self, W) -> FrozenSet[UnrootedLoop]:
        loops = set()
        for e in self.edges_within(W):
            if e.dir != self.d + 1:
                continue
            for s in self.loops_through(e):
                if all(v in W for v in self.loop_vertices(s)):
                    loops.add(s)
        return frozenset(loops)
