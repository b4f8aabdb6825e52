from __future__ import annotations

import itertools
import logging
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Tuple

import networkx as nx

from .config import SimplicialConfig
from .errors import CapExceededError, ValidationError
from .height import FloorBackground, HeightField, Slope, as_fraction, gradient, require_height_function
from .lattice import Edge, Lattice, Region, Vertex

logger = logging.getLogger("simplicial_log")


def region_is_valid(lattice: Lattice, R) -> bool:
    """True iff the complement of R is connected."""
    verts = R.vertices if isinstance(R, Region) else frozenset(R)
    if not verts:
        return True
    box = lattice.box_window(verts, pad=2)
    graph = nx.Graph()
    outside = [x for x in box if x not in verts]
    graph.add_nodes_from(outside)
    for x in outside:
        for i in range(1, lattice.d + 2):
            y = lattice.step(x, i)
            if y in box and y not in verts:
                graph.add_edge(x, y)
    return nx.number_connected_components(graph) == 1


######### boundary conditions
@dataclass(frozen=True)
class WeightFunction:
    """Positive edge weights, `default` off the explicit table."""
    weights: Mapping[Edge, Fraction] = field(default_factory=dict, hash=False)
    default: Fraction = Fraction(1)

    def __post_init__(self):
        table = {e: as_fraction(w) for e, w in dict(self.weights).items()}
        object.__setattr__(self, "weights", table)
        object.__setattr__(self, "default", as_fraction(self.default))
        for e, w in table.items():
            if w <= 0:
                raise ValidationError(f"Weight {w} on edge {e} is not positive", witness=e)
        if self.default <= 0:
            raise ValidationError(f"Default weight {self.default} is not positive")

    def __call__(self, e: Edge) -> Fraction:
        return self.weights.get(e, self.default)

    def __hash__(self):
        return hash((frozenset(self.weights.items()), self.default))

    @property
    def is_uniform(self) -> bool:
        return self.default == 1 and all(w == 1 for w in self.weights.values())

    def scaled(self, c) -> WeightFunction:
        c = as_fraction(c)
        return WeightFunction({e: w * c for e, w in self.weights.items()}, self.default * c)


UNIFORM = WeightFunction()


@dataclass(frozen=True)
class FixedBoundary:
    """Omega(R, b): height functions equal to `reference` off `region`."""
    region: Region
    reference: HeightField

    def __post_init__(self):
        require_height_function(self.reference, self.region.vertices | self.boundary, name="Boundary reference")

    @property
    def lattice(self) -> Lattice:
        return self.reference.lattice

    @cached_property
    def sites(self) -> Tuple[Vertex, ...]:
        return tuple(sorted(self.region.vertices))

    @cached_property
    def boundary(self) -> FrozenSet[Vertex]:
        return self.lattice.region_boundary(self.region)

    @cached_property
    def incident(self) -> FrozenSet[Edge]:
        return self.lattice.incident_edges(self.region)

    def is_region(self) -> bool:
        return region_is_valid(self.lattice, self.region)

    def require_region(self):
        if not self.is_region():
            raise ValidationError("The complement of R is not connected", witness=self.region)
        return self


@dataclass(frozen=True)
class PeriodicBoundary:
    n: int
    slope: Slope

    @property
    def lattice(self) -> Lattice:
        return Lattice.of(self.slope.d)

    @property
    def period(self) -> int:
        """Side N of the fundamental domain of L_n = N X^d."""
        return self.n * (self.slope.d + 1)

    @cached_property
    def sites(self) -> Tuple[Vertex, ...]:
        N, d = self.period, self.slope.d
        return tuple(tuple(a) + (0,) for a in itertools.product(range(N), repeat=d))

    def wrap(self, x: Vertex) -> Tuple[Vertex, int]:
        """Site of x in the fundamental domain and the additive offset s(x - site)."""
        N = self.period
        q = [c // N for c in x[:-1]]
        site = tuple(c % N for c in x[:-1]) + (0,)
        offset = N * sum((qj * s for qj, s in zip(q, self.slope.values)), Fraction(0))
        assert offset.denominator == 1
        return site, int(offset)


######### extremal fields
def extremal_max(bc: FixedBoundary) -> HeightField:
    lattice, b = bc.lattice, bc.reference
    if not bc.region.vertices:
        return b
    boundary = [(y, b(y)) for y in sorted(bc.boundary)]
    values = {x: min(v + lattice.plus_norm(lattice.sub(x, y)) for y, v in boundary) for x in bc.sites}
    return b.with_values(values)


def extremal_min(bc: FixedBoundary) -> HeightField:
    lattice, b = bc.lattice, bc.reference
    if not bc.region.vertices:
        return b
    boundary = [(y, b(y)) for y in sorted(bc.boundary)]
    values = {x: max(v - lattice.plus_norm(lattice.sub(y, x)) for y, v in boundary) for x in bc.sites}
    return b.with_values(values)


######### exact enumeration
class _Search:
    """Depth-first assignment over R with Lipschitz interval tightening."""

    def __init__(self, bc: FixedBoundary):
        lattice = bc.lattice
        self.span = lattice.span
        self.order = self._bfs_order(bc)
        top, bottom = extremal_max(bc), extremal_min(bc)
        self.hi0 = [top(x) for x in self.order]
        self.lo0 = [bottom(x) for x in self.order]
        k = len(self.order)
        self.norm = [[lattice.plus_norm(lattice.sub(self.order[i], self.order[j])) for j in range(k)]
                     for i in range(k)]

    @staticmethod
    def _bfs_order(bc: FixedBoundary) -> List[Vertex]:
        lattice = bc.lattice
        seen = set()
        order = []
        queue = deque(sorted(bc.boundary))
        while queue:
            x = queue.popleft()
            for y in sorted(lattice.neighbors(x)):
                if y in bc.region and y not in seen:
                    seen.add(y)
                    order.append(y)
                    queue.append(y)
        # components of R not reachable from the boundary cannot exist for finite R
        assert len(order) == len(bc.region)
        return order

    def candidates(self, values: List[int], k: int) -> range:
        lo, hi = self.lo0[k], self.hi0[k]
        row = self.norm[k]
        for j in range(k):
            v = values[j]
            lo = max(lo, v - self.norm[j][k])
            hi = min(hi, v + row[j])
        return range(lo, hi + 1, self.span)

    def walk(self, prefix: Tuple[int, ...] = ()) -> Iterator[List[int]]:
        values = list(prefix) + [0] * (len(self.order) - len(prefix))

        def rec(k):
            if k == len(self.order):
                yield values
                return
            for v in self.candidates(values, k):
                values[k] = v
                yield from rec(k + 1)

        if all(prefix[k] in self.candidates(values, k) for k in range(len(prefix))):
            yield from rec(len(prefix))

    def count(self, prefix: Tuple[int, ...] = ()) -> int:
        total = 0
        values = list(prefix) + [0] * (len(self.order) - len(prefix))
        last = len(self.order) - 1

        def rec(k):
            nonlocal total
            if k == len(self.order):
                total += 1
                return
            cands = self.candidates(values, k)
            if k == last:
                total += len(cands)
                return
            for v in cands:
                values[k] = v
                rec(k + 1)

        if not self.order:
            return 1
        rec(len(prefix))
        return total


def _check_cap(bc: FixedBoundary, cap: Optional[int]):
    cap = SimplicialConfig.DEFAULT_ENUMERATION_CAP if cap is None else cap
    if len(bc.region) > cap:
        raise CapExceededError(f"|R| = {len(bc.region)} exceeds the enumeration cap {cap}",
                               size=len(bc.region), cap=cap)


def enumerate_heights(bc: FixedBoundary, cap: Optional[int] = None) -> Iterator[HeightField]:
    """All members of Omega(R, b) in lexicographic order of their values along the search order."""
    _check_cap(bc, cap)
    search = _Search(bc)
    for values in search.walk():
        yield bc.reference.with_values(dict(zip(search.order, values)))


def _count_prefix(args) -> int:
    bc, prefix = args
    return _Search(bc).count(prefix)


def count(bc: FixedBoundary, cap: Optional[int] = None, workers: int = 1) -> int:
    _check_cap(bc, cap)
    search = _Search(bc)
    if workers <= 1 or not search.order:
        return search.count()
    prefixes = [(v,) for v in search.candidates([0] * len(search.order), 0)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves prefix order, so the sum is deterministic
        return sum(pool.map(_count_prefix, [(bc, p) for p in prefixes]))


def boltzmann_mass(g: HeightField, bc: FixedBoundary, w: WeightFunction = UNIFORM) -> Fraction:
    mass = Fraction(1)
    d = bc.lattice.d
    for e in bc.incident:
        if gradient(g, e) == -d:
            mass *= w(e)
    return mass


def partition_function(bc: FixedBoundary, w: WeightFunction = UNIFORM, cap: Optional[int] = None) -> Fraction:
    start_time = time.time()
    Z = sum((boltzmann_mass(g, bc, w) for g in enumerate_heights(bc, cap)), Fraction(0))
    logger.debug(f"Partition function over |R|={len(bc.region)} computed in {time.time() - start_time:.2f} seconds")
    return Z


def flip_counts(g: HeightField, bc: FixedBoundary) -> Tuple[int, ...]:
    """|T(g) n E^d(R)_i| for each direction class i."""
    d = bc.lattice.d
    counts = [0] * (d + 1)
    for e in bc.incident:
        if gradient(g, e) == -d:
            counts[e.dir - 1] += 1
    return tuple(counts)


######### periodic boundary conditions
@dataclass(frozen=True)
class TorusState:
    """An (L_n, s)-periodic height function stored on the fundamental domain."""
    pbc: PeriodicBoundary
    values: Tuple[int, ...]

    @cached_property
    def _index(self) -> Dict[Vertex, int]:
        return {x: k for k, x in enumerate(self.pbc.sites)}

    def __call__(self, x: Vertex) -> int:
        site, offset = self.pbc.wrap(x)
        return self.values[self._index[site]] + offset

    def normalized(self) -> TorusState:
        base = self.values[0]
        return TorusState(self.pbc, tuple(v - base for v in self.values))

    def as_dict(self) -> Dict[Vertex, int]:
        return dict(zip(self.pbc.sites, self.values))


def validate_periodic(pbc: PeriodicBoundary) -> bool:
    return isinstance(pbc.n, int) and pbc.n >= 1 and pbc.slope.in_S_n(pbc.n)


def torus_state(pbc: PeriodicBoundary) -> TorusState:
    if not validate_periodic(pbc):
        raise ValidationError(f"Slope {pbc.slope.to_str()} is not in S_{pbc.n}", witness=pbc.slope)
    lattice = pbc.lattice
    background = FloorBackground(pbc.slope, Fraction(0))
    return TorusState(pbc, tuple(background.value(lattice, x) for x in pbc.sites))


def torus_validate(state: TorusState) -> bool:
    pbc = state.pbc
    lattice = pbc.lattice
    if state.values[0] != 0:
        return False
    for x in pbc.sites:
        if (state(x) - lattice.parity(x)) % lattice.span != 0:
            return False
        for i in range(1, lattice.d + 2):
            if state(lattice.step(x, i)) - state(x) not in (1, -lattice.d):
                return False
    return True


def _torus_constraints(pbc: PeriodicBoundary) -> Dict[Vertex, List[Tuple[Vertex, int, int, int]]]:
    """For each site x: (neighbor site, offset, low, high) with f(x) - f(neighbor) - offset in [low, high]."""
    lattice, d = pbc.lattice, pbc.lattice.d
    table = {}
    for x in pbc.sites:
        rows = []
        for i in range(1, d + 2):
            site, offset = pbc.wrap(lattice.step(x, i))
            rows.append((site, offset, -1, d))
            site, offset = pbc.wrap(lattice.step(x, i, -1))
            rows.append((site, offset, -d, 1))
        table[x] = rows
    return table


def enumerate_torus(pbc: PeriodicBoundary, cap: Optional[int] = None) -> Iterator[TorusState]:
    """All of Omega(L_n, s) with f(0) = 0."""
    if not validate_periodic(pbc):
        raise ValidationError(f"Slope {pbc.slope.to_str()} is not in S_{pbc.n}", witness=pbc.slope)
    cap = SimplicialConfig.DEFAULT_TORUS_CAP if cap is None else cap
    lattice = pbc.lattice
    free = len(pbc.sites) - 1
    if free > cap:
        raise CapExceededError(f"Torus has {free} free sites, cap is {cap}", size=free, cap=cap)

    constraints = _torus_constraints(pbc)
    order = [lattice.origin]
    seen = {lattice.origin}
    queue = deque(order)
    while queue:
        x = queue.popleft()
        for y, _, _, _ in constraints[x]:
            if y not in seen:
                seen.add(y)
                order.append(y)
                queue.append(y)
    values: Dict[Vertex, int] = {lattice.origin: 0}

    def consistent(x):
        return all(values[y] + off + lo <= values[x] <= values[y] + off + hi
                   for y, off, lo, hi in constraints[x] if y in values)

    def rec(k):
        if k == len(order):
            yield TorusState(pbc, tuple(values[x] for x in pbc.sites))
            return
        x = order[k]
        lo, hi = None, None
        for y, off, a, b in constraints[x]:
            if y in values:
                lo = values[y] + off + a if lo is None else max(lo, values[y] + off + a)
                hi = values[y] + off + b if hi is None else min(hi, values[y] + off + b)
        start = lo + (lattice.parity(x) - lo) % lattice.span
        for v in range(start, hi + 1, lattice.span):
            values[x] = v
            if consistent(x):
                yield from rec(k + 1)
            del values[x]

    if consistent(lattice.origin):
        yield from rec(1)
