from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from networkx.utils import UnionFind

from .errors import ValidationError
from .height import HeightField, require_height_function
from .lattice import Edge, Lattice, Vertex
from .regions import UNIFORM, FixedBoundary, WeightFunction, boltzmann_mass, enumerate_heights
from .sampler import glauber_run

logger = logging.getLogger("simplicial_log")


######### boundary graph
@dataclass(frozen=True)
class BoundaryGraph:
    vertices: FrozenSet[Edge]
    adjacency: FrozenSet[Tuple[Edge, Edge]]
    boundaries: Tuple[FrozenSet[Edge], ...]


def _require_pair(f1: HeightField, f2: HeightField):
    if f1.lattice != f2.lattice or f1.background != f2.background:
        raise ValidationError("f1 and f2 must share a background, so that they agree off a finite set")
    support = f1.window | f2.window
    require_height_function(f1, support, name="f1")
    require_height_function(f2, support, name="f2")


def difference_support(f1: HeightField, f2: HeightField) -> BoundaryGraph:
    """V_g = T(f1) xor T(f2), glued into boundaries through shared loops."""
    _require_pair(f1, f2)
    lattice = f1.lattice
    support = f1.window | f2.window
    vg = set()
    for e in lattice.incident_edges(support):
        x, y = lattice.endpoints(e)
        if f1(x) - f2(x) != f1(y) - f2(y):
            vg.add(e)

    uf = UnionFind(vg)
    pairs = set()
    for e in vg:
        for s in lattice.loops_through(e):
            hits = [c for c in lattice.edges_of_loop(s) if c in vg]
            assert len(hits) == 2, f"loop {s} meets V_g in {len(hits)} edges"
            a, b = sorted(hits)
            pairs.add((a, b))
            uf.union(a, b)
    boundaries = sorted((frozenset(c) for c in uf.to_sets()), key=min)
    return BoundaryGraph(frozenset(vg), frozenset(pairs), tuple(boundaries))


######### level set decomposition
@dataclass(eq=False)
class LevelSetDecomposition:
    d: int
    boundary_graph: BoundaryGraph
    level_sets: Tuple[FrozenSet[Vertex], ...]
    values: Tuple[int, ...]
    tree_edges: Tuple[Tuple[int, int], ...]  # boundary k links (minus level set, plus level set)
    root: int  # the outer level set
    tree: nx.Graph
    component: Dict[Vertex, int]

    @property
    def boundaries(self) -> Tuple[FrozenSet[Edge], ...]:
        return self.boundary_graph.boundaries

    def level_set_of(self, x: Vertex) -> int:
        return self.component.get(x, self.root)

    @property
    def origin_set(self) -> int:
        return self.level_set_of(Lattice.of(self.d).origin)

    def value_at(self, x: Vertex) -> int:
        return self.values[self.level_set_of(x)]

    def unoriented(self) -> FrozenSet[Tuple[FrozenSet[Vertex], FrozenSet[Edge]]]:
        """Tree edges as (pair of level sets, boundary), independent of orientation."""
        return frozenset((frozenset(self.level_sets[i] for i in pair), self.boundaries[k])
                         for k, pair in enumerate(self.tree_edges))


def build_lsd(f1: HeightField, f2: HeightField) -> LevelSetDecomposition:
    bg = difference_support(f1, f2)
    lattice = f1.lattice
    support = f1.window | f2.window
    box = lattice.box_window(support, pad=2)
    shell = lattice.box_shell(box)

    graph = nx.Graph()
    graph.add_nodes_from(box)
    for x in box:
        for i in range(1, lattice.d + 2):
            y = lattice.step(x, i)
            if y in box and Edge(x, i) not in bg.vertices:
                graph.add_edge(x, y)
    components = sorted((frozenset(c) for c in nx.connected_components(graph)), key=min)
    component = {x: k for k, c in enumerate(components) for x in c}
    outer_ids = {component[x] for x in shell}
    if len(outer_ids) != 1:
        raise ValidationError("Outer level set is not connected inside the window")
    root = outer_ids.pop()
    values = tuple(f1(min(c)) - f2(min(c)) for c in components)

    tree = nx.Graph()
    tree.add_nodes_from(range(len(components)))
    tree_edges = []
    for k, boundary in enumerate(bg.boundaries):
        sides = set()
        for e in boundary:
            x, y = lattice.endpoints(e)
            gx, gy = values[component[x]], values[component[y]]
            assert abs(gx - gy) == lattice.span, f"g jumps by {gy - gx} across {e}"
            sides.add((component[x], component[y]) if gx < gy else (component[y], component[x]))
        if len(sides) != 1:
            raise ValidationError(f"Boundary {k} separates more than two level sets", witness=boundary)
        minus, plus = sides.pop()
        if tree.has_edge(minus, plus):
            raise ValidationError("Two boundaries join the same pair of level sets", witness=boundary)
        tree.add_edge(minus, plus, boundary=k)
        tree_edges.append((minus, plus))
    if not nx.is_tree(tree):
        raise ValidationError("Level set decomposition is not a tree; is the complement of R connected?")
    return LevelSetDecomposition(lattice.d, bg, tuple(components), values, tuple(tree_edges), root, tree,
                                 component)


######### swaps
@dataclass(frozen=True)
class SwapMask:
    selected: FrozenSet[int] = frozenset()

    @classmethod
    def from_edges(cls, lsd: LevelSetDecomposition, edges: Iterable[Edge]) -> SwapMask:
        edges = frozenset(edges)
        chosen = {k for k, b in enumerate(lsd.boundaries) if b & edges}
        covered = frozenset().union(*[lsd.boundaries[k] for k in chosen]) if chosen else frozenset()
        if covered != edges:
            raise ValidationError("Mask is not a union of whole boundaries", witness=edges - covered or covered - edges)
        return cls(frozenset(chosen))

    @classmethod
    def everything(cls, lsd: LevelSetDecomposition) -> SwapMask:
        return cls(frozenset(range(len(lsd.boundaries))))

    def edges(self, lsd: LevelSetDecomposition) -> FrozenSet[Edge]:
        return frozenset().union(*[lsd.boundaries[k] for k in self.selected]) if self.selected else frozenset()


def swapped_values(lsd: LevelSetDecomposition, mask: SwapMask) -> Tuple[int, ...]:
    """g' on each level set: the tree walk from the root with orientation flipped on the mask."""
    new = {lsd.root: lsd.values[lsd.root]}
    for parent, child in nx.bfs_edges(lsd.tree, lsd.root):
        k = lsd.tree[parent][child]["boundary"]
        step = lsd.values[child] - lsd.values[parent]
        new[child] = new[parent] + (-step if k in mask.selected else step)
    return tuple(new[i] for i in range(len(lsd.level_sets)))


def swap(f1: HeightField, f2: HeightField, mask: SwapMask,
         lsd: Optional[LevelSetDecomposition] = None) -> Tuple[HeightField, HeightField]:
    lsd = build_lsd(f1, f2) if lsd is None else lsd
    bad = [k for k in mask.selected if not 0 <= k < len(lsd.boundaries)]
    if bad:
        raise ValidationError(f"Mask names unknown boundaries {sorted(bad)}", witness=bad)
    new_values = swapped_values(lsd, mask)
    up1, up2 = {}, {}
    for i, level_set in enumerate(lsd.level_sets):
        delta = new_values[i] - lsd.values[i]
        if delta == 0:
            continue
        assert i != lsd.root and delta % 2 == 0
        half = delta // 2
        for x in level_set:
            up1[x] = f1(x) + half
            up2[x] = f2(x) - half
    return f1.with_values(up1), f2.with_values(up2)


def random_mask(lsd: LevelSetDecomposition, rng: np.random.Generator) -> SwapMask:
    flips = rng.random(len(lsd.boundaries)) < 0.5
    return SwapMask(frozenset(int(k) for k in np.flatnonzero(flips)))


def rerandomize(f1: HeightField, f2: HeightField, rng: np.random.Generator) -> Tuple[HeightField, HeightField]:
    """Flip each boundary orientation with probability 1/2."""
    lsd = build_lsd(f1, f2)
    return swap(f1, f2, random_mask(lsd, rng), lsd)


def class_mass_invariant(f1: HeightField, f2: HeightField, mask: SwapMask, bc: FixedBoundary,
                         w: WeightFunction = UNIFORM) -> bool:
    g1, g2 = swap(f1, f2, mask)
    return boltzmann_mass(f1, bc, w) * boltzmann_mass(f2, bc, w) == boltzmann_mass(g1, bc, w) * boltzmann_mass(g2, bc, w)


######### tree distances
def lsd_distance(lsd: LevelSetDecomposition, x: Vertex) -> int:
    return nx.shortest_path_length(lsd.tree, lsd.root, lsd.level_set_of(x))


def meet_vertex(lsd: LevelSetDecomposition, x: Vertex, y: Vertex) -> int:
    """Deepest level set shared by the root paths of x and y."""
    px = nx.shortest_path(lsd.tree, lsd.root, lsd.level_set_of(x))
    py = nx.shortest_path(lsd.tree, lsd.root, lsd.level_set_of(y))
    meet = lsd.root
    for a, b in zip(px, py):
        if a != b:
            break
        meet = a
    return meet


def separating_boundaries(lsd: LevelSetDecomposition, x: Vertex) -> List[int]:
    """Boundaries whose edges alone cut x off from the outer level set."""
    lattice = Lattice.of(lsd.d)
    box = frozenset(lsd.component)
    anchor = min(lsd.level_sets[lsd.root])
    target = x if x in box else min(lsd.level_sets[lsd.root])
    cuts = []
    for k, boundary in enumerate(lsd.boundaries):
        graph = nx.Graph()
        graph.add_nodes_from(box)
        for v in box:
            for i in range(1, lsd.d + 2):
                y = lattice.step(v, i)
                if y in box and Edge(v, i) not in boundary:
                    graph.add_edge(v, y)
        if not nx.has_path(graph, anchor, target):
            cuts.append(k)
    return cuts


######### variance and covariance identities
@dataclass(frozen=True)
class IdentityReport:
    lhs: Fraction
    rhs: Fraction

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs

    def to_dict(self) -> dict:
        return {"lhs": str(self.lhs), "rhs": str(self.rhs), "equal": self.equal}


def _require_identity_region(bc: FixedBoundary):
    bc.require_region()
    if bc.lattice.origin in bc.region:
        raise ValidationError("The origin must lie outside R")


def _boltzmann_law(bc: FixedBoundary, w: WeightFunction):
    fields = list(enumerate_heights(bc))
    masses = [boltzmann_mass(f, bc, w) for f in fields]
    Z = sum(masses, Fraction(0))
    return fields, [m / Z for m in masses]


def _pair_lsds(fields: Sequence[HeightField]):
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            yield i, j, build_lsd(fields[i], fields[j])


def variance_identity_exact(bc: FixedBoundary, w: WeightFunction, x: Vertex) -> IdentityReport:
    return covariance_identity_exact(bc, w, x, x)


def covariance_identity_exact(bc: FixedBoundary, w: WeightFunction, x: Vertex, y: Vertex) -> IdentityReport:
    """Cov(f(x), f(y)) against (d+1)^2/2 E d_LSD(0, meet(x, y)), both exact."""
    _require_identity_region(bc)
    fields, probs = _boltzmann_law(bc, w)
    ex = sum((p * f(x) for f, p in zip(fields, probs)), Fraction(0))
    ey = sum((p * f(y) for f, p in zip(fields, probs)), Fraction(0))
    exy = sum((p * f(x) * f(y) for f, p in zip(fields, probs)), Fraction(0))
    lhs = exy - ex * ey

    expected = Fraction(0)
    for i, j, lsd in _pair_lsds(fields):
        depth = nx.shortest_path_length(lsd.tree, lsd.root, meet_vertex(lsd, x, y))
        # ordered pairs (i, j) and (j, i) share one unoriented tree
        expected += 2 * probs[i] * probs[j] * depth
    span = bc.lattice.span
    rhs = Fraction(span * span, 2) * expected
    logger.info(f"Covariance at {x}, {y} over {len(fields)} fields: lhs={lhs}, rhs={rhs}")
    return IdentityReport(lhs, rhs)


@dataclass(frozen=True)
class EstimatorReport:
    pairs: int
    variance_lhs: float
    variance_rhs: float
    covariance_lhs: float
    covariance_rhs: float
    variance_lhs_se: float
    variance_rhs_se: float
    covariance_lhs_se: float
    covariance_rhs_se: float


def identity_estimators_mcmc(bc: FixedBoundary, w: WeightFunction, x: Vertex, y: Vertex, samples: int,
                             steps: int = 10000, seed: int = 0) -> EstimatorReport:
    """Monte Carlo estimates of both sides from independent Glauber pairs."""
    _require_identity_region(bc)
    span = bc.lattice.span
    rows = []
    for k in range(samples):
        f1 = glauber_run(bc, w, steps=steps, seed=seed, chain=2 * k)
        f2 = glauber_run(bc, w, steps=steps, seed=seed, chain=2 * k + 1)
        lsd = build_lsd(f1, f2)
        gx, gy = f1(x) - f2(x), f1(y) - f2(y)
        meet_depth = nx.shortest_path_length(lsd.tree, lsd.root, meet_vertex(lsd, x, y))
        rows.append((gx * gx / 2, span * span * lsd_distance(lsd, x) / 2, gx * gy / 2, span * span * meet_depth / 2))
    data = np.array(rows, dtype=float)
    logger.info(f"Estimated both identity sides from {len(data)} Glauber pairs")
    means = data.mean(axis=0)
    errors = data.std(axis=0, ddof=1) / math.sqrt(len(data)) if len(data) > 1 else np.zeros(4)
    return EstimatorReport(len(data), *[float(v) for v in means], *[float(v) for v in errors])
