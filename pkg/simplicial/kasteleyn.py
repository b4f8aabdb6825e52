from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from utils.util import Timer

from .config import SimplicialConfig
from .errors import CapExceededError, ValidationError
from .height import Tiling, gradient
from .lattice import Edge, Lattice, UnrootedLoop
from .regions import UNIFORM, FixedBoundary, WeightFunction, count, partition_function

logger = logging.getLogger("simplicial_log")


######### dual hypergraph
@dataclass(frozen=True)
class DualHyperedge:
    source: Edge
    loops: FrozenSet[UnrootedLoop]


def dual_edge(lattice: Lattice, e: Edge) -> DualHyperedge:
    return DualHyperedge(e, frozenset(lattice.loops_through(e)))


def hyperedge_source(lattice: Lattice, loops: Iterable[UnrootedLoop]) -> Edge:
    """The unique edge traversed by every loop of a hyperedge."""
    shared = None
    for s in loops:
        edges = set(lattice.edges_of_loop(s))
        shared = edges if shared is None else shared & edges
    if not shared or len(shared) != 1:
        raise ValidationError("Loops do not form a hyperedge", witness=tuple(loops))
    return next(iter(shared))


def matching_of_tiling(T: Tiling) -> FrozenSet[DualHyperedge]:
    lattice = T.lattice
    return frozenset(dual_edge(lattice, e) for e in T.edges)


def is_tiling(lattice: Lattice, edges: Iterable[Edge], loops: Iterable[UnrootedLoop]) -> bool:
    """True iff {h(e) : e in edges} partitions `loops`."""
    cover: Dict[UnrootedLoop, int] = {s: 0 for s in loops}
    for e in edges:
        for s in lattice.loops_through(e):
            if s in cover:
                cover[s] += 1
    return all(c == 1 for c in cover.values())


######### hypermatrices
@dataclass
class SparseHypermatrix:
    rank: int
    size: int
    entries: Dict[Tuple[int, ...], Fraction] = field(default_factory=dict)

    @classmethod
    def from_dense(cls, array) -> SparseHypermatrix:
        array = np.asarray(array, dtype=object)
        if len(set(array.shape)) > 1:
            raise ValidationError(f"Hypermatrix must be cubical, got shape {array.shape}")
        size = array.shape[0] if array.ndim else 0
        entries = {}
        for idx, value in np.ndenumerate(array):
            if value != 0:
                entries[tuple(int(i) for i in idx)] = Fraction(value)
        return cls(array.ndim, size, entries)

    def to_matrix(self) -> List[List[Fraction]]:
        assert self.rank == 2
        matrix = [[Fraction(0)] * self.size for _ in range(self.size)]
        for (i, j), v in self.entries.items():
            matrix[i][j] = v
        return matrix


@dataclass
class KasteleynHypermatrix(SparseHypermatrix):
    index_sets: Tuple[Tuple[UnrootedLoop, ...], ...] = ()


@dataclass(frozen=True)
class HyperdetResult:
    value: Fraction
    nonzero_terms: Optional[int]
    signs: FrozenSet[int]


def permutation_sign(perm: Sequence[int]) -> int:
    seen = [False] * len(perm)
    sign = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def elimination_det(matrix: Sequence[Sequence]) -> Fraction:
    """Fraction-free (Bareiss) elimination."""
    M = [[Fraction(v) for v in row] for row in matrix]
    n = len(M)
    if n == 0:
        return Fraction(1)
    sign, prev = 1, Fraction(1)
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if swap is None:
                return Fraction(0)
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) / prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def _rows(A: SparseHypermatrix) -> List[List[Tuple[Tuple[int, ...], Fraction]]]:
    rows = [[] for _ in range(A.size)]
    for idx, value in sorted(A.entries.items()):
        if value != 0:
            rows[idx[0]].append((idx[1:], value))
    return rows


def _leibniz(rows, size: int, cols: int, first: Optional[int] = None):
    """Sum of nonzero Leibniz terms; returns (value, term count, term signs)."""
    perms = [[0] * size for _ in range(cols)]
    used = [set() for _ in range(cols)]
    total = Fraction(0)
    terms = 0
    signs = set()

    def rec(k, product):
        nonlocal total, terms
        if k == size:
            sign = 1
            for p in perms:
                sign *= permutation_sign(p)
            term = sign * product
            total += term
            terms += 1
            signs.add(1 if term > 0 else -1)
            return
        choices = rows[k] if (k > 0 or first is None) else [rows[0][first]]
        for rest, value in choices:
            if any(rest[c] in used[c] for c in range(cols)):
                continue
            for c in range(cols):
                used[c].add(rest[c])
                perms[c][k] = rest[c]
            rec(k + 1, product * value)
            for c in range(cols):
                used[c].discard(rest[c])

    rec(0, Fraction(1))
    return total, terms, signs


def _leibniz_branch(args):
    rows, size, cols, first = args
    return _leibniz(rows, size, cols, first)


def hyperdet(A, cap: Optional[int] = None, workers: int = 1) -> HyperdetResult:
    """Cayley hyperdeterminant of an even-rank cubical hypermatrix."""
    if not isinstance(A, SparseHypermatrix):
        A = SparseHypermatrix.from_dense(A)
    m, n = A.rank, A.size
    if m % 2 != 0:
        raise ValidationError(f"Hyperdeterminant needs even rank, got {m}")
    if n == 0:
        return HyperdetResult(Fraction(1), 1, frozenset({1}))

    cap = SimplicialConfig.DEFAULT_HYPERDET_CAP if cap is None else cap
    work = math.factorial(n) ** (m - 1)
    if work > cap:
        if m == 2:
            return HyperdetResult(elimination_det(A.to_matrix()), None, frozenset())
        raise CapExceededError(f"(n!)^(m-1) = {work} exceeds the hyperdeterminant cap {cap}", size=work, cap=cap)

    rows = _rows(A)
    if workers <= 1 or not rows[0]:
        value, terms, signs = _leibniz(rows, n, m - 1)
    else:
        jobs = [(rows, n, m - 1, i) for i in range(len(rows[0]))]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_leibniz_branch, jobs))
        # reduce in branch order
        value = sum((p[0] for p in parts), Fraction(0))
        terms = sum(p[1] for p in parts)
        signs = set().union(*[p[2] for p in parts])
    return HyperdetResult(value, terms, frozenset(signs))


######### Kasteleyn hypermatrix of a fixed boundary
def reference_tiling_edges(bc: FixedBoundary) -> FrozenSet[Edge]:
    """T n E^d(R) for T = T(b)."""
    d = bc.lattice.d
    return frozenset(e for e in bc.incident if gradient(bc.reference, e) == -d)


def build_index_sets(bc: FixedBoundary) -> Tuple[Tuple[UnrootedLoop, ...], ...]:
    lattice = bc.lattice
    flips = sorted(reference_tiling_edges(bc))
    sets = []
    for order in lattice.orders:
        sets.append(tuple(sorted(lattice.loop_with_order(e, order) for e in flips)))
    assert len({len(X) for X in sets}) <= 1
    return tuple(sets)


def build_hypermatrix(bc: FixedBoundary, w: WeightFunction = UNIFORM) -> KasteleynHypermatrix:
    lattice = bc.lattice
    index_sets = build_index_sets(bc)
    positions = [{s: k for k, s in enumerate(X)} for X in index_sets]
    entries = {}
    for e in sorted(bc.incident):
        idx = []
        for pos, s in zip(positions, lattice.loops_through(e)):
            if s not in pos:
                break
            idx.append(pos[s])
        else:
            entries[tuple(idx)] = w(e)
    size = len(index_sets[0]) if index_sets else 0
    return KasteleynHypermatrix(lattice.loops_per_edge, size, entries, index_sets)


@dataclass(frozen=True)
class KasteleynReport:
    n: int
    rank: int
    Z: Fraction
    det: Fraction
    sign: int
    equal: bool
    uniform_sign: bool
    nonzero_terms: Optional[int]
    count: int
    elapsed_ms: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "rank": self.rank,
            "Z": str(self.Z),
            "det": str(self.det),
            "sign": self.sign,
            "equal": self.equal,
            "uniform_sign": self.uniform_sign,
            "nonzero_terms": self.nonzero_terms,
            "count": str(self.count),
            "elapsed_ms": round(self.elapsed_ms, 3),
        }


def verify_kasteleyn(bc: FixedBoundary, w: WeightFunction = UNIFORM, enumeration_cap: Optional[int] = None,
                     hyperdet_cap: Optional[int] = None, workers: int = 1) -> KasteleynReport:
    logger.info("----- kasteleyn verification -----")
    timer = Timer()
    bc.require_region()
    Z = partition_function(bc, w, cap=enumeration_cap)
    total = count(bc, cap=enumeration_cap)
    K = build_hypermatrix(bc, w)
    result = hyperdet(K, cap=hyperdet_cap, workers=workers)
    sign = (result.value > 0) - (result.value < 0)
    elapsed = timer.get_elapsed_time()
    report = KasteleynReport(
        n=K.size,
        rank=K.rank,
        Z=Z,
        det=result.value,
        sign=sign,
        equal=abs(result.value) == Z,
        uniform_sign=len(result.signs) <= 1,
        nonzero_terms=result.nonzero_terms,
        count=total,
        elapsed_ms=1000 * elapsed,
    )
    logger.info(f"n={report.n}, rank={report.rank}, Z={report.Z}, det={report.det}, equal={report.equal}")
    logger.info(f"Kasteleyn verification completed in {elapsed:.2f} seconds")
    return report
