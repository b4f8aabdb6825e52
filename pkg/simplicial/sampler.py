from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats
from tqdm import tqdm

from .config import SimplicialConfig
from .errors import CoalescenceError, CouplingError, ValidationError
from .height import HeightField
from .lattice import Edge, Vertex
from .regions import (UNIFORM, FixedBoundary, PeriodicBoundary, TorusState, WeightFunction, _torus_constraints,
                      extremal_max, extremal_min, torus_state, validate_periodic)

logger = logging.getLogger("simplicial_log")


######### randomness
class SharedRandomness:
    """(site draw, u) pairs addressed by absolute step index; Philox keyed by (seed, chain)."""

    def __init__(self, seed: int, chain: int = 0, block: int = 4096):
        self.seed = seed
        self.chain = chain
        self.block = block
        self.key = np.random.SeedSequence([seed, chain]).generate_state(2, dtype=np.uint64)
        self._blocks: Dict[int, np.ndarray] = {}

    def _draws(self, b: int) -> np.ndarray:
        if b not in self._blocks:
            counter = np.array([0, 0, b, 0], dtype=np.uint64)
            rng = np.random.Generator(np.random.Philox(key=self.key, counter=counter))
            self._blocks[b] = rng.random((self.block, 2))
        return self._blocks[b]

    def draw(self, step: int) -> Tuple[float, float]:
        b, r = divmod(step, self.block)
        row = self._draws(b)[r]
        return float(row[0]), float(row[1])

    def site(self, step: int, sites: Sequence) -> Tuple[object, float]:
        a, u = self.draw(step)
        return sites[min(int(a * len(sites)), len(sites) - 1)], u


######### local kernels
class _FixedKernel:
    """Heat-bath conditionals on Omega(R, b) for a fixed weight function."""

    def __init__(self, bc: FixedBoundary, w: WeightFunction):
        lattice = bc.lattice
        self.bc = bc
        self.w = w
        self.d = lattice.d
        self.span = lattice.span
        self.sites = bc.sites
        self.boundary = {y: bc.reference(y) for y in bc.boundary}
        # (neighbor, edge, neighbor is x + g_i)
        self.incidence: Dict[Vertex, List[Tuple[Vertex, Edge, bool]]] = {}
        for x in self.sites:
            rows = []
            for i in range(1, self.d + 2):
                up = lattice.step(x, i)
                rows.append((up, Edge(x, i), True))
                down = lattice.step(x, i, -1)
                rows.append((down, Edge(down, i), False))
            self.incidence[x] = rows

    def initial(self, field: HeightField) -> Dict[Vertex, int]:
        values = dict(self.boundary)
        values.update(field.values_on(self.sites))
        return values

    def candidates(self, values: Dict[Vertex, int], x: Vertex) -> range:
        lo, hi = None, None
        d = self.d
        for y, _, is_up in self.incidence[x]:
            v = values[y]
            a, b = (v - 1, v + d) if is_up else (v - d, v + 1)
            lo = a if lo is None else max(lo, a)
            hi = b if hi is None else min(hi, b)
        return range(lo, hi + 1, self.span)

    def mass_at(self, values: Dict[Vertex, int], x: Vertex, value: int) -> Fraction:
        mass = Fraction(1)
        for y, e, is_up in self.incidence[x]:
            grad = values[y] - value if is_up else value - values[y]
            if grad == -self.d:
                mass *= self.w(e)
        return mass

    def p_high(self, values: Dict[Vertex, int], x: Vertex, cands: range) -> Fraction:
        if self.w.is_uniform:
            return Fraction(1, 2)
        lo, hi = self.mass_at(values, x, cands[0]), self.mass_at(values, x, cands[-1])
        return hi / (lo + hi)

    def update(self, values: Dict[Vertex, int], x: Vertex, u: float):
        cands = self.candidates(values, x)
        if len(cands) == 1:
            values[x] = cands[0]
            return
        values[x] = cands[-1] if u < self.p_high(values, x, cands) else cands[0]

    def field(self, values: Dict[Vertex, int]) -> HeightField:
        return self.bc.reference.with_values({x: values[x] for x in self.sites})


class _TorusKernel:
    def __init__(self, pbc: PeriodicBoundary):
        lattice = pbc.lattice
        self.pbc = pbc
        self.span = lattice.span
        self.sites = pbc.sites
        self.constraints = _torus_constraints(pbc)

    def candidates(self, values: Dict[Vertex, int], x: Vertex) -> range:
        lo = max(values[y] + off + a for y, off, a, _ in self.constraints[x])
        hi = min(values[y] + off + b for y, off, _, b in self.constraints[x])
        return range(lo, hi + 1, self.span)

    def update(self, values: Dict[Vertex, int], x: Vertex, u: float):
        cands = self.candidates(values, x)
        values[x] = cands[-1] if (len(cands) == 2 and u < 0.5) else cands[0]

    def state(self, values: Dict[Vertex, int]) -> TorusState:
        return TorusState(self.pbc, tuple(values[x] for x in self.sites)).normalized()


######### chain state
@dataclass(frozen=True)
class ChainState:
    field: Union[HeightField, TorusState]
    bc: Union[FixedBoundary, PeriodicBoundary]
    weights: WeightFunction = UNIFORM
    rng_seed: int = 0
    step_count: int = 0


def heat_bath_step(state: ChainState, site: Vertex, u: float) -> ChainState:
    if isinstance(state.bc, PeriodicBoundary):
        kernel = _TorusKernel(state.bc)
        if site not in kernel.constraints:
            raise ValidationError(f"Site {site} is outside the fundamental domain", witness=site)
        values = state.field.as_dict()
        kernel.update(values, site, u)
        new_field = TorusState(state.bc, tuple(values[x] for x in kernel.sites))
    else:
        if site not in state.bc.region:
            raise ValidationError(f"Site {site} is outside the movable set R", witness=site)
        kernel = _FixedKernel(state.bc, state.weights)
        values = kernel.initial(state.field)
        kernel.update(values, site, u)
        new_field = kernel.field(values)
    return replace(state, field=new_field, step_count=state.step_count + 1)


def transition_probability(bc: FixedBoundary, w: WeightFunction, f: HeightField, g: HeightField) -> Fraction:
    """P(f -> g) of the random-site heat-bath kernel."""
    kernel = _FixedKernel(bc, w)
    values = kernel.initial(f)
    diff = [x for x in bc.sites if f(x) != g(x)]
    if len(diff) > 1:
        return Fraction(0)
    sites = diff or list(bc.sites)
    total = Fraction(0)
    for x in sites:
        cands = kernel.candidates(values, x)
        if g(x) not in cands:
            continue
        if len(cands) == 1:
            p = Fraction(1)
        else:
            p_hi = kernel.p_high(values, x, cands)
            p = p_hi if g(x) == cands[-1] else 1 - p_hi
        total += p / len(bc.sites)
    return total


######### Glauber dynamics
def glauber_run(bc: FixedBoundary, w: WeightFunction = UNIFORM, steps: int = 1000, seed: int = 0, chain: int = 0,
                start: Optional[HeightField] = None, progress: bool = False) -> HeightField:
    if not bc.sites:
        return bc.reference
    kernel = _FixedKernel(bc, w)
    rng = SharedRandomness(seed, chain)
    values = kernel.initial(start if start is not None else bc.reference)
    for t in tqdm(range(steps), desc="Glauber", unit=" steps", disable=not progress):
        x, u = rng.site(t, kernel.sites)
        kernel.update(values, x, u)
    return kernel.field(values)


def glauber_samples(bc: FixedBoundary, w: WeightFunction = UNIFORM, samples: int = 100, steps: int = 1000,
                    burnin: int = 10000, seed: int = 0, chain: int = 0,
                    progress: bool = False) -> Iterator[HeightField]:
    """One chain: `burnin` steps, then a field every `steps` steps."""
    kernel = _FixedKernel(bc, w)
    rng = SharedRandomness(seed, chain)
    values = kernel.initial(bc.reference)
    t = 0
    total = burnin + samples * steps
    bar = tqdm(total=total, desc="Glauber", unit=" steps", disable=not progress)
    for k in range(samples):
        target = burnin + (k + 1) * steps
        while t < target:
            if kernel.sites:
                x, u = rng.site(t, kernel.sites)
                kernel.update(values, x, u)
            t += 1
            bar.update(1)
        yield kernel.field(values)
    bar.close()


def sandwich_bounds(bc1: FixedBoundary, bc2: FixedBoundary) -> Tuple[int, int]:
    """min and max of b1 - b2 on the boundary of R, the only values the dynamics read."""
    diffs = [bc1.reference(y) - bc2.reference(y) for y in bc1.boundary]
    if not diffs:
        return 0, 0
    return min(diffs), max(diffs)


def coupled_run(bc1: FixedBoundary, bc2: FixedBoundary, w: WeightFunction = UNIFORM, steps: int = 1000,
                seed: int = 0, chain: int = 0, start: str = "max",
                progress: bool = False) -> Tuple[HeightField, HeightField]:
    """Two chains on the same R driven by one randomness stream, sandwich asserted after every step."""
    if bc1.region != bc2.region:
        raise ValidationError("Coupled chains need the same region R")
    if start not in ("max", "min"):
        raise ValidationError(f"Invalid start: {start}. Must be 'max' or 'min'")
    a_minus, a_plus = sandwich_bounds(bc1, bc2)
    extremal = extremal_max if start == "max" else extremal_min
    k1, k2 = _FixedKernel(bc1, w), _FixedKernel(bc2, w)
    v1, v2 = k1.initial(extremal(bc1)), k2.initial(extremal(bc2))
    for x in bc1.sites:
        if not a_minus <= v1[x] - v2[x] <= a_plus:
            raise CouplingError(f"Initial states violate the sandwich at {x}")
    rng = SharedRandomness(seed, chain)
    for t in tqdm(range(steps), desc="Coupled run", unit=" steps", disable=not progress or not bc1.sites):
        if not bc1.sites:
            break
        x, u = rng.site(t, bc1.sites)
        k1.update(v1, x, u)
        k2.update(v2, x, u)
        if not a_minus <= v1[x] - v2[x] <= a_plus:
            raise CouplingError(f"Sandwich [{a_minus}, {a_plus}] violated at {x} after step {t}: "
                                f"f1 - f2 = {v1[x] - v2[x]}")
    return k1.field(v1), k2.field(v2)


######### coupling from the past
def cftp_sample(bc: FixedBoundary, w: WeightFunction = UNIFORM, seed: int = 0, chain: int = 0,
                max_doublings: Optional[int] = None, experimental_weighted: bool = False,
                progress: bool = False) -> HeightField:
    """
    Exact sample from the Boltzmann measure on Omega(R, b) by monotone coupling from the past.

    Args:
        bc: Fixed boundary conditions
        w: Weight function, uniform unless experimental_weighted is set
        seed: Seed of the shared randomness
        chain: Chain index, independent streams per index
        max_doublings: Horizon is 2^max_doublings steps

    Returns:
        The coalesced field at time 0
    """
    if not w.is_uniform and not experimental_weighted:
        raise ValidationError("CFTP needs w = 1; pass experimental_weighted=True to run it under order checks")
    if not bc.sites:
        return bc.reference
    max_doublings = SimplicialConfig.DEFAULT_MAX_DOUBLINGS if max_doublings is None else max_doublings
    kernel = _FixedKernel(bc, w)
    rng = SharedRandomness(seed, chain)
    top0, bottom0 = kernel.initial(extremal_max(bc)), kernel.initial(extremal_min(bc))
    bar = tqdm(desc="Running cftp", unit=" steps", disable=not progress)
    for k in range(max_doublings + 1):
        horizon = 2 ** k
        top, bottom = dict(top0), dict(bottom0)
        # step index t drives time -(t+1), so earlier rounds reuse their randomness
        for t in range(horizon - 1, -1, -1):
            x, u = rng.site(t, kernel.sites)
            kernel.update(top, x, u)
            kernel.update(bottom, x, u)
            if bottom[x] > top[x]:
                raise CouplingError(f"Order between extremal chains broken at {x}, time {-(t + 1)}")
            bar.update(1)
        if top == bottom:
            bar.close()
            logger.debug(f"CFTP coalesced from time -{horizon}")
            return kernel.field(top)
    bar.close()
    raise CoalescenceError(f"No coalescence within horizon 2^{max_doublings}")


def cftp_batch(bc: FixedBoundary, samples: int, seed: int = 0, w: WeightFunction = UNIFORM,
               max_doublings: Optional[int] = None, experimental_weighted: bool = False,
               progress: bool = False) -> List[HeightField]:
    logger.info(f"----- cftp x {samples} -----")
    start_time = time.time()
    out = [cftp_sample(bc, w, seed=seed, chain=i, max_doublings=max_doublings,
                       experimental_weighted=experimental_weighted)
           for i in tqdm(range(samples), desc="CFTP samples", disable=not progress)]
    logger.info(f"CFTP sampling completed in {time.time() - start_time:.2f} seconds")
    return out


######### periodic dynamics
def periodic_samples(pbc: PeriodicBoundary, samples: int = 1, steps: int = 1000, burnin: int = 0, seed: int = 0,
                     chain: int = 0, progress: bool = False) -> Iterator[TorusState]:
    if not validate_periodic(pbc):
        raise ValidationError(f"Slope {pbc.slope.to_str()} is not in S_{pbc.n}", witness=pbc.slope)
    kernel = _TorusKernel(pbc)
    rng = SharedRandomness(seed, chain)
    values = torus_state(pbc).as_dict()
    t = 0
    bar = tqdm(total=burnin + samples * steps, desc="Periodic Glauber", unit=" steps", disable=not progress)
    for k in range(samples):
        target = burnin + (k + 1) * steps
        while t < target:
            x, u = rng.site(t, kernel.sites)
            kernel.update(values, x, u)
            t += 1
            bar.update(1)
        yield kernel.state(values)
    bar.close()


def periodic_glauber(pbc: PeriodicBoundary, steps: int, seed: int = 0, chain: int = 0) -> TorusState:
    return next(periodic_samples(pbc, samples=1, steps=steps, seed=seed, chain=chain))


######### empirical checks
def distance_to_complement(bc: FixedBoundary, x: Vertex) -> int:
    if x not in bc.region:
        return 0
    lattice = bc.lattice
    return min(lattice.graph_distance(x, y) for y in bc.boundary)


def distance_to_period_lattice(pbc: PeriodicBoundary, x: Vertex) -> int:
    lattice, N = pbc.lattice, pbc.period
    site, _ = pbc.wrap(x)
    corners = np.array(np.meshgrid(*[[-1, 0, 1, 2]] * lattice.d)).reshape(lattice.d, -1).T
    return min(lattice.graph_distance(site, tuple(int(N * q) for q in c) + (0,)) for c in corners)


@dataclass(frozen=True)
class VarianceBoundReport:
    x: Vertex
    samples: int
    mean: float
    variance: float
    stderr: float
    distance: int
    bound: int
    violated: bool


def empirical_variance_bound_check(samples: Sequence, x: Vertex,
                                   bc: Union[FixedBoundary, PeriodicBoundary]) -> VarianceBoundReport:
    """Empirical Var f(x) against (d+1)^2 * n, n the distance to where f is pinned."""
    values = np.array([f(x) for f in samples], dtype=float)
    if len(values) < 2:
        raise ValidationError("Need at least two samples for a variance")
    if isinstance(bc, PeriodicBoundary):
        distance = distance_to_period_lattice(bc, x)
    else:
        distance = distance_to_complement(bc, x)
    span = bc.lattice.span
    variance = float(np.var(values, ddof=1))
    stderr = variance * math.sqrt(2.0 / (len(values) - 1))
    bound = span ** 2 * distance
    return VarianceBoundReport(x, len(values), float(values.mean()), variance, stderr, distance, bound,
                               variance - 3 * stderr > bound)


@dataclass(frozen=True)
class TailRow:
    a: float
    upper: float
    lower: float
    bound: float


def azuma_tail_bounds(samples: Sequence, x: Vertex, bc: Union[FixedBoundary, PeriodicBoundary],
                      a_values: Iterable[float] = (0.5, 1.0, 1.5, 2.0, 3.0),
                      mean: Optional[float] = None) -> List[TailRow]:
    """Empirical P(f(x) - mu >= (d+1)a) and P(f(x) - mu <= -(d+1)a) next to exp(-a^2 / 2n)."""
    values = np.array([f(x) for f in samples], dtype=float)
    if isinstance(bc, PeriodicBoundary):
        distance = distance_to_period_lattice(bc, x)
        mu = float(bc.slope.evaluate(x)) if mean is None else mean
    else:
        distance = distance_to_complement(bc, x)
        mu = float(values.mean()) if mean is None else mean
    span = bc.lattice.span
    rows = []
    for a in a_values:
        bound = math.exp(-a * a / (2 * distance)) if distance > 0 else 0.0
        rows.append(TailRow(a, float(np.mean(values - mu >= span * a)), float(np.mean(values - mu <= -span * a)), bound))
    return rows


@dataclass(frozen=True)
class UniformityReport:
    support: int
    samples: int
    statistic: float
    pvalue: float
    alpha: float
    passed: bool
    unseen: int


def chi_square_uniformity(samples: Sequence, support: Sequence, alpha: float = 0.01) -> UniformityReport:
    index = {f: k for k, f in enumerate(support)}
    counts = np.zeros(len(support), dtype=np.int64)
    for f in samples:
        if f not in index:
            raise ValidationError("Sample outside the enumerated support", witness=f)
        counts[index[f]] += 1
    statistic, pvalue = stats.chisquare(counts)
    return UniformityReport(len(support), int(counts.sum()), float(statistic), float(pvalue), alpha,
                            bool(pvalue >= alpha), int(np.sum(counts == 0)))
