from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import mpmath
from mpmath import mp

from utils.util import Timer

from .config import SimplicialConfig
from .errors import ValidationError
from .height import Slope, floor_field
from .lattice import Lattice
from .regions import FixedBoundary, count

logger = logging.getLogger("simplicial_log")


@dataclass(frozen=True)
class TensionEntry:
    n: int
    count: int
    sigma: mpmath.mpf
    offset: Fraction

    def to_row(self, digits: int = 20) -> List[str]:
        return [str(self.n), str(self.offset), str(self.count), mpmath.nstr(self.sigma, digits)]


@dataclass(frozen=True)
class TensionEstimate:
    slope: Slope
    entries: Tuple[TensionEntry, ...]

    def sigma(self, n: int) -> mpmath.mpf:
        return next(e.sigma for e in self.entries if e.n == n)


def _require_slope(s: Slope):
    if not s.in_S():
        raise ValidationError(f"Slope {s.to_str()} is not in S", witness=s)


def box_boundary_condition(s: Slope, n: int, a=0) -> FixedBoundary:
    lattice = Lattice.of(s.d)
    return FixedBoundary(lattice.make_box("B", n), floor_field(s, a))


def breakpoints(s: Slope, n: int) -> List[Fraction]:
    """Offsets in [0, d+1) where floor(s + a) changes somewhere on the boundary of B_n."""
    _require_slope(s)
    lattice = Lattice.of(s.d)
    boundary = lattice.region_boundary(lattice.make_box("B", n))
    points = {Fraction(0)}
    for x in boundary:
        points.add((lattice.parity(x) - s.evaluate(x)) % lattice.span)
    return sorted(points)


def log_sigma(total: int, n: int, d: int, precision: Optional[int] = None) -> mpmath.mpf:
    precision = SimplicialConfig.DEFAULT_LOG_PRECISION if precision is None else precision
    with mp.workdps(precision):
        return -mpmath.log(mpmath.mpf(total)) / mpmath.mpf(n) ** d


def _count_at(args) -> int:
    s, n, a, cap = args
    return count(box_boundary_condition(s, n, a), cap=cap)


def sigma_n(s: Slope, n: int, cap: Optional[int] = None, workers: int = 1,
            precision: Optional[int] = None) -> Tuple[mpmath.mpf, Fraction, int]:
    """(sigma_n, offset attaining the infimum, infimum count); ties go to the smallest offset."""
    offsets = breakpoints(s, n)
    jobs = [(s, n, a, cap) for a in offsets]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_count_at, jobs))
    else:
        counts = [_count_at(job) for job in jobs]
    best = min(range(len(offsets)), key=lambda k: (counts[k], offsets[k]))
    total = counts[best]
    logger.info(f"n={n}: {len(offsets)} offsets, inf count {total} at a={offsets[best]}")
    return log_sigma(total, n, s.d, precision), offsets[best], total


def sigma_zero_offset(s: Slope, n: int, cap: Optional[int] = None,
                      precision: Optional[int] = None) -> Tuple[mpmath.mpf, int]:
    _require_slope(s)
    total = count(box_boundary_condition(s, n, 0), cap=cap)
    return log_sigma(total, n, s.d, precision), total


def estimate_tension(s: Slope, n_values: Sequence[int], cap: Optional[int] = None, workers: int = 1,
                     precision: Optional[int] = None) -> TensionEstimate:
    logger.info("----- surface tension -----")
    timer = Timer()
    entries = []
    for n in n_values:
        value, offset, total = sigma_n(s, n, cap=cap, workers=workers, precision=precision)
        assert -mpmath.log(2) <= value <= 0, f"sigma_{n} = {value} left [-log 2, 0]"
        entries.append(TensionEntry(n, total, value, offset))
    logger.info(f"Surface tension completed in {timer.get_elapsed_time():.2f} seconds")
    return TensionEstimate(s, tuple(entries))


@dataclass(frozen=True)
class SupermultiplicativeReport:
    n: int
    k: int
    d: int
    small: int
    large: int

    @property
    def holds(self) -> bool:
        return self.large >= self.small ** (self.k ** self.d)


def check_supermultiplicative(s: Slope, n: int, k: int, cap: Optional[int] = None,
                              workers: int = 1) -> SupermultiplicativeReport:
    """inf count on B_{kn} against (inf count on B_n)^(k^d), as exact integers."""
    if k < 1:
        raise ValidationError(f"Invalid multiple k={k}. Must be >= 1")
    _, _, small = sigma_n(s, n, cap=cap, workers=workers)
    _, _, large = sigma_n(s, k * n, cap=cap, workers=workers)
    return SupermultiplicativeReport(n, k, s.d, small, large)


@dataclass(frozen=True)
class MidpointReport:
    n: int
    sigma_first: mpmath.mpf
    sigma_second: mpmath.mpf
    sigma_mid: mpmath.mpf

    @property
    def gap(self) -> mpmath.mpf:
        """Positive when the midpoint sits below the chord."""
        return (self.sigma_first + self.sigma_second) / 2 - self.sigma_mid


def midpoint_convexity_probe(s1: Slope, s2: Slope, n: int, cap: Optional[int] = None,
                             workers: int = 1) -> MidpointReport:
    if s1.d != s2.d:
        raise ValidationError("Slopes live in different dimensions")
    first, _, _ = sigma_n(s1, n, cap=cap, workers=workers)
    second, _, _ = sigma_n(s2, n, cap=cap, workers=workers)
    mid, _, _ = sigma_n(s1.midpoint(s2), n, cap=cap, workers=workers)
    return MidpointReport(n, first, second, mid)
