from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import ValidationError
from .lattice import Edge, Lattice, UnrootedLoop, Vertex


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise ValidationError(f"Refusing float {value}; pass an exact rational such as '1/2'")
    return Fraction(value)


######### Slope
@dataclass(frozen=True)
class Slope:
    """Linear functional on X^d given by its values s(g_1), ..., s(g_{d+1})."""
    values: Tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(as_fraction(v) for v in self.values))
        if len(self.values) < 3:
            raise ValidationError(f"A slope needs d+1 >= 3 values, got {len(self.values)}")

    @property
    def d(self) -> int:
        return len(self.values) - 1

    @classmethod
    def zero(cls, d: int) -> Slope:
        return cls((Fraction(0),) * (d + 1))

    @classmethod
    def extreme(cls, d: int, i: int) -> Slope:
        """The extreme point s^i of S: -d on g_i and 1 elsewhere."""
        return cls(tuple(Fraction(-d if j == i else 1) for j in range(1, d + 2)))

    @classmethod
    def parse(cls, text: str) -> Slope:
        try:
            return cls(tuple(Fraction(part.strip()) for part in text.split(",")))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"Invalid slope '{text}': {exc}") from exc

    def is_linear(self) -> bool:
        return sum(self.values) == 0

    def in_S(self) -> bool:
        return self.is_linear() and max(self.values) <= 1

    def in_S_n(self, n: int) -> bool:
        return self.in_S() and all((v * n).denominator == 1 for v in self.values)

    def evaluate(self, x: Vertex) -> Fraction:
        return sum((c * v for c, v in zip(x, self.values)), Fraction(0))

    def midpoint(self, other: Slope) -> Slope:
        return Slope(tuple((a + b) / 2 for a, b in zip(self.values, other.values)))

    def to_str(self) -> str:
        return ",".join(str(v) for v in self.values)


######### Backgrounds
@dataclass(frozen=True)
class FloorBackground:
    """The largest height function below s + a."""
    slope: Slope
    offset: Fraction

    def __post_init__(self):
        offset = as_fraction(self.offset)
        q = math.lcm(*[v.denominator for v in self.slope.values])
        # jumps of a -> floor(s + a) only happen on (1/q)Z
        object.__setattr__(self, "offset", Fraction(math.floor(offset * q), q))

    def value(self, lattice: Lattice, x: Vertex) -> int:
        t = math.floor(self.slope.evaluate(x) + self.offset)
        return t - (t - lattice.parity(x)) % lattice.span

    def shifted(self, k: int) -> FloorBackground:
        return FloorBackground(self.slope, self.offset + k)


@dataclass(frozen=True)
class ConeBackground:
    """min over anchors (y, v) of v + ||x - y||_+, the largest extension of the anchors."""
    anchors: Tuple[Tuple[Vertex, int], ...]
    _cache: Dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def value(self, lattice: Lattice, x: Vertex) -> int:
        if x not in self._cache:
            self._cache[x] = min(v + lattice.plus_norm(lattice.sub(x, y)) for y, v in self.anchors)
        return self._cache[x]

    def shifted(self, k: int) -> ConeBackground:
        return ConeBackground(tuple((y, v + k) for y, v in self.anchors))


@dataclass(frozen=True)
class JoinBackground:
    """Pointwise max (op='max') or min (op='min') of backgrounds."""
    parts: Tuple
    op: str

    def value(self, lattice: Lattice, x: Vertex) -> int:
        values = [p.value(lattice, x) for p in self.parts]
        return max(values) if self.op == "max" else min(values)

    def shifted(self, k: int) -> JoinBackground:
        return JoinBackground(tuple(p.shifted(k) for p in self.parts), self.op)


######### HeightField
class HeightField:
    """A height function: an implicit background plus finitely many overrides."""

    __slots__ = ("lattice", "background", "_overrides", "_hash")

    def __init__(self, lattice: Lattice, background, overrides: Optional[Mapping[Vertex, int]] = None):
        self.lattice = lattice
        self.background = background
        kept = {}
        for x, v in (overrides or {}).items():
            if v != background.value(lattice, x):
                kept[x] = int(v)
        self._overrides = MappingProxyType(kept)
        self._hash = None

    @property
    def d(self) -> int:
        return self.lattice.d

    @property
    def overrides(self) -> Mapping[Vertex, int]:
        return self._overrides

    @property
    def window(self) -> FrozenSet[Vertex]:
        return frozenset(self._overrides)

    def __call__(self, x: Vertex) -> int:
        v = self._overrides.get(x)
        return v if v is not None else self.background.value(self.lattice, x)

    def values_on(self, vertices: Iterable[Vertex]) -> Dict[Vertex, int]:
        return {x: self(x) for x in vertices}

    def with_values(self, updates: Mapping[Vertex, int]) -> HeightField:
        merged = dict(self._overrides)
        merged.update(updates)
        return HeightField(self.lattice, self.background, merged)

    def shift(self, k: int) -> HeightField:
        return HeightField(self.lattice, self.background.shifted(k), {x: v + k for x, v in self._overrides.items()})

    def __eq__(self, other):
        if not isinstance(other, HeightField):
            return NotImplemented
        return (self.lattice == other.lattice and self.background == other.background
                and dict(self._overrides) == dict(other._overrides))

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.lattice, self.background, frozenset(self._overrides.items())))
        return self._hash

    def __repr__(self):
        return f"HeightField(d={self.d}, background={self.background!r}, overrides={dict(sorted(self._overrides.items()))})"

    def __getstate__(self):
        return (self.lattice, self.background, dict(self._overrides))

    def __setstate__(self, state):
        lattice, background, overrides = state
        self.lattice = lattice
        self.background = background
        self._overrides = MappingProxyType(overrides)
        self._hash = None


@dataclass(frozen=True)
class HeightDiagnostics:
    parity_violations: Tuple[Vertex, ...] = ()
    edge_violations: Tuple[Tuple[Edge, int], ...] = ()

    @property
    def valid(self) -> bool:
        return not self.parity_violations and not self.edge_violations

    def __bool__(self):
        return self.valid


def gradient(f: HeightField, e: Edge) -> int:
    x, y = f.lattice.endpoints(e)
    return f(y) - f(x)


def check_height_function(f: HeightField, window: Optional[Iterable[Vertex]] = None) -> HeightDiagnostics:
    lattice = f.lattice
    verts = set(f.window if window is None else window)
    parity = tuple(sorted(x for x in verts if (f(x) - lattice.parity(x)) % lattice.span != 0))
    bad_edges = []
    for e in sorted(lattice.incident_edges(verts)):
        grad = gradient(f, e)
        if grad not in (1, -lattice.d):
            bad_edges.append((e, grad))
    return HeightDiagnostics(parity, tuple(bad_edges))


def is_height_function(f: HeightField, window: Optional[Iterable[Vertex]] = None) -> bool:
    return check_height_function(f, window).valid


def require_height_function(f: HeightField, window: Optional[Iterable[Vertex]] = None, name: str = "Field"):
    diagnostics = check_height_function(f, window)
    if diagnostics.parity_violations:
        x = diagnostics.parity_violations[0]
        raise ValidationError(f"{name} has the wrong parity at {x}: {f(x)}", witness=x)
    if diagnostics.edge_violations:
        e, grad = diagnostics.edge_violations[0]
        raise ValidationError(f"{name} has gradient {grad} on {e}, expected 1 or -{f.d}", witness=e)
    return f


def check_anchors(lattice: Lattice, items: Sequence[Tuple[Vertex, int]]):
    """Raise unless the anchors extend to a height function: right parity, Lipschitz in ||.||_+."""
    for x, v in items:
        if (v - lattice.parity(x)) % lattice.span != 0:
            raise ValidationError(f"Value {v} at {x} has the wrong parity", witness=(x, x))
    for x, vx in items:
        for y, vy in items:
            if vy - vx > lattice.plus_norm(lattice.sub(y, x)):
                raise ValidationError(f"Partial function is not Lipschitz between {x} and {y}", witness=(x, y))


def lipschitz_check(f: HeightField, window: Iterable[Vertex]) -> Optional[Tuple[Vertex, Vertex]]:
    """First pair (x, y) with f(y) - f(x) > ||y - x||_+, or None."""
    lattice = f.lattice
    verts = sorted(window)
    values = f.values_on(verts)
    for x in verts:
        for y in verts:
            if values[y] - values[x] > lattice.plus_norm(lattice.sub(y, x)):
                return x, y
    return None


def floor_field(s: Slope, a=0, window: Optional[Iterable[Vertex]] = None) -> HeightField:
    if not s.in_S():
        raise ValidationError(f"Slope {s.to_str()} is not in S (sum zero, max <= 1)", witness=s)
    lattice = Lattice.of(s.d)
    f = HeightField(lattice, FloorBackground(s, as_fraction(a)))
    if window is not None:
        require_height_function(f, window)
    return f


def kirszbraun_extend(partial: Mapping[Vertex, int], window: Optional[Iterable[Vertex]] = None,
                      d: Optional[int] = None) -> HeightField:
    """Largest height function agreeing with `partial` on its domain."""
    if not partial:
        raise ValidationError("Cannot extend an empty partial function")
    lattice = Lattice.of(d if d is not None else len(next(iter(partial))) - 1)
    items = sorted(partial.items())
    check_anchors(lattice, items)
    f = HeightField(lattice, ConeBackground(tuple(items)))
    if window is not None:
        require_height_function(f, window)
    return f


def vee(f1: HeightField, f2: HeightField) -> HeightField:
    return _join(f1, f2, "max")


def wedge(f1: HeightField, f2: HeightField) -> HeightField:
    return _join(f1, f2, "min")


def _join(f1: HeightField, f2: HeightField, op: str) -> HeightField:
    if f1.lattice != f2.lattice:
        raise ValidationError("Height functions live on different lattices")
    pick = max if op == "max" else min
    b1, b2 = f1.background, f2.background
    if b1 == b2:
        background = b1
    elif isinstance(b1, FloorBackground) and isinstance(b2, FloorBackground) and b1.slope == b2.slope:
        background = FloorBackground(b1.slope, pick(b1.offset, b2.offset))
    else:
        background = JoinBackground((b1, b2), op)
    support = f1.window | f2.window
    return HeightField(f1.lattice, background, {x: pick(f1(x), f2(x)) for x in support})


######### local moves
def is_local_min(f: HeightField, x: Vertex) -> bool:
    return all(f(y) > f(x) for y in f.lattice.neighbors(x))


def is_local_max(f: HeightField, x: Vertex) -> bool:
    return all(f(y) < f(x) for y in f.lattice.neighbors(x))


def local_move(f: HeightField, x: Vertex, sign: int) -> HeightField:
    if sign not in (1, -1):
        raise ValidationError(f"Invalid move sign: {sign}. Must be +1 or -1")
    lattice = f.lattice
    new = f(x) + sign * lattice.span
    for i in range(1, lattice.d + 2):
        up, down = lattice.step(x, i), lattice.step(x, i, -1)
        if f(up) - new not in (1, -lattice.d):
            raise ValidationError(f"Move {sign:+d} at {x} blocked by neighbor {up}", witness=up)
        if new - f(down) not in (1, -lattice.d):
            raise ValidationError(f"Move {sign:+d} at {x} blocked by neighbor {down}", witness=down)
    return f.with_values({x: new})


def apply_moves(f: HeightField, moves: Iterable[Tuple[Vertex, int]]) -> HeightField:
    for x, sign in moves:
        f = local_move(f, x, sign)
    return f


def move_path(f: HeightField, g: HeightField) -> List[Tuple[Vertex, int]]:
    """Local moves taking f to g, going down to f ^ g first and then up to g."""
    if f.lattice != g.lattice or f.background != g.background:
        raise ValidationError("move_path needs two fields that agree off a finite set")
    support = sorted(f.window | g.window)
    span = f.lattice.span
    current = dict(f.values_on(support))
    low = {x: min(f(x), g(x)) for x in support}
    moves = []

    while True:
        above = [x for x in support if current[x] > low[x]]
        if not above:
            break
        x = max(above, key=lambda v: (current[v], v))
        current[x] -= span
        moves.append((x, -1))

    target = g.values_on(support)
    while True:
        below = [x for x in support if current[x] < target[x]]
        if not below:
            break
        x = min(below, key=lambda v: (current[v], v))
        current[x] += span
        moves.append((x, 1))
    return moves


######### stepped surfaces
def v_set(f: HeightField, window: Iterable[Vertex]) -> FrozenSet[Tuple[int, ...]]:
    span = f.lattice.span
    points = set()
    for x in window:
        t, r = divmod(f(x) - sum(x), span)
        if r != 0:
            raise ValidationError(f"Value {f(x)} at {x} has the wrong parity", witness=x)
        points.add(tuple(c + t for c in x))
    return frozenset(points)


def monotone_view(f: HeightField, window: Iterable[Vertex]) -> Dict[Tuple[int, ...], int]:
    """First d coordinates of each point of V(f) mapped to its last coordinate."""
    return {p[:-1]: p[-1] for p in v_set(f, window)}


######### tilings
@dataclass(frozen=True)
class Tiling:
    d: int
    edges: FrozenSet[Edge]
    vertices: FrozenSet[Vertex]
    loops: FrozenSet[UnrootedLoop]

    @property
    def lattice(self) -> Lattice:
        return Lattice.of(self.d)

    @classmethod
    def from_window(cls, lattice: Lattice, edges: Iterable[Edge], vertices: Iterable[Vertex]) -> Tiling:
        vertices = frozenset(vertices)
        return cls(lattice.d, frozenset(edges), vertices, lattice.loops_within(vertices))

    def covered_edges(self) -> FrozenSet[Edge]:
        lattice = self.lattice
        return frozenset(e for s in self.loops for e in lattice.edges_of_loop(s))

    def alpha(self, e: Edge) -> int:
        return -self.d if e in self.edges else 1


def default_window(f: HeightField, pad: int = 1) -> FrozenSet[Vertex]:
    return f.lattice.box_window(f.window | {f.lattice.origin}, pad=pad)


def tiling_of(f: HeightField, window: Optional[Iterable[Vertex]] = None) -> Tiling:
    lattice = f.lattice
    verts = frozenset(window) if window is not None else default_window(f)
    diagnostics = check_height_function(f, f.window)
    if not diagnostics.valid:
        raise ValidationError("tiling_of needs a valid height function", witness=diagnostics)
    tiling = Tiling.from_window(lattice, (), verts)
    edges = frozenset(e for e in tiling.covered_edges() if gradient(f, e) == -lattice.d)
    return Tiling(lattice.d, edges, verts, tiling.loops)


def _potential(T: Tiling, a: int) -> Dict[Vertex, int]:
    lattice = T.lattice
    adjacency: Dict[Vertex, List[Tuple[Vertex, int]]] = {}
    for e in T.covered_edges():
        x, y = lattice.endpoints(e)
        w = T.alpha(e)
        adjacency.setdefault(x, []).append((y, w))
        adjacency.setdefault(y, []).append((x, -w))
    values = {lattice.origin: a}
    queue = deque([lattice.origin])
    while queue:
        x = queue.popleft()
        for y, w in adjacency.get(x, ()):
            if y not in values:
                values[y] = values[x] + w
                queue.append(y)
    return values


def integrate_tiling(T: Tiling, a: int, target: Vertex) -> int:
    lattice = T.lattice
    if a % lattice.span != 0:
        raise ValidationError(f"Start value {a} must be a multiple of {lattice.span}")
    values = _potential(T, a)
    if target not in values:
        raise ValidationError(f"Target {target} is not reachable inside the tiling window", witness=target)
    return values[target]


def path_integral(T: Tiling, a: int, path: Sequence[Vertex]) -> int:
    lattice = T.lattice
    covered = T.covered_edges()
    value = a
    for x, y in zip(path, path[1:]):
        e = lattice.edge_between(x, y)
        if e not in covered:
            raise ValidationError(f"Path step {x} -> {y} leaves the tiling window", witness=e)
        value += T.alpha(e) if e.base == x else -T.alpha(e)
    return value


def phi(f: HeightField, window: Optional[Iterable[Vertex]] = None) -> Tuple[int, Tiling]:
    return f(f.lattice.origin), tiling_of(f, window)


def phi_inv(a: int, T: Tiling, background=None) -> HeightField:
    """Integrate alpha_T from a at the origin. Without a background the result is the largest extension."""
    lattice = T.lattice
    if a % lattice.span != 0:
        raise ValidationError(f"Start value {a} must be a multiple of {lattice.span}")
    values = _potential(T, a)
    if background is None:
        return kirszbraun_extend(values, d=lattice.d)
    return HeightField(lattice, background, values)
