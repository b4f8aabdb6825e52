"""JSON codecs for lattice objects. Rationals travel as "p/q" strings."""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Dict, List

from .errors import ValidationError
from .height import (ConeBackground, FloorBackground, HeightField, JoinBackground, Slope, Tiling, check_anchors,
                     require_height_function)
from .lattice import BOX_KINDS, Edge, Lattice, Region, Vertex
from .regions import FixedBoundary, PeriodicBoundary, TorusState, WeightFunction


class _Reader:
    """Walks a decoded JSON value and reports failures by path."""

    def __init__(self, value: Any, path: str = ""):
        self.value = value
        self.path = path

    def fail(self, message: str):
        raise ValidationError(f"{self.path or '<root>'}: {message}", witness=self.path)

    def key(self, name: str, required: bool = True) -> _Reader:
        if not isinstance(self.value, dict):
            self.fail("expected an object")
        if name not in self.value:
            if required:
                self.fail(f"missing field '{name}'")
            return _Reader(None, self._join(name))
        return _Reader(self.value[name], self._join(name))

    def has(self, name: str) -> bool:
        return isinstance(self.value, dict) and name in self.value

    def items(self) -> List[_Reader]:
        if not isinstance(self.value, list):
            self.fail("expected an array")
        return [_Reader(v, f"{self.path}[{k}]") for k, v in enumerate(self.value)]

    def integer(self) -> int:
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            self.fail(f"expected an integer, got {self.value!r}")
        return self.value

    def rational(self) -> Fraction:
        if isinstance(self.value, bool) or isinstance(self.value, float):
            self.fail(f"expected an exact rational such as \"1/2\", got {self.value!r}")
        try:
            return Fraction(self.value)
        except (TypeError, ValueError, ZeroDivisionError):
            self.fail(f"expected a rational, got {self.value!r}")

    def string(self) -> str:
        if not isinstance(self.value, str):
            self.fail(f"expected a string, got {self.value!r}")
        return self.value

    def _join(self, name: str) -> str:
        return f"{self.path}.{name}" if self.path else name


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}",
                              witness=(exc.lineno, exc.colno)) from exc


def load_file(path: str) -> Any:
    try:
        with open(path, "r") as f:
            text = f.read()
    except OSError as exc:
        raise ValidationError(f"Cannot read {path}: {exc.strerror}", witness=path) from exc
    return loads(text)


def dumps(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def parse_rational(text: str, name: str = "value") -> Fraction:
    return _Reader(text, name).rational()


######### vertices and edges
def vertex_to_json(x: Vertex) -> List[int]:
    return list(x)


def edge_to_json(e: Edge) -> Dict[str, Any]:
    return {"base": vertex_to_json(e.base), "dir": e.dir}


def _vertex(r: _Reader, lattice: Lattice) -> Vertex:
    coords = [item.integer() for item in r.items()]
    if len(coords) != lattice.d + 1:
        r.fail(f"expected {lattice.d + 1} coordinates, got {len(coords)}")
    return lattice.canonicalize(coords)


def _edge(r: _Reader, lattice: Lattice) -> Edge:
    base = _vertex(r.key("base"), lattice)
    direction = r.key("dir").integer()
    if not 1 <= direction <= lattice.d + 1:
        r.key("dir").fail(f"direction must lie in 1..{lattice.d + 1}")
    return Edge(base, direction)


def _dimension(r: _Reader) -> Lattice:
    d = r.key("d").integer()
    if d < 2:
        r.key("d").fail(f"dimension must be >= 2, got {d}")
    return Lattice.of(d)


def vertex_from_json(data, d: int) -> Vertex:
    return _vertex(_Reader(data), Lattice.of(d))


def edge_from_json(data, d: int) -> Edge:
    return _edge(_Reader(data), Lattice.of(d))


######### slopes and height fields
def slope_to_json(s: Slope) -> List[str]:
    return [str(v) for v in s.values]


def _slope(r: _Reader) -> Slope:
    values = [item.rational() for item in r.items()]
    if len(values) < 3:
        r.fail(f"a slope needs at least 3 values, got {len(values)}")
    return Slope(tuple(values))


def _background_to_json(background) -> Dict[str, Any]:
    if isinstance(background, FloorBackground):
        return {"slope": slope_to_json(background.slope), "offset": str(background.offset)}
    if isinstance(background, ConeBackground):
        return {"anchors": [[vertex_to_json(y), v] for y, v in background.anchors]}
    if isinstance(background, JoinBackground):
        return {"join": background.op, "parts": [_background_to_json(p) for p in background.parts]}
    raise ValidationError(f"Unknown background {background!r}")


def _background(r: _Reader, lattice: Lattice):
    if r.has("anchors"):
        anchors = []
        for item in r.key("anchors").items():
            pair = item.items()
            if len(pair) != 2:
                item.fail("expected [vertex, value]")
            anchors.append((_vertex(pair[0], lattice), pair[1].integer()))
        if not anchors:
            r.key("anchors").fail("needs at least one anchor")
        try:
            check_anchors(lattice, sorted(anchors))
        except ValidationError as exc:
            r.key("anchors").fail(str(exc))
        return ConeBackground(tuple(sorted(anchors)))
    if r.has("join"):
        op = r.key("join").string()
        if op not in ("max", "min"):
            r.key("join").fail(f"expected 'max' or 'min', got {op!r}")
        return JoinBackground(tuple(_background(p, lattice) for p in r.key("parts").items()), op)
    slope = _slope(r.key("slope"))
    if slope.d != lattice.d:
        r.key("slope").fail(f"slope has d={slope.d}, field has d={lattice.d}")
    if not slope.in_S():
        r.key("slope").fail(f"slope {slope.to_str()} is not in S")
    offset = r.key("offset").rational() if r.has("offset") else Fraction(0)
    return FloorBackground(slope, offset)


def field_to_json(f: HeightField) -> Dict[str, Any]:
    data = {"d": f.d}
    data.update(_background_to_json(f.background))
    data["overrides"] = [[vertex_to_json(x), v] for x, v in sorted(f.overrides.items())]
    return data


def _field(r: _Reader) -> HeightField:
    lattice = _dimension(r)
    background = _background(r, lattice)
    overrides = {}
    if r.has("overrides"):
        for item in r.key("overrides").items():
            pair = item.items()
            if len(pair) != 2:
                item.fail("expected [vertex, value]")
            overrides[_vertex(pair[0], lattice)] = pair[1].integer()
    f = HeightField(lattice, background, overrides)
    try:
        require_height_function(f)
    except ValidationError as exc:
        r.key("overrides").fail(str(exc))
    return f


def field_from_json(data) -> HeightField:
    return _field(_Reader(data))


def tiling_to_json(T: Tiling) -> Dict[str, Any]:
    return {"d": T.d, "edges": [edge_to_json(e) for e in sorted(T.edges)],
            "vertices": [vertex_to_json(x) for x in sorted(T.vertices)]}


def tiling_from_json(data) -> Tiling:
    r = _Reader(data)
    lattice = _dimension(r)
    edges = [_edge(item, lattice) for item in r.key("edges").items()]
    if r.has("vertices"):
        vertices = [_vertex(item, lattice) for item in r.key("vertices").items()]
    else:
        vertices = [v for e in edges for v in lattice.endpoints(e)]
    return Tiling.from_window(lattice, edges, vertices)


######### boundary conditions and weights
def region_to_json(R: Region) -> Dict[str, Any]:
    if R.kind in BOX_KINDS:
        return {"kind": R.kind, "n": R.n}
    return {"kind": "generic", "vertices": [vertex_to_json(x) for x in sorted(R.vertices)]}


def _region(r: _Reader, lattice: Lattice) -> Region:
    kind = r.key("kind").string() if r.has("kind") else "generic"
    if kind in BOX_KINDS:
        return lattice.make_box(kind, r.key("n").integer())
    if kind != "generic":
        r.key("kind").fail(f"expected one of {BOX_KINDS + ('generic',)}, got {kind!r}")
    return Region(frozenset(_vertex(item, lattice) for item in r.key("vertices").items()))


def boundary_to_json(bc: FixedBoundary) -> Dict[str, Any]:
    return {"d": bc.lattice.d, "region": region_to_json(bc.region), "reference": field_to_json(bc.reference)}


def boundary_from_json(data) -> FixedBoundary:
    r = _Reader(data)
    lattice = _dimension(r)
    region = _region(r.key("region"), lattice)
    reference = _field(r.key("reference"))
    if reference.lattice != lattice:
        r.key("reference").key("d").fail(f"reference has d={reference.d}, boundary has d={lattice.d}")
    return FixedBoundary(region, reference)


def weights_to_json(w: WeightFunction) -> Dict[str, Any]:
    return {"default": str(w.default), "weights": [[edge_to_json(e), str(v)] for e, v in sorted(w.weights.items())]}


def weights_from_json(data, d: int) -> WeightFunction:
    r = _Reader(data)
    lattice = Lattice.of(d)
    default = r.key("default").rational() if r.has("default") else Fraction(1)
    weights = {}
    if r.has("weights"):
        for item in r.key("weights").items():
            pair = item.items()
            if len(pair) != 2:
                item.fail("expected [edge, weight]")
            value = pair[1].rational()
            if value <= 0:
                pair[1].fail(f"weights must be positive, got {value}")
            weights[_edge(pair[0], lattice)] = value
    if default <= 0:
        r.key("default").fail(f"weights must be positive, got {default}")
    return WeightFunction(weights, default)


def periodic_to_json(pbc: PeriodicBoundary) -> Dict[str, Any]:
    return {"d": pbc.slope.d, "n": pbc.n, "slope": slope_to_json(pbc.slope)}


def periodic_from_json(data) -> PeriodicBoundary:
    r = _Reader(data)
    _dimension(r)
    return PeriodicBoundary(r.key("n").integer(), _slope(r.key("slope")))


def torus_to_json(state: TorusState) -> Dict[str, Any]:
    data = periodic_to_json(state.pbc)
    data["values"] = [[vertex_to_json(x), v] for x, v in sorted(state.as_dict().items())]
    return data
