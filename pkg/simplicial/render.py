"""Planar drawings of d=2 height functions as lozenge tilings."""
from __future__ import annotations

import logging
import math
from typing import Dict, Iterable, List, Optional

from svglib import SVG, Point, SVGPolygon

from .errors import ValidationError
from .height import HeightField, Tiling, tiling_of
from .lattice import Edge, Lattice, Vertex

logger = logging.getLogger("simplicial_log")

# one fill class per tile orientation, keyed by the direction of the tiled edge
LOZENGE_COLORS: Dict[int, str] = {1: "#477984", 2: "#eeaa4d", 3: "#c03c39"}
LOZENGE_CLASSES: Dict[int, str] = {1: "lozenge-g1", 2: "lozenge-g2", 3: "lozenge-g3"}


def embed(x: Vertex) -> Point:
    """Planar position of a d=2 vertex; g_1, g_2, g_3 point 120 degrees apart. y grows downward in SVG."""
    a, b = x[0], x[1]
    return Point(float(a - b / 2), float(-b * math.sqrt(3) / 2))


def lozenge(lattice: Lattice, e: Edge) -> List[Vertex]:
    """Corners of the two triangles sharing e, in cyclic order."""
    x, y = lattice.endpoints(e)
    thirds = []
    for s in lattice.loops_through(e):
        thirds.extend(v for v in lattice.loop_vertices(s)[:-1] if v not in (x, y))
    return [x, thirds[0], y, thirds[1]]


def lozenge_edges(T: Tiling) -> List[Edge]:
    """Tiled edges whose two triangles both lie in the window."""
    lattice = T.lattice
    return sorted(e for e in T.edges if all(s in T.loops for s in lattice.loops_through(e)))


def render_tiling(T: Tiling, margin: float = 0.5) -> SVG:
    if T.d != 2:
        raise ValidationError(f"Rendering is only defined for d=2, got d={T.d}")
    lattice = T.lattice
    polygons = []
    for e in lozenge_edges(T):
        corners = [embed(v) for v in lozenge(lattice, e)]
        polygons.append(SVGPolygon(corners, color=LOZENGE_COLORS[e.dir], fill=True, stroke="#222222",
                                   css_class=LOZENGE_CLASSES[e.dir]))
    logger.info(f"Rendered {len(polygons)} lozenges")
    svg = SVG(polygons)
    svg.viewbox = svg.viewbox.pad(margin)
    return svg


def render_field(f: HeightField, window: Optional[Iterable[Vertex]] = None, margin: float = 0.5) -> SVG:
    if f.d != 2:
        raise ValidationError(f"Rendering is only defined for d=2, got d={f.d}")
    return render_tiling(tiling_of(f, window), margin=margin)
