from .geom import Bbox, Point, Size
from .svg import SVG
from .svg_primitive import SVGPolygon, SVGPrimitive
