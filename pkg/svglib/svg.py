from __future__ import annotations
from .geom import Bbox, Point, Size
from xml.dom import expatbuilder
from typing import List, Optional

from .svg_primitive import SVGPolygon, SVGPrimitive


class SVG:
    def __init__(self, primitives: List[SVGPrimitive], viewbox: Optional[Bbox] = None, pixels_per_unit: float = 40.):
        if viewbox is None:
            viewbox = Bbox.from_points([p for prim in primitives for p in prim.points]) or Bbox(Point(0.), Point(1.))

        self.primitives = primitives
        self.viewbox = viewbox
        self.pixels_per_unit = pixels_per_unit

    def __len__(self):
        return len(self.primitives)

    def __getitem__(self, idx):
        return self.primitives[idx]

    @staticmethod
    def load_svg(file_path):
        with open(file_path, "r") as f:
            return SVG.from_str(f.read())

    @staticmethod
    def from_str(svg_str: str):
        svg_dom = expatbuilder.parseString(svg_str, False)
        svg_root = svg_dom.getElementsByTagName('svg')[0]

        x, y, w, h = map(float, svg_root.getAttribute("viewBox").split(" "))
        view_box = Bbox(Point(x, y), Point(x + w, y + h))

        primitives = [SVGPolygon.from_xml(p) for p in svg_dom.getElementsByTagName("polygon")]
        return SVG(primitives, view_box)

    def to_str(self, coordinate_precision=3) -> str:
        newline = "\n"
        size = Size(*(self.viewbox.wh * self.pixels_per_unit).totuple())
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{self.viewbox.to_str(coordinate_precision)}" '
            f'height="{size.y:.0f}px" width="{size.x:.0f}px">{newline}'
            f'{newline.join(p.to_str(coordinate_precision=coordinate_precision) for p in self.primitives)}'
            f'{newline}</svg>')

    def save_svg(self, file_path, coordinate_precision=3):
        with open(file_path, "w") as f:
            f.write(self.to_str(coordinate_precision=coordinate_precision))

    def save_png(self, file_path, background_color="white"):
        import cairosvg
        cairosvg.svg2png(bytestring=self.to_str().encode("utf-8"), write_to=file_path, background_color=background_color)
