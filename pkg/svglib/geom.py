from __future__ import annotations
import numpy as np
from typing import List, Optional, Union
Num = Union[int, float]
float_type = (int, float, np.floating)


######### Point
class Point:
    def __init__(self, x=None, y=None):
        if isinstance(x, np.ndarray):
            self.pos = x.astype(np.float64)
        elif x is None and y is None:
            self.pos = np.array([0., 0.])
        elif (isinstance(x, float_type) or x is None) and (isinstance(y, float_type) or y is None):
            if x is None:
                x = y
            if y is None:
                y = x
            self.pos = np.array([x, y], dtype=np.float64)
        else:
            raise ValueError(f"Cannot build a Point from ({x!r}, {y!r})")

    @property
    def x(self):
        return float(self.pos[0])

    @property
    def y(self):
        return float(self.pos[1])

    def __add__(self, other):
        return Point(self.pos + other.pos)

    def __sub__(self, other):
        return Point(self.pos - other.pos)

    def __mul__(self, lmbda):
        if isinstance(lmbda, Point):
            return Point(self.pos * lmbda.pos)

        assert isinstance(lmbda, float_type)
        return Point(lmbda * self.pos)

    def __eq__(self, other):
        return isinstance(other, Point) and np.allclose(self.pos, other.pos)

    def __repr__(self):
        return f"P({self.x}, {self.y})"

    def to_str(self, coordinate_precision=3):
        return f"{self.x:.{coordinate_precision}f},{self.y:.{coordinate_precision}f}"

    def totuple(self):
        return tuple(self.pos.tolist())

    def pointwise_min(self, other: Point):
        return Point(np.minimum(self.pos, other.pos))

    def pointwise_max(self, other: Point):
        return Point(np.maximum(self.pos, other.pos))


class Size(Point):
    def __repr__(self):
        return f"Size({self.x}, {self.y})"


######### Bbox
class Bbox:
    def __init__(self, xy: Optional[Point] = None, xy2: Optional[Point] = None):
        self.xy = xy if xy is not None else Point(0.)
        xy2 = xy2 if xy2 is not None else self.xy
        wh = xy2 - self.xy
        self.wh = Size(wh.x, wh.y)

    @property
    def xy2(self):
        return self.xy + self.wh

    def __repr__(self):
        return f"Bbox({self.xy.to_str()} {self.xy2.to_str()})"

    def to_str(self, coordinate_precision=3):
        p = coordinate_precision
        return f"{self.xy.x:.{p}f} {self.xy.y:.{p}f} {self.wh.x:.{p}f} {self.wh.y:.{p}f}"

    def pad(self, margin: Num):
        m = Point(float(margin))
        return Bbox(self.xy - m, self.xy2 + m)

    @staticmethod
    def from_points(points: List[Point]):
        if not points:
            return None
        xy = xy2 = points[0]
        for p in points[1:]:
            xy = xy.pointwise_min(p)
            xy2 = xy2.pointwise_max(p)
        return Bbox(xy, xy2)
