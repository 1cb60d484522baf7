"""Geometric primitives describing obstacle supports and partition cells.

Obstacles live in the strip R x (0,1).  A region is a union of primitives
(rectangles, ellipses, discs) with a vectorized inside test; it is rasterized
onto quadrature points at assembly time, so no CAD machinery is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Rectangle:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("rectangle needs x0 < x1 and y0 < y1")

    def contains(self, x, y):
        return (x >= self.x0) & (x <= self.x1) & (y >= self.y0) & (y <= self.y1)

    @property
    def bounding_box(self):
        return self.x0, self.x1, self.y0, self.y1

    @property
    def smallest_dimension(self) -> float:
        return min(self.x1 - self.x0, self.y1 - self.y0)

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    rx: float
    ry: float

    def __post_init__(self):
        if self.rx <= 0 or self.ry <= 0:
            raise ValueError("ellipse needs positive semi-axes")

    def contains(self, x, y):
        return ((x - self.cx) / self.rx) ** 2 + ((y - self.cy) / self.ry) ** 2 <= 1.0

    @property
    def bounding_box(self):
        return self.cx - self.rx, self.cx + self.rx, self.cy - self.ry, self.cy + self.ry

    @property
    def smallest_dimension(self) -> float:
        return 2.0 * min(self.rx, self.ry)

    @property
    def area(self) -> float:
        return np.pi * self.rx * self.ry


def Disc(cx: float, cy: float, r: float) -> Ellipse:
    """Disc of radius r, as the degenerate ellipse."""
    return Ellipse(cx, cy, r, r)


Primitive = Rectangle | Ellipse


class ObstacleRegion:
    """Union of primitives; the support of the material perturbation."""

    def __init__(self, primitives):
        primitives = list(primitives)
        if not primitives:
            raise ValueError("obstacle region needs at least one primitive")
        self.primitives = primitives

    def contains(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for p in self.primitives:
            inside |= p.contains(x, y)
        return inside

    @property
    def bounding_box(self):
        boxes = [p.bounding_box for p in self.primitives]
        return (
            min(b[0] for b in boxes),
            max(b[1] for b in boxes),
            min(b[2] for b in boxes),
            max(b[3] for b in boxes),
        )

    def __iter__(self):
        return iter(self.primitives)

    def __len__(self):
        return len(self.primitives)
