"""Material perturbation fields supported on the obstacle region.

The evolving coefficient rho (and every search direction mu) is represented
by its values at the assembly quadrature points of the elements meeting the
obstacle.  Using one shared sampling for the solver, the overlap integrals
and the constraint densities makes all the linear algebra of the design loop
(projections, Gram systems, kernel splits) exact at the discrete level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ObstacleRegion
from .mesh import StripMesh


@dataclass
class MaterialGrid:
    """Quadrature-point sampling of the obstacle region on a fixed mesh."""

    mesh: StripMesh
    region: ObstacleRegion
    element_ids: np.ndarray = field(repr=False)
    inside: np.ndarray = field(repr=False)  # (n_oe, nq) bool

    @classmethod
    def build(cls, mesh: StripMesh, region: ObstacleRegion) -> "MaterialGrid":
        inside_all = region.contains(mesh.quad_x, mesh.quad_y)
        element_ids = np.flatnonzero(inside_all.any(axis=1))
        return cls(mesh=mesh, region=region, element_ids=element_ids,
                   inside=inside_all[element_ids])

    @property
    def quad_x(self) -> np.ndarray:
        return self.mesh.quad_x[self.element_ids]

    @property
    def quad_y(self) -> np.ndarray:
        return self.mesh.quad_y[self.element_ids]

    @property
    def quad_w(self) -> np.ndarray:
        return self.mesh.quad_w[self.element_ids]

    @property
    def shape(self):
        return self.inside.shape

    def integrate(self, values: np.ndarray) -> float | complex:
        """Quadrature of a sampled integrand over the obstacle elements."""
        return (self.quad_w * values).sum()

    def zeros(self) -> "MaterialField":
        return MaterialField(self, np.zeros(self.shape))

    def from_callable(self, fn) -> "MaterialField":
        return MaterialField(self, np.asarray(fn(self.quad_x, self.quad_y), dtype=float))

    def from_pieces(self, pieces) -> "MaterialField":
        """Sum of constant values over primitives: pieces = [(primitive, value), ...]."""
        vals = np.zeros(self.shape)
        for prim, value in pieces:
            vals += float(value) * prim.contains(self.quad_x, self.quad_y)
        return MaterialField(self, vals)


class MaterialField:
    """Real-valued field over the obstacle, zero outside its support."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: MaterialGrid, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"values shape {values.shape} != grid shape {grid.shape}")
        self.grid = grid
        self.values = np.where(grid.inside, values, 0.0)

    # -- vector space operations ---------------------------------------------

    def __add__(self, other: "MaterialField") -> "MaterialField":
        return MaterialField(self.grid, self.values + other.values)

    def __sub__(self, other: "MaterialField") -> "MaterialField":
        return MaterialField(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "MaterialField":
        return MaterialField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "MaterialField":
        return MaterialField(self.grid, -self.values)

    # -- norms and pairings ----------------------------------------------------

    def linf(self) -> float:
        return float(np.abs(self.values).max(initial=0.0))

    def l2(self) -> float:
        return float(np.sqrt(self.grid.integrate(self.values**2)))

    def pair(self, density_values: np.ndarray):
        """Integral of this field against a sampled density."""
        return self.grid.integrate(self.values * density_values)

    def node_values(self) -> np.ndarray:
        """Smear quadrature values onto mesh nodes (for field export only)."""
        mesh = self.grid.mesh
        out = np.zeros(mesh.n_nodes)
        counts = np.zeros(mesh.n_nodes)
        elem_mean = self.values.mean(axis=1)
        conn = mesh.elements[self.grid.element_ids]
        np.add.at(out, conn.ravel(), np.repeat(elem_mean, conn.shape[1]))
        np.add.at(counts, conn.ravel(), 1.0)
        mask = counts > 0
        out[mask] /= counts[mask]
        return out
