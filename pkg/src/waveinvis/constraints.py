"""Piecewise-constant restrictions of the design space.

A partition splits the obstacle into disjoint cells; projecting the density
functions onto the span of the cell indicators makes every constructed
perturbation piecewise constant, at the price that the projected Gram matrix
needs at least as many cells as constraints (and may still be singular).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroAreaCellError
from .materials import MaterialField, MaterialGrid


class Partition:
    """Disjoint geometric cells O_1..O_S covering the obstacle."""

    def __init__(self, cells):
        cells = list(cells)
        if not cells:
            raise ValueError("partition needs at least one cell")
        self.cells = cells

    def __len__(self):
        return len(self.cells)

    def rasterize(self, grid: MaterialGrid) -> "RasterizedPartition":
        masks = np.stack([c.contains(grid.quad_x, grid.quad_y) for c in self.cells])
        masks &= grid.inside
        overlap = masks.sum(axis=0)
        if (overlap > 1).any():
            raise ValueError("partition cells overlap")
        areas = np.array([grid.integrate(m.astype(float)) for m in masks])
        tiny = areas <= 0.0
        if tiny.any():
            bad = int(np.flatnonzero(tiny)[0])
            raise ZeroAreaCellError(
                f"cell {bad} ({self.cells[bad]}) carries no quadrature weight"
            )
        return RasterizedPartition(partition=self, grid=grid, masks=masks, areas=areas)


@dataclass
class RasterizedPartition:
    """A partition sampled on the obstacle quadrature grid."""

    partition: Partition
    grid: MaterialGrid = field(repr=False)
    masks: np.ndarray = field(repr=False)  # (S, n_oe, nq) bool
    areas: np.ndarray = field(repr=False)

    @property
    def n_cells(self) -> int:
        return len(self.areas)

    def cell_means(self, values: np.ndarray) -> np.ndarray:
        """Mean of a sampled field over each cell."""
        w = self.grid.quad_w
        sums = np.einsum("sij,ij->s", self.masks, w * values)
        return sums / self.areas

    def project_values(self, values: np.ndarray) -> np.ndarray:
        """L2 projection onto the cell-indicator span, sampled again."""
        means = self.cell_means(values)
        return np.einsum("s,sij->ij", means, self.masks)

    def cell_variances(self, values: np.ndarray) -> np.ndarray:
        """Within-cell variance of the sampled values (0 iff cellwise constant)."""
        w = self.grid.quad_w
        means = self.cell_means(values)
        dev2 = (values[None, :, :] - means[:, None, None]) ** 2
        return np.einsum("sij,sij->s", self.masks, w * dev2) / self.areas


def project_density(f: MaterialField, raster: RasterizedPartition) -> MaterialField:
    """Piecewise-constant field with the same moments against every cell."""
    return MaterialField(raster.grid, raster.project_values(f.values))


@dataclass
class FeasibilityReport:
    feasible: bool
    n_cells: int
    dimension: int
    margin: int
    reason: str | None = None
    gram_condition: float | None = None


def constrained_feasibility(partition: Partition, dimension: int,
                            gram_condition: float | None = None) -> FeasibilityReport:
    """Necessary cell-count check S >= d, with the Gram condition attached
    once it has been computed (invertibility is not guaranteed by S >= d)."""
    s = len(partition)
    if s < dimension:
        return FeasibilityReport(
            feasible=False, n_cells=s, dimension=dimension, margin=s - dimension,
            reason=f"{s} cells cannot carry {dimension} independent constraints",
        )
    return FeasibilityReport(feasible=True, n_cells=s, dimension=dimension,
                             margin=s - dimension, gram_condition=gram_condition)
