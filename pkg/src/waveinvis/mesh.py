"""Structured triangular meshes of the truncated strip (-ell, ell) x (0, 1).

A regular nx-by-ny quad grid is split into triangles (diagonal from the
lower-left to the upper-right corner of each cell).  Lagrange elements of
order 1 or 2 are supported; nodes live on the lattice with spacing h/order,
so P2 meshes carry (2 nx + 1)(2 ny + 1) nodes.  All elements are affine
images of the unit reference triangle, which keeps assembly fully
vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ResolutionError
from .modes import WaveguideConfig

MIN_CELLS_ACROSS_PRIMITIVE = 8

# Seven-point degree-5 rule on the reference triangle (weights sum to 1/2).
_SQRT15 = np.sqrt(15.0)
_QUAD_PTS = np.array(
    [
        [1 / 3, 1 / 3],
        [(6 - _SQRT15) / 21, (6 - _SQRT15) / 21],
        [(9 + 2 * _SQRT15) / 21, (6 - _SQRT15) / 21],
        [(6 - _SQRT15) / 21, (9 + 2 * _SQRT15) / 21],
        [(6 + _SQRT15) / 21, (6 + _SQRT15) / 21],
        [(9 - 2 * _SQRT15) / 21, (6 + _SQRT15) / 21],
        [(6 + _SQRT15) / 21, (9 - 2 * _SQRT15) / 21],
    ]
)
_QUAD_WTS = 0.5 * np.array(
    [9 / 40]
    + [(155 - _SQRT15) / 1200] * 3
    + [(155 + _SQRT15) / 1200] * 3
)


def _basis_p1(xi, eta):
    lam1 = 1.0 - xi - eta
    vals = np.stack([lam1, xi, eta], axis=-1)
    grads = np.broadcast_to(
        np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]), xi.shape + (3, 2)
    ).copy()
    return vals, grads


def _basis_p2(xi, eta):
    lam = np.stack([1.0 - xi - eta, xi, eta], axis=-1)
    dlam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    vals = np.concatenate(
        [
            lam * (2.0 * lam - 1.0),
            4.0
            * np.stack(
                [lam[..., 0] * lam[..., 1], lam[..., 1] * lam[..., 2], lam[..., 2] * lam[..., 0]],
                axis=-1,
            ),
        ],
        axis=-1,
    )
    grads = np.empty(xi.shape + (6, 2))
    for i in range(3):
        grads[..., i, :] = (4.0 * lam[..., i, None] - 1.0) * dlam[i]
    pairs = [(0, 1), (1, 2), (2, 0)]
    for m, (i, j) in enumerate(pairs):
        grads[..., 3 + m, :] = 4.0 * (
            lam[..., i, None] * dlam[j] + lam[..., j, None] * dlam[i]
        )
    return vals, grads


def segment_basis(order: int, t):
    """1D Lagrange shape functions on [0, 1] at parameters t."""
    t = np.asarray(t)
    if order == 1:
        return np.stack([1.0 - t, t], axis=-1)
    return np.stack([(1.0 - t) * (1.0 - 2.0 * t), 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0)], axis=-1)


def segment_basis_deriv(order: int, t):
    """Derivatives of the 1D shape functions with respect to t."""
    t = np.asarray(t)
    if order == 1:
        return np.stack([-np.ones_like(t), np.ones_like(t)], axis=-1)
    return np.stack([4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0], axis=-1)


@dataclass
class StripMesh:
    """Conforming triangulation of [-ell, ell] x [0, 1] with Lagrange nodes."""

    ell: float
    nx: int
    ny: int
    order: int
    node_x: np.ndarray = field(repr=False)
    node_y: np.ndarray = field(repr=False)
    elements: np.ndarray = field(repr=False)  # (ne, nloc) node ids

    def __post_init__(self):
        self.hx = 2.0 * self.ell / self.nx
        self.hy = 1.0 / self.ny
        nq = _QUAD_PTS.shape[0]
        basis = _basis_p1 if self.order == 1 else _basis_p2
        self.quad_basis, self.quad_grads = basis(_QUAD_PTS[:, 0], _QUAD_PTS[:, 1])

        # affine geometry per element (all triangles share two congruent shapes)
        ex = self.node_x[self.elements[:, :3]]
        ey = self.node_y[self.elements[:, :3]]
        j11 = ex[:, 1] - ex[:, 0]
        j12 = ex[:, 2] - ex[:, 0]
        j21 = ey[:, 1] - ey[:, 0]
        j22 = ey[:, 2] - ey[:, 0]
        self.det_j = j11 * j22 - j12 * j21
        inv_det = 1.0 / self.det_j
        # inverse transpose of the Jacobian, used to push gradients forward
        self.jinv_t = np.empty((len(self.elements), 2, 2))
        self.jinv_t[:, 0, 0] = j22 * inv_det
        self.jinv_t[:, 0, 1] = -j21 * inv_det
        self.jinv_t[:, 1, 0] = -j12 * inv_det
        self.jinv_t[:, 1, 1] = j11 * inv_det

        xi, eta = _QUAD_PTS[:, 0], _QUAD_PTS[:, 1]
        self.quad_x = ex[:, [0]] + np.outer(j11, xi) + np.outer(j12, eta)
        self.quad_y = ey[:, [0]] + np.outer(j21, xi) + np.outer(j22, eta)
        self.quad_w = np.outer(np.abs(self.det_j), _QUAD_WTS)
        assert self.quad_w.shape == (len(self.elements), nq)

    # -- counts ------------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.node_x)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def nodes_per_side(self) -> int:
        return self.order * self.ny + 1

    @property
    def lattice_shape(self):
        """Node lattice dimensions (columns, rows)."""
        return self.order * self.nx + 1, self.order * self.ny + 1

    def total_area(self) -> float:
        return float(self.quad_w.sum())

    # -- boundary traces ----------------------------------------------------

    def boundary_nodes(self, side: int) -> np.ndarray:
        """Node ids on Sigma_{-ell} (side=-1) or Sigma_{+ell} (side=+1), bottom to top."""
        ncol, nrow = self.lattice_shape
        col = 0 if side < 0 else ncol - 1
        return col + ncol * np.arange(nrow)

    def boundary_segments(self, side: int) -> np.ndarray:
        """(ny, order+1) node ids of the 1D trace elements on one side."""
        nodes = self.boundary_nodes(side)
        p = self.order
        return np.stack([nodes[p * s : p * s + p + 1] for s in range(self.ny)])

    # -- point location and interpolation ------------------------------------

    def locate(self, x, y):
        """Element indices and reference coordinates of arbitrary points."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ix = np.clip(((x + self.ell) / self.hx).astype(int), 0, self.nx - 1)
        iy = np.clip((y / self.hy).astype(int), 0, self.ny - 1)
        xc = (x + self.ell) / self.hx - ix
        yc = y / self.hy - iy
        lower = xc >= yc  # triangle with the horizontal bottom edge
        elem = 2 * (iy * self.nx + ix) + np.where(lower, 0, 1)
        xi = np.where(lower, xc - yc, xc)
        eta = np.where(lower, yc, yc - xc)
        return elem, xi, eta

    def interpolate(self, coeffs: np.ndarray, x, y) -> np.ndarray:
        """Evaluate a finite element function at arbitrary points."""
        elem, xi, eta = self.locate(x, y)
        basis = _basis_p1 if self.order == 1 else _basis_p2
        vals, _ = basis(np.asarray(xi), np.asarray(eta))
        return np.einsum("...l,...l->...", vals, coeffs[self.elements[elem]])


def build_mesh(config: WaveguideConfig, nx: int, ny: int, order: int = 2) -> StripMesh:
    """Mesh the computational strip, validating obstacle resolution.

    Every obstacle primitive must be crossed by at least 8 cells along its
    smallest dimension; undersized meshes raise ResolutionError.
    """
    if nx < 4 or ny < 4:
        raise ResolutionError(f"nx={nx}, ny={ny}: need at least 4 cells per direction")
    hx = 2.0 * config.ell / nx
    hy = 1.0 / ny
    h = max(hx, hy)
    for prim in config.obstacle:
        cells_across = prim.smallest_dimension / h
        if cells_across + 1e-9 < MIN_CELLS_ACROSS_PRIMITIVE:
            raise ResolutionError(
                f"{prim} spans only {cells_across:.2f} cells across its smallest "
                f"dimension (need {MIN_CELLS_ACROSS_PRIMITIVE}); refine the mesh"
            )
    return structured_strip_mesh(config.ell, nx, ny, order)


def structured_strip_mesh(ell: float, nx: int, ny: int, order: int = 2) -> StripMesh:
    """Mesh [-ell, ell] x [0, 1] without geometry validation."""
    if order not in (1, 2):
        raise ValueError("element order must be 1 or 2")
    p = order
    ncol, nrow = p * nx + 1, p * ny + 1
    xs = np.linspace(-ell, ell, ncol)
    ys = np.linspace(0.0, 1.0, nrow)
    node_x = np.tile(xs, nrow)
    node_y = np.repeat(ys, ncol)

    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    i = i.T.ravel()  # row-major over cells, y outer
    j = j.T.ravel()

    def nid(col, row):
        return row * ncol + col

    a = nid(p * i, p * j)
    b = nid(p * i + p, p * j)
    c = nid(p * i + p, p * j + p)
    d = nid(p * i, p * j + p)
    if order == 1:
        tri1 = np.stack([a, b, c], axis=1)
        tri2 = np.stack([a, c, d], axis=1)
    else:
        tri1 = np.stack(
            [a, b, c, nid(2 * i + 1, 2 * j), nid(2 * i + 2, 2 * j + 1), nid(2 * i + 1, 2 * j + 1)],
            axis=1,
        )
        tri2 = np.stack(
            [a, c, d, nid(2 * i + 1, 2 * j + 1), nid(2 * i + 1, 2 * j + 2), nid(2 * i, 2 * j + 1)],
            axis=1,
        )
    elements = np.empty((2 * nx * ny, 3 * order), dtype=np.int64)
    elements[0::2] = tri1
    elements[1::2] = tri2

    return StripMesh(
        ell=ell, nx=nx, ny=ny, order=order,
        node_x=node_x, node_y=node_y, elements=elements,
    )
