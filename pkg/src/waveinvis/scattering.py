"""Scattering matrices, their material differential, and structure checks.

Two extraction routes are computed from the same solved fields:

* modal trace extraction: project the traces at Sigma_{+-ell} on the
  propagating profiles.  Because the extraction reuses the trace-moment
  vectors of the transparent boundary condition, the resulting matrix is
  exactly symmetric and unitary at the discrete level, and the volume
  differential below is its exact material derivative.  This route is the
  primary one: it is what the design loop drives.
* volume extraction: quadrature of  R_mn = i k^2 int rho u_m w_n  and
  T_mn = delta_mn + i k^2 int rho u_m w_pmn.  It agrees with the trace route
  up to discretization error and serves as an independent cross-check (it
  is exact, by construction, for rho = 0).

The differential in a direction mu is  dS[a,b](mu) = i k^2 int mu U_a U_b
with U the stacked total fields (u_0^+, ..., u_{N-1}^+, u_0^-, ...).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fem import WaveguideSolver
from .materials import MaterialField
from .smatrix import ScatteringMatrix


@dataclass
class FieldBundle:
    """Solved total fields plus the scattering data extracted from them."""

    solver: WaveguideSolver = field(repr=False)
    material: MaterialField = field(repr=False)
    fields: np.ndarray = field(repr=False)  # (n_nodes, 2N)
    smatrix: ScatteringMatrix
    smatrix_volume: ScatteringMatrix | None = None

    def __post_init__(self):
        # total fields sampled at the obstacle quadrature points, reused by
        # every overlap integral (differentials, densities, volume matrix)
        grid = self.solver.grid
        conn = self.solver.mesh.elements[grid.element_ids]
        self.quad_fields = np.einsum(
            "ql,elf->eqf", self.solver.mesh.quad_basis, self.fields[conn]
        )

    @property
    def n_modes(self) -> int:
        return self.solver.n_modes

    def field_at(self, x, y) -> np.ndarray:
        """All 2N total fields at arbitrary points, stacked on the last axis."""
        x = np.asarray(x, dtype=float)
        cols = [self.solver.mesh.interpolate(self.fields[:, c], x, y)
                for c in range(self.fields.shape[1])]
        return np.stack(cols, axis=-1)


def _volume_matrix(solver: WaveguideSolver, material: MaterialField,
                   quad_fields: np.ndarray) -> ScatteringMatrix:
    grid = solver.grid
    N = solver.n_modes
    k = solver.config.k
    w_rho = grid.quad_w * material.values
    # propagating modes at the obstacle quadrature points
    wp = np.stack([solver.modes.mode_eval(n, +1, grid.quad_x, grid.quad_y)
                   for n in range(N)], axis=-1)
    wm = np.stack([solver.modes.mode_eval(n, -1, grid.quad_x, grid.quad_y)
                   for n in range(N)], axis=-1)
    up = quad_fields[:, :, :N]
    um = quad_fields[:, :, N:]
    ik2 = 1j * k * k
    s = np.empty((2 * N, 2 * N), dtype=complex)
    s[:N, :N] = ik2 * np.einsum("eq,eqm,eqn->mn", w_rho, up, wp)
    s[:N, N:] = np.eye(N) + ik2 * np.einsum("eq,eqm,eqn->mn", w_rho, up, wm)
    s[N:, :N] = np.eye(N) + ik2 * np.einsum("eq,eqm,eqn->mn", w_rho, um, wp)
    s[N:, N:] = ik2 * np.einsum("eq,eqm,eqn->mn", w_rho, um, wm)
    return ScatteringMatrix(s)


def scattering_matrix(solver: WaveguideSolver, material: MaterialField) -> FieldBundle:
    """Solve the 2N scattering problems at the given material and extract S."""
    fields = solver.solve_fields(material)
    strace = ScatteringMatrix(solver.trace_coefficients(fields))
    bundle = FieldBundle(solver=solver, material=material, fields=fields,
                         smatrix=strace, smatrix_volume=None)
    bundle.smatrix_volume = _volume_matrix(solver, material, bundle.quad_fields)
    return bundle


def scattering_differential(bundle: FieldBundle, mu: MaterialField) -> np.ndarray:
    """dS(rho)(mu): exact derivative of the trace-extracted discrete matrix."""
    k = bundle.solver.config.k
    w_mu = bundle.solver.grid.quad_w * mu.values
    u = bundle.quad_fields
    ds = 1j * k * k * np.einsum("eq,eqa,eqb->ab", w_mu, u, u)
    # the integrand is symmetric in (a, b); mirror the upper triangle so the
    # identity dT-_mn = dT+_nm holds to the bit
    return np.triu(ds) + np.triu(ds, 1).T


@dataclass
class StructureReport:
    """Residuals of the structural identities a scattering family satisfies."""

    symmetry: float
    unitarity: float
    volume_symmetry: float
    volume_unitarity: float
    extraction_gap: float
    relation: float
    energy_derivative: float | None
    energy_derivative_scale: float | None

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


def verify_structure(bundle: FieldBundle, lattice=(20, 10), seed: int = 0) -> StructureReport:
    """Evaluate symmetry, unitarity, the conj(S) U = conj(U) field relation,
    and (monomode) the energy-flux derivative identity for a random direction.
    """
    solver = bundle.solver
    s = bundle.smatrix.entries

    nxs, nys = lattice
    ell = solver.config.ell
    xs = np.linspace(-ell, ell, nxs + 2)[1:-1]
    ys = np.linspace(0.0, 1.0, nys + 2)[1:-1]
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    u = bundle.field_at(gx.ravel(), gy.ravel())  # (npts, 2N)
    relation = float(np.abs(u @ s.conj().T - u.conj()).max())

    energy = energy_scale = None
    if solver.n_modes == 1:
        rng = np.random.default_rng(seed)
        mu = MaterialField(solver.grid, rng.uniform(-1.0, 1.0, solver.grid.shape))
        ds = scattering_differential(bundle, mu)
        energy = float(abs((np.conj(s[0, 0]) * ds[0, 0]
                            + np.conj(s[0, 1]) * ds[0, 1]).real))
        energy_scale = mu.l2()

    return StructureReport(
        symmetry=bundle.smatrix.symmetry_residual(),
        unitarity=bundle.smatrix.unitarity_residual(),
        volume_symmetry=bundle.smatrix_volume.symmetry_residual(),
        volume_unitarity=bundle.smatrix_volume.unitarity_residual(),
        extraction_gap=float(np.abs(bundle.smatrix.entries
                                    - bundle.smatrix_volume.entries).max()),
        relation=relation,
        energy_derivative=energy,
        energy_derivative_scale=energy_scale,
    )
