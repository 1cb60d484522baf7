"""Artifact writers: legacy-VTK ASCII fields, CSV tables, JSON run logs.

All writers format numbers deterministically, so identical runs produce
bit-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .mesh import StripMesh
from .smatrix import ScatteringMatrix

_BLOCKS = ("R+", "T+", "T-", "R-")


def write_vtk_structured(path, mesh: StripMesh, point_data: dict) -> Path:
    """Legacy-VTK ASCII structured-points file sampled on the node lattice.

    ``point_data`` maps field names ("rho", "re_u", "im_u", ...) to arrays of
    nodal values in lattice order.
    """
    path = Path(path)
    ncol, nrow = mesh.lattice_shape
    lines = [
        "# vtk DataFile Version 3.0",
        "waveguide strip fields",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {ncol} {nrow} 1",
        f"ORIGIN {-mesh.ell:.17g} 0 0",
        f"SPACING {mesh.hx / mesh.order:.17g} {mesh.hy / mesh.order:.17g} 1",
        f"POINT_DATA {ncol * nrow}",
    ]
    for name, values in point_data.items():
        values = np.asarray(values, dtype=float)
        if values.size != ncol * nrow:
            raise ValueError(f"field {name!r} has {values.size} values, "
                             f"lattice needs {ncol * nrow}")
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(f"{v:.9g}" for v in values)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_scattering_csv(path, smatrix: ScatteringMatrix) -> Path:
    """Scattering matrix as rows (block, m, n, re, im)."""
    path = Path(path)
    N = smatrix.n_modes
    blocks = dict(zip(_BLOCKS, (smatrix.Rplus, smatrix.Tplus,
                                smatrix.Tminus, smatrix.Rminus)))
    lines = ["block,m,n,re,im"]
    for name in _BLOCKS:
        b = blocks[name]
        for m in range(N):
            for n in range(N):
                lines.append(f"{name},{m},{n},{b[m, n].real:.17g},{b[m, n].imag:.17g}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_scattering_csv(path) -> ScatteringMatrix:
    """Inverse of write_scattering_csv."""
    rows = Path(path).read_text().strip().splitlines()[1:]
    parsed = [r.split(",") for r in rows]
    N = max(int(r[1]) for r in parsed) + 1
    entries = np.zeros((2 * N, 2 * N), dtype=complex)
    offs = {"R+": (0, 0), "T+": (0, N), "T-": (N, 0), "R-": (N, N)}
    for name, m, n, re, im in parsed:
        om, on = offs[name]
        entries[om + int(m), on + int(n)] = float(re) + 1j * float(im)
    return ScatteringMatrix(entries)


def write_cell_values_csv(path, values) -> Path:
    """Per-cell material values as rows (cell, value)."""
    path = Path(path)
    lines = ["cell,value"]
    lines.extend(f"{i},{v:.17g}" for i, v in enumerate(np.asarray(values, dtype=float)))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path
