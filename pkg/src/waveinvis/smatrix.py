"""Scattering matrix container with block accessors and structure residuals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ScatteringMatrix:
    """2N x 2N matrix of reflection/transmission coefficients.

    Block layout (rows: incident mode, + block first; columns: outgoing mode):

        [ R+  T+ ]
        [ T-  R- ]

    A physically exact matrix is symmetric and unitary; the residual methods
    quantify how far a computed matrix is from that structure.
    """

    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.ndim != 2 or e.shape[0] != e.shape[1] or e.shape[0] % 2:
            raise ValueError(f"expected a square 2N x 2N array, got {e.shape}")
        object.__setattr__(self, "entries", e)

    @property
    def n_modes(self) -> int:
        return self.entries.shape[0] // 2

    @property
    def Rplus(self) -> np.ndarray:
        N = self.n_modes
        return self.entries[:N, :N]

    @property
    def Tplus(self) -> np.ndarray:
        N = self.n_modes
        return self.entries[:N, N:]

    @property
    def Tminus(self) -> np.ndarray:
        N = self.n_modes
        return self.entries[N:, :N]

    @property
    def Rminus(self) -> np.ndarray:
        N = self.n_modes
        return self.entries[N:, N:]

    @classmethod
    def reference(cls, n_modes: int) -> "ScatteringMatrix":
        """Scattering matrix of the empty guide: R = 0, T = Id."""
        N = n_modes
        e = np.zeros((2 * N, 2 * N), dtype=complex)
        e[:N, N:] = np.eye(N)
        e[N:, :N] = np.eye(N)
        return cls(e)

    def symmetry_residual(self) -> float:
        return float(np.abs(self.entries - self.entries.T).max())

    def unitarity_residual(self) -> float:
        s = self.entries
        return float(np.abs(s @ s.conj().T - np.eye(len(s))).max())

    def deviation_from_reference(self) -> float:
        """Max-norm distance to the empty-guide matrix."""
        return float(np.abs(self.entries - self.reference(self.n_modes).entries).max())

    def __sub__(self, other: "ScatteringMatrix") -> np.ndarray:
        return self.entries - other.entries
