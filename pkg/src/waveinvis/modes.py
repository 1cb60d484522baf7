"""Waveguide geometry and the transverse mode basis.

The guide is the strip R x (0,1) with sound-hard walls.  Separated solutions
of the unperturbed Helmholtz problem are

    w_n^{pm}(x, y) = (2|beta_n|)^{-1/2} exp(+-i beta_n x) phi_n(y),

with phi_n(y) = alpha_n cos(n pi y), alpha_0 = 1, alpha_n = sqrt(2) for n >= 1,
and axial wavenumbers beta_n = sqrt(k^2 - n^2 pi^2).  The square root is taken
so that beta_n > 0 for propagating modes (n < N) and beta_n lies on the
positive imaginary axis for evanescent ones (n >= N).  The (2|beta_n|)^{-1/2}
factor normalizes the energy flux of propagating modes, which is what makes
the scattering matrix unitary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CutoffError
from .geometry import ObstacleRegion

DEFAULT_CUTOFF_MARGIN = 1e-3


def propagating_mode_count(k: float, cutoff_margin: float = DEFAULT_CUTOFF_MARGIN) -> int:
    """Number N of propagating modes at wavenumber k, i.e. (N-1)pi < k < N pi.

    Raises CutoffError when k is within ``cutoff_margin`` of a cutoff n*pi,
    where the axial wavenumber of some mode degenerates to zero.
    """
    if k <= 0:
        raise CutoffError(f"wavenumber must be positive, got {k}")
    nearest = round(k / np.pi)
    if abs(k - nearest * np.pi) <= cutoff_margin:
        raise CutoffError(
            f"k={k} is within {cutoff_margin} of the cutoff {nearest}*pi"
        )
    return int(np.ceil(k / np.pi))


def axial_wavenumber(k: float, n) -> np.ndarray | complex:
    """beta_n = sqrt(k^2 - n^2 pi^2), real > 0 or purely imaginary (Im > 0)."""
    n = np.asarray(n)
    gamma = k * k - (n * np.pi) ** 2
    beta = np.sqrt(gamma.astype(complex))
    # scrub roundoff off the exact branch: real when gamma > 0, i*R+ otherwise
    beta = np.where(gamma > 0, beta.real + 0j, 1j * beta.imag)
    return beta if beta.ndim else complex(beta)


@dataclass(frozen=True)
class WaveguideConfig:
    """Problem geometry: wavenumber, truncated strip half-length, obstacle."""

    k: float
    ell: float
    obstacle: ObstacleRegion
    cutoff_margin: float = DEFAULT_CUTOFF_MARGIN

    def __post_init__(self):
        if self.ell <= 0:
            raise ValueError("ell must be positive")
        propagating_mode_count(self.k, self.cutoff_margin)  # validates k
        x0, x1, y0, y1 = self.obstacle.bounding_box
        # material may touch the walls y=0,1 (full-height slabs are legal) but
        # must stay strictly inside the strip in x so the far fields are modal
        if not (-self.ell < x0 and x1 < self.ell):
            raise ValueError("obstacle must be strictly inside (-ell, ell) in x")
        if y0 < 0 or y1 > 1:
            raise ValueError("obstacle must lie inside the guide 0 <= y <= 1")

    @property
    def mode_count(self) -> int:
        return propagating_mode_count(self.k, self.cutoff_margin)


@dataclass(frozen=True)
class ModeBasis:
    """Mode data for indices n = 0..J-1 at a fixed wavenumber.

    J is at least the propagating count N; the extra entries are the
    evanescent modes used by the truncated transparent boundary condition.
    """

    k: float
    n_propagating: int
    beta: np.ndarray = field(repr=False)  # complex, shape (J,)

    @classmethod
    def build(cls, k: float, terms: int, cutoff_margin: float = DEFAULT_CUTOFF_MARGIN):
        n_prop = propagating_mode_count(k, cutoff_margin)
        if terms < n_prop:
            raise ValueError(f"need at least {n_prop} mode terms, got {terms}")
        beta = axial_wavenumber(k, np.arange(terms))
        return cls(k=k, n_propagating=n_prop, beta=beta)

    @property
    def terms(self) -> int:
        return len(self.beta)

    def alpha(self, n) -> np.ndarray:
        n = np.asarray(n)
        return np.where(n == 0, 1.0, np.sqrt(2.0))

    def profile(self, n: int, y) -> np.ndarray:
        """Transverse profile phi_n(y) = alpha_n cos(n pi y)."""
        return self.alpha(n) * np.cos(n * np.pi * np.asarray(y, dtype=float))

    def mode_eval(self, n: int, direction: int, x, y) -> np.ndarray:
        """Evaluate w_n^{+-}(x, y); direction is +1 or -1."""
        if direction not in (+1, -1):
            raise ValueError("direction must be +1 or -1")
        if n < 0:
            raise ValueError("mode index must be nonnegative")
        beta = axial_wavenumber(self.k, n) if n >= self.terms else self.beta[n]
        scale = (2.0 * abs(beta)) ** -0.5
        x = np.asarray(x, dtype=float)
        return scale * np.exp(1j * direction * beta * x) * self.profile(n, y)


def mode_eval(k: float, n: int, direction: int, x, y) -> np.ndarray:
    """Convenience one-shot evaluation of w_n^{+-} at wavenumber k."""
    basis = ModeBasis.build(k, max(n + 1, propagating_mode_count(k)))
    return basis.mode_eval(n, direction, x, y)
