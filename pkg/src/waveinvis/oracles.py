"""Independent small-scale ground truths used by the test suite.

* 1D slab transfer matrix: a full-height, x-only material decouples the
  lowest mode, so its reflection/transmission must match the classical
  two-interface solution.
* the explicit differential of the reflection coefficient at rho = 0 for a
  full-height rectangular direction, which has a closed form.
* a constructive sampler of unitary symmetric 2x2 matrices, for brute-force
  checks of the relative-invisibility functional equivalences.
"""

from __future__ import annotations

import numpy as np

from .errors import EvanescentSlabError


def slab_scattering_1d(k: float, rho_const: float, a: float, b: float):
    """Reflection and transmission of a constant slab on (a, b), 1D Helmholtz.

    Solves u'' + k^2 (1 + rho) u = 0 with u = e^{ikx} + R e^{-ikx} on the
    left, A e^{ik'x} + B e^{-ik'x} inside and T e^{ikx} on the right, by
    matching u and u' at both interfaces.  The mode normalization drops out,
    so (R, T) compare directly with the guide's lowest-mode coefficients.
    """
    if not 0.0 < k < np.pi:
        raise ValueError("slab oracle is meant for the monomode band 0 < k < pi")
    if a >= b:
        raise ValueError("need a < b")
    if 1.0 + rho_const <= 0.0:
        raise EvanescentSlabError(
            f"1 + rho = {1 + rho_const} <= 0: interior medium does not propagate"
        )
    kp = k * np.sqrt(1.0 + rho_const)
    # unknowns (R, A, B, T)
    mat = np.array(
        [
            [-np.exp(-1j * k * a), np.exp(1j * kp * a), np.exp(-1j * kp * a), 0.0],
            [1j * k * np.exp(-1j * k * a), 1j * kp * np.exp(1j * kp * a),
             -1j * kp * np.exp(-1j * kp * a), 0.0],
            [0.0, np.exp(1j * kp * b), np.exp(-1j * kp * b), -np.exp(1j * k * b)],
            [0.0, 1j * kp * np.exp(1j * kp * b), -1j * kp * np.exp(-1j * kp * b),
             -1j * k * np.exp(1j * k * b)],
        ],
        dtype=complex,
    )
    rhs = np.array(
        [np.exp(1j * k * a), 1j * k * np.exp(1j * k * a), 0.0, 0.0], dtype=complex
    )
    r, _, _, t = np.linalg.solve(mat, rhs)
    return complex(r), complex(t)


def half_wave_thickness(k: float, rho_const: float) -> float:
    """Slab thickness with k sqrt(1+rho) L = pi: a perfect transmission resonance."""
    if 1.0 + rho_const <= 0.0:
        raise EvanescentSlabError("no propagating interior medium")
    return float(np.pi / (k * np.sqrt(1.0 + rho_const)))


def explicit_dR0(k: float, a: float, b: float) -> complex:
    """dR+(0)(mu) for mu the indicator of (a, b) x (0, 1), monomode.

    With u = w^+ the overlap integral reduces to (e^{2ikb} - e^{2ika}) / 4.
    """
    return (np.exp(2j * k * b) - np.exp(2j * k * a)) / 4.0


def sample_unitary_symmetric_2x2(seed: int, count: int) -> np.ndarray:
    """Random 2x2 scattering matrices satisfying symmetry and unitarity.

    Parametrized by |T| in [0, 1] and phases; the constraints
    |R+|^2 + |T|^2 = 1, |R-|^2 + |T|^2 = 1 and conj(R+) T + conj(T) R- = 0
    hold by construction.  Returns an array of shape (count, 2, 2).
    """
    rng = np.random.default_rng(seed)
    t_mag = rng.uniform(0.0, 1.0, count)
    th_t = rng.uniform(0.0, 2.0 * np.pi, count)
    th_p = rng.uniform(0.0, 2.0 * np.pi, count)
    th_m = rng.uniform(0.0, 2.0 * np.pi, count)
    return assemble_unitary_symmetric(t_mag, th_t, th_p, th_m)


def assemble_unitary_symmetric(t_mag, th_t, th_p, th_m) -> np.ndarray:
    """Unitary symmetric 2x2 matrices from magnitude/phase parameters.

    For |T| > 0 the phase of R- is pinned by the off-diagonal unitarity
    identity; th_m is only used on the T = 0 stratum where both reflection
    phases are free.
    """
    t_mag = np.atleast_1d(np.asarray(t_mag, dtype=float))
    th_t, th_p, th_m = (np.broadcast_to(np.atleast_1d(v), t_mag.shape)
                        for v in (th_t, th_p, th_m))
    r_mag = np.sqrt(np.clip(1.0 - t_mag**2, 0.0, None))
    t = t_mag * np.exp(1j * th_t)
    rp = r_mag * np.exp(1j * th_p)
    rm = np.where(
        t_mag > 0.0,
        r_mag * np.exp(1j * (2.0 * th_t - th_p + np.pi)),
        r_mag * np.exp(1j * th_m),
    )
    out = np.empty(t_mag.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = rp
    out[..., 0, 1] = t
    out[..., 1, 0] = t
    out[..., 1, 1] = rm
    return out


def unitary_symmetric_parameters(s: np.ndarray):
    """Invert assemble_unitary_symmetric for one matrix (tolerates roundoff)."""
    rp, t, rm = s[0, 0], s[0, 1], s[1, 1]
    return (abs(t), float(np.angle(t)) if abs(t) > 0 else 0.0,
            float(np.angle(rp)) if abs(rp) > 0 else 0.0,
            float(np.angle(rm)) if abs(rm) > 0 else 0.0)


def sample_near(s0: np.ndarray, radius: float, seed: int, count: int) -> np.ndarray:
    """Unitary symmetric matrices in a parameter neighbourhood of s0."""
    t0, th_t0, th_p0, th_m0 = unitary_symmetric_parameters(s0)
    rng = np.random.default_rng(seed)
    t_mag = np.clip(t0 + rng.uniform(-radius, radius, count), 0.0, 1.0)
    th_t = th_t0 + rng.uniform(-radius, radius, count)
    th_p = th_p0 + rng.uniform(-radius, radius, count)
    th_m = th_m0 + rng.uniform(-radius, radius, count)
    return assemble_unitary_symmetric(t_mag, th_t, th_p, th_m)
