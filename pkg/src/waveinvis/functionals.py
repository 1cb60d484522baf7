"""Design functionals built from scattering coefficients.

Every supported functional component is the imaginary part of a fixed
complex-linear combination of scattering entries,

    F_i(S) = Im( sum_e  c_e S[a_e, b_e] ),

(real parts enter as Im(i z)).  This uniform representation gives both the
evaluation and, through dS[a,b](mu) = i k^2 int mu U_a U_b, the density
functions

    f_i = k^2 Re( sum_e c_e U_{a_e} U_{b_e} )

with dF_i(rho)(mu) = int mu f_i, which the Gram construction consumes.

Variants
--------
reflection_only        cancel the upper triangle of R+ (N(N+1) constraints)
single_mode_energy     full transmission in energy for one incident mode
single_mode_phase      same plus a pinned transmission phase
full_invisibility      S equal to the empty-guide matrix (N(2N+1))
relative_real_t        monomode, reference with Re T0 != 0
relative_generic       monomode, reference with T0 != 0
relative_t_zero        monomode, reference with T0 = 0
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .scattering import FieldBundle
from .smatrix import ScatteringMatrix

RELATIVE_VARIANTS = ("relative_real_t", "relative_generic", "relative_t_zero")
INVISIBILITY_VARIANTS = ("reflection_only", "single_mode_energy",
                         "single_mode_phase", "full_invisibility")
DEFAULT_SELECTION_THRESHOLD = 1e-2


@dataclass(frozen=True)
class FunctionalSpec:
    """A map S -> R^d as a list of Im-of-linear-combination components."""

    variant: str
    n_modes: int
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)
    component: np.ndarray = field(repr=False)  # component index per term
    dimension: int = 0
    target: np.ndarray = field(default=None, repr=False)
    reference: np.ndarray | None = field(default=None, repr=False)

    def evaluate(self, s) -> np.ndarray:
        entries = s.entries if isinstance(s, ScatteringMatrix) else np.asarray(s)
        two_n = 2 * self.n_modes
        if entries.shape != (two_n, two_n):
            raise DimensionError(
                f"{self.variant} expects a {two_n}x{two_n} matrix, got {entries.shape}"
            )
        terms = self.coeffs * entries[self.rows, self.cols]
        return np.bincount(self.component, weights=terms.imag,
                           minlength=self.dimension)

    def residual(self, s) -> float:
        return float(np.abs(self.evaluate(s) - self.target).max())

    def densities(self, bundle: FieldBundle) -> np.ndarray:
        """Sampled density functions f_i, shape (d, n_obstacle_elems, nq)."""
        if bundle.n_modes != self.n_modes:
            raise DimensionError(
                f"{self.variant} built for N={self.n_modes}, bundle has N={bundle.n_modes}"
            )
        u = bundle.quad_fields
        k2 = bundle.solver.config.k ** 2
        prod = u[:, :, self.rows] * u[:, :, self.cols] * self.coeffs
        out = np.zeros((self.dimension,) + u.shape[:2])
        for i in range(self.dimension):
            sel = self.component == i
            out[i] = k2 * prod[:, :, sel].real.sum(axis=-1)
        return out


def _build(variant: str, n_modes: int, components, target=None, reference=None):
    rows, cols, coeffs, comp = [], [], [], []
    for i, terms in enumerate(components):
        for (a, b), c in terms:
            rows.append(a)
            cols.append(b)
            coeffs.append(c)
            comp.append(i)
    spec = FunctionalSpec(
        variant=variant, n_modes=n_modes,
        rows=np.array(rows), cols=np.array(cols),
        coeffs=np.array(coeffs, dtype=complex), component=np.array(comp),
        dimension=len(components),
        reference=None if reference is None else np.asarray(reference, dtype=complex),
    )
    if target is None:
        target = np.zeros(spec.dimension)
    object.__setattr__(spec, "target", np.asarray(target, dtype=float))
    return spec


def reflection_only(n_modes: int) -> FunctionalSpec:
    """Cancel R+_mn for m <= n; by symmetry this kills the whole block."""
    comps = []
    for m in range(n_modes):
        for n in range(m, n_modes):
            comps.append([((m, n), 1j)])   # Re R+_mn
            comps.append([((m, n), 1.0)])  # Im R+_mn
    return _build("reflection_only", n_modes, comps)


def single_mode_energy(n_modes: int, mode: int = 0) -> FunctionalSpec:
    """Full transmitted energy for one incident mode: no reflection into any
    mode, no conversion to the other modes (|T_mm| = 1 then follows)."""
    N = n_modes
    comps = []
    for n in range(N):
        comps.append([((mode, n), 1j)])
        comps.append([((mode, n), 1.0)])
    for n in range(N):
        if n != mode:
            comps.append([((mode, N + n), 1j)])
            comps.append([((mode, N + n), 1.0)])
    return _build("single_mode_energy", n_modes, comps)


def single_mode_phase(n_modes: int, mode: int = 0) -> FunctionalSpec:
    """single_mode_energy constraints plus Im T_mm = 0 (T_mm = +1 nearby)."""
    N = n_modes
    comps = []
    for n in range(N):
        comps.append([((mode, n), 1j)])
        comps.append([((mode, n), 1.0)])
    for n in range(N):
        if n != mode:
            comps.append([((mode, N + n), 1j)])
            comps.append([((mode, N + n), 1.0)])
    comps.append([((mode, N + mode), 1.0)])
    return _build("single_mode_phase", n_modes, comps)


def full_invisibility(n_modes: int) -> FunctionalSpec:
    """Drive S to the empty-guide matrix: R+ = 0 and T+ = Id.

    Symmetry and unitarity make the upper triangle of T+ plus the diagonal
    imaginary parts sufficient.
    """
    N = n_modes
    comps = []
    for m in range(N):
        for n in range(m, N):
            comps.append([((m, n), 1j)])
            comps.append([((m, n), 1.0)])
    for m in range(N):
        for n in range(m + 1, N):
            comps.append([((m, N + n), 1j)])
            comps.append([((m, N + n), 1.0)])
    for m in range(N):
        comps.append([((m, N + m), 1.0)])
    return _build("full_invisibility", n_modes, comps)


def _require_monomode(reference) -> np.ndarray:
    ref = reference.entries if isinstance(reference, ScatteringMatrix) else np.asarray(reference)
    if ref.shape != (2, 2):
        raise DimensionError("relative variants are monomode: reference must be 2x2")
    return ref.astype(complex)


def relative_real_t(reference) -> FunctionalSpec:
    """Match (Re R+, Im R+, Im T) to the reference; valid when Re T0 != 0."""
    ref = _require_monomode(reference)
    comps = [[((0, 0), 1j)], [((0, 0), 1.0)], [((0, 1), 1.0)]]
    spec = _build("relative_real_t", 1, comps, reference=ref)
    object.__setattr__(spec, "target", spec.evaluate(ref))
    return spec


def relative_generic(reference) -> FunctionalSpec:
    """Cancel Im M11, Re M21, Im M21 of M = conj(S0) S; valid when T0 != 0."""
    ref = _require_monomode(reference)
    rp0, t0, rm0 = ref[0, 0], ref[1, 0], ref[1, 1]
    comps = [
        [((0, 0), np.conj(rp0)), ((1, 0), np.conj(t0))],          # Im M11
        [((0, 0), 1j * np.conj(t0)), ((1, 0), 1j * np.conj(rm0))],  # Re M21
        [((0, 0), np.conj(t0)), ((1, 0), np.conj(rm0))],          # Im M21
    ]
    spec = _build("relative_generic", 1, comps, reference=ref)
    object.__setattr__(spec, "target", spec.evaluate(ref))
    return spec


def relative_t_zero(reference) -> FunctionalSpec:
    """Pin the reflection phases and kill T; for references with T0 = 0."""
    ref = _require_monomode(reference)
    rp0, rm0 = ref[0, 0], ref[1, 1]
    kappa = np.sqrt(np.conj(rp0) * np.conj(rm0))
    comps = [
        [((0, 0), np.conj(rp0))],
        [((1, 1), np.conj(rm0))],
        [((1, 0), kappa)],
    ]
    spec = _build("relative_t_zero", 1, comps, reference=ref)
    object.__setattr__(spec, "target", spec.evaluate(ref))
    return spec


def select_relative_functional(reference,
                               threshold: float = DEFAULT_SELECTION_THRESHOLD
                               ) -> FunctionalSpec:
    """Pick the relative-invisibility functional suited to the reference.

    |Re T0| > threshold: the plain (Re R+, Im R+, Im T) match works.
    Otherwise |T0| > threshold: the conj(S0) S form.  Otherwise the T0 = 0
    form with pinned reflection phases.
    """
    ref = _require_monomode(reference)
    t0 = ref[0, 1]
    if abs(t0.real) > threshold:
        return relative_real_t(ref)
    if abs(t0) > threshold:
        return relative_generic(ref)
    return relative_t_zero(ref)


def by_name(name: str, n_modes: int, mode: int = 0) -> FunctionalSpec:
    """Instantiate a non-relative variant from its config name."""
    table = {
        "reflection_only": lambda: reflection_only(n_modes),
        "single_mode_energy": lambda: single_mode_energy(n_modes, mode),
        "single_mode_phase": lambda: single_mode_phase(n_modes, mode),
        "full_invisibility": lambda: full_invisibility(n_modes),
    }
    if name not in table:
        raise DimensionError(f"unknown functional variant {name!r}")
    return table[name]()


def evaluate_functional(spec: FunctionalSpec, s) -> np.ndarray:
    return spec.evaluate(s)


@dataclass
class OntonessReport:
    """Gram conditioning plus, in monomode, the theory-backed predicate."""

    variant: str
    gram_condition: float
    predicate_name: str | None = None
    predicate_value: float | None = None
    onto_predicted: bool | None = None
    warning: str | None = None


def ontoness_diagnostic(spec: FunctionalSpec, bundle: FieldBundle,
                        threshold: float = DEFAULT_SELECTION_THRESHOLD
                        ) -> OntonessReport:
    """Report whether the differential can be expected to be onto.

    Monomode variants come with sharp predicates on the transmission
    coefficient; in multimode only the Gram condition number is available.
    """
    f = spec.densities(bundle)
    d = spec.dimension
    flat = f.reshape(d, -1)
    w = bundle.solver.grid.quad_w.ravel()
    gram = (flat * w) @ flat.T
    cond = float(np.linalg.cond(gram))
    report = OntonessReport(variant=spec.variant, gram_condition=cond)
    if spec.n_modes != 1:
        return report

    t_now = complex(bundle.smatrix.entries[0, 1])
    predicates = {
        "reflection_only": ("|T|", abs(t_now)),
        "single_mode_energy": ("|T|", abs(t_now)),
        "single_mode_phase": ("|Re T|", abs(t_now.real)),
        "full_invisibility": ("|Re T|", abs(t_now.real)),
    }
    if spec.variant in predicates:
        name, value = predicates[spec.variant]
    elif spec.variant == "relative_real_t":
        name, value = "|Re T0|", abs(complex(spec.reference[0, 1]).real)
    elif spec.variant == "relative_generic":
        name, value = "|T0|", abs(complex(spec.reference[0, 1]))
    else:  # relative_t_zero: onto whenever T0 = 0, no predicate to cross
        report.predicate_name = "none (onto for T0 = 0)"
        report.onto_predicted = True
        return report
    report.predicate_name = name
    report.predicate_value = value
    report.onto_predicted = bool(value > threshold)
    if not report.onto_predicted:
        report.warning = (
            f"{name} = {value:.3e} is below {threshold}: the differential "
            "is predicted to lose ontoness here"
        )
    return report
