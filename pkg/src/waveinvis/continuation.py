"""Fixed-point continuation on the level set F(rho) = target.

One step perturbs rho_n to rho_n + eps (mu_0 + sum_j tau_j mu_j), where the
mu_j form a right inverse of dF(rho_n) (built by inverting the Gram matrix
of the density functions) and mu_0 is a kernel direction.  The tau vector
solves a small fixed-point equation by Picard iteration,

    tau^{p+1} = tau^p + (target - F(rho_n + eps mu^p)) / eps,

each sweep costing one full scattering solve.  Accepted iterates satisfy
|F - target| <= eps * eta by the stopping rule.  The outer loop rebuilds
the basis at every accepted step and adapts eps: halved after a divergence,
grown by 1.5 (capped at the initial value) after fast convergence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import Partition, RasterizedPartition, project_density
from .errors import DegenerateSeedError, DivergenceError, SingularGramError
from .fem import WaveguideSolver
from .functionals import FunctionalSpec
from .materials import MaterialField, MaterialGrid
from .scattering import FieldBundle, scattering_matrix

DEFAULT_EPSILON = 0.5
DEFAULT_ETA = 1e-8
DEFAULT_MAX_ITER = 50
DEFAULT_TRUST_RADIUS = 10.0
DEFAULT_ACCEPTANCE_TOL = 1e-6
MAX_HALVINGS = 6
GRAM_CONDITION_LIMIT = 1e12

SEED_POLYNOMIALS = ((0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2))


@dataclass
class GramBasis:
    """Right-inverse basis mu_1..mu_d with dF_i(mu_j) = delta_ij."""

    spec: FunctionalSpec
    densities: np.ndarray = field(repr=False)  # (d, n_oe, nq), projected if constrained
    gram: np.ndarray = field(repr=False)
    inverse: np.ndarray = field(repr=False)
    condition: float = 0.0
    basis: list[MaterialField] = field(default_factory=list, repr=False)
    raster: RasterizedPartition | None = field(default=None, repr=False)

    def pairing(self, mu: MaterialField) -> np.ndarray:
        """dF(mu): integrals of mu against every density."""
        w = mu.grid.quad_w
        return np.einsum("dij,ij->d", self.densities, w * mu.values)


def gram_basis(spec: FunctionalSpec, bundle: FieldBundle,
               partition: Partition | None = None,
               condition_limit: float = GRAM_CONDITION_LIMIT) -> GramBasis:
    """Build the basis from the density functions at the bundle's material.

    With a partition the densities are first L2-projected onto the span of
    the cell indicators, so the basis (and every continuation iterate built
    from it) is piecewise constant.  Raises SingularGramError when the
    (projected) densities are numerically dependent: too coarse a partition,
    or a configuration where the differential loses ontoness.
    """
    grid = bundle.solver.grid
    f = spec.densities(bundle)
    raster = None
    if partition is not None:
        raster = partition.rasterize(grid)
        f = np.stack([raster.project_values(fi) for fi in f])
    d = spec.dimension
    flat = f.reshape(d, -1)
    w = grid.quad_w.ravel()
    gram = (flat * w) @ flat.T
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond > condition_limit:
        hint = ""
        if raster is not None and raster.n_cells < d:
            hint = f" ({raster.n_cells} cells for {d} constraints)"
        raise SingularGramError(
            f"Gram matrix of the {spec.variant} densities is singular "
            f"(condition {cond:.2e}){hint}"
        )
    inverse = np.linalg.inv(gram)
    mu = [MaterialField(grid, np.einsum("i,iab->ab", inverse[j], f))
          for j in range(d)]
    return GramBasis(spec=spec, densities=f, gram=gram, inverse=inverse,
                     condition=cond, basis=mu, raster=raster)


def kernel_element(basis: GramBasis, seed: MaterialField,
                   tol: float = 1e-10) -> MaterialField:
    """Project a seed onto ker dF: mu0 = seed - sum_j dF_j(seed) mu_j."""
    coeffs = basis.pairing(seed)
    mu0 = seed
    for c, mu_j in zip(coeffs, basis.basis):
        mu0 = mu0 - float(c) * mu_j
    scale = max(seed.l2(), 1e-300)
    if mu0.l2() <= tol * scale:
        raise DegenerateSeedError(
            "seed lies in the span of the constraint basis; kernel projection vanished"
        )
    return mu0


def default_seed_field(grid: MaterialGrid, seed: int = 0) -> MaterialField:
    """Deterministic pseudorandom seed direction.

    A fixed-seed Gaussian combination of the first six tensor Legendre
    polynomials on the obstacle bounding box, restricted to the obstacle.
    """
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(len(SEED_POLYNOMIALS))
    x0, x1, y0, y1 = grid.region.bounding_box
    xs = 2.0 * (grid.quad_x - x0) / (x1 - x0) - 1.0
    ys = 2.0 * (grid.quad_y - y0) / (y1 - y0) - 1.0
    values = np.zeros(grid.shape)
    for c, (i, j) in zip(coeffs, SEED_POLYNOMIALS):
        pi = np.polynomial.legendre.Legendre.basis(i)(xs)
        pj = np.polynomial.legendre.Legendre.basis(j)(ys)
        values += c * pi * pj
    return MaterialField(grid, values)


@dataclass
class FixedPointResult:
    tau: np.ndarray
    iterations: int
    material: MaterialField = field(repr=False)
    bundle: FieldBundle = field(repr=False)
    direction: MaterialField = field(repr=False)  # accepted mu0 + K(tau)


def fixed_point_step(solver: WaveguideSolver, spec: FunctionalSpec,
                     basis: GramBasis, mu0: MaterialField,
                     base_material: MaterialField, epsilon: float,
                     eta: float = DEFAULT_ETA,
                     max_iter: int = DEFAULT_MAX_ITER,
                     trust_radius: float = DEFAULT_TRUST_RADIUS) -> FixedPointResult:
    """Solve the tau fixed point at one continuation step.

    Starts from tau = 0; every sweep evaluates the functional at the trial
    material (one full scattering solve) and updates tau.  Raises
    DivergenceError when tau leaves the trust ball or the sweep budget is
    spent; the caller retries with a smaller epsilon.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must positive")
    target = spec.target
    tau = np.zeros(spec.dimension)
    for p in range(max_iter):
        direction = mu0
        for t_j, mu_j in zip(tau, basis.basis):
            direction = direction + float(t_j) * mu_j
        trial = base_material + epsilon * direction
        bundle = scattering_matrix(solver, trial)
        value = spec.evaluate(bundle.smatrix)
        tau_next = tau + (target - value) / epsilon
        if np.abs(tau_next).max() > trust_radius:
            raise DivergenceError(
                f"|tau| = {np.abs(tau_next).max():.3g} left the trust ball "
                f"after {p + 1} sweeps (epsilon = {epsilon:.3g})"
            )
        if np.abs(tau_next - tau).max() <= eta:
            if direction.l2() <= 1e-6:
                raise DivergenceError("accepted perturbation is numerically zero")
            return FixedPointResult(tau=tau, iterations=p + 1, material=trial,
                                    bundle=bundle, direction=direction)
        tau = tau_next
    raise DivergenceError(
        f"fixed point did not settle within {max_iter} sweeps (epsilon = {epsilon:.3g})"
    )


@dataclass
class StepRecord:
    step: int
    epsilon: float
    iterations: int
    tau_max: float
    residual: float
    gram_condition: float
    material_sup: float
    halvings: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ContinuationResult:
    materials: list[MaterialField] = field(default_factory=list, repr=False)
    bundles: list[FieldBundle] = field(default_factory=list, repr=False)
    records: list[StepRecord] = field(default_factory=list)
    completed: bool = True
    message: str = ""


def continuation_run(solver: WaveguideSolver, rho0: MaterialField,
                     spec: FunctionalSpec, steps: int,
                     seed: int = 0, seed_policy: str = "fixed",
                     epsilon0: float = DEFAULT_EPSILON, eta: float = DEFAULT_ETA,
                     max_iter: int = DEFAULT_MAX_ITER,
                     trust_radius: float = DEFAULT_TRUST_RADIUS,
                     partition: Partition | None = None,
                     acceptance_tol: float = DEFAULT_ACCEPTANCE_TOL,
                     start_bundle: FieldBundle | None = None) -> ContinuationResult:
    """Repeat the perturbative construction ``steps`` times from rho0.

    Every accepted material satisfies |F - target| <= acceptance_tol,
    re-verified by an independent scattering solve (which then seeds the
    next step).  On persistent divergence the partial sequence is returned
    with ``completed = False``.
    """
    if seed_policy not in ("fixed", "per-step"):
        raise ValueError(f"unknown seed policy {seed_policy!r}")
    result = ContinuationResult()
    if steps == 0:
        return result
    bundle = start_bundle or scattering_matrix(solver, rho0)
    material = rho0
    epsilon = epsilon0
    for n in range(1, steps + 1):
        basis = gram_basis(spec, bundle, partition)
        seed_n = seed if seed_policy == "fixed" else seed + n - 1
        raw_seed = default_seed_field(solver.grid, seed_n)
        if basis.raster is not None:
            if basis.raster.n_cells <= spec.dimension:
                # dim(span psi_s) = d makes ker(dF restricted) trivial: the
                # only nearby solution on the level set is rho_n itself
                raise DegenerateSeedError(
                    f"partition has {basis.raster.n_cells} cells for "
                    f"{spec.dimension} constraints: the constrained kernel is "
                    "trivial, no nontrivial step exists; add at least one cell"
                )
            raw_seed = project_density(raw_seed, basis.raster)
        mu0 = kernel_element(basis, raw_seed)
        mu0 = (1.0 / mu0.linf()) * mu0

        halvings = 0
        while True:
            try:
                step = fixed_point_step(solver, spec, basis, mu0, material,
                                        epsilon, eta, max_iter, trust_radius)
                verified = scattering_matrix(solver, step.material)
                residual = spec.residual(verified.smatrix)
                if residual > acceptance_tol:
                    raise DivergenceError(
                        f"verification residual {residual:.3e} above {acceptance_tol:.1e}"
                    )
                break
            except DivergenceError as exc:
                halvings += 1
                if halvings > MAX_HALVINGS:
                    result.completed = False
                    result.message = f"step {n}: {exc} (after {MAX_HALVINGS} halvings)"
                    return result
                epsilon *= 0.5

        material = step.material
        bundle = verified
        result.materials.append(material)
        result.bundles.append(bundle)
        result.records.append(StepRecord(
            step=n, epsilon=epsilon, iterations=step.iterations,
            tau_max=float(np.abs(step.tau).max()), residual=residual,
            gram_condition=basis.condition, material_sup=material.linf(),
            halvings=halvings,
        ))
        if step.iterations <= 3:
            epsilon = min(epsilon * 1.5, epsilon0)
    return result
