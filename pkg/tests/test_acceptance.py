"""Acceptance suite: one test per release criterion, at stated tolerances.

Each test prints a single [criterion NN] PASS/FAIL line (visible with
pytest -s) and asserts the same condition.  The production discretization is
the one used throughout: P2 elements on a 200 x 20 grid of the strip with
ell = 5 and a 10-term transparent boundary condition.
"""

import time

import numpy as np
import pytest

from waveinvis import (Discretization, MaterialField, ObstacleRegion,
                       Partition, Rectangle, WaveguideConfig, WaveguideSolver,
                       constrained_feasibility, continuation_run,
                       default_seed_field, full_invisibility, gram_basis,
                       kernel_element, reflection_only, relative_generic,
                       relative_real_t, relative_t_zero, scattering_matrix,
                       scattering_differential, select_relative_functional,
                       single_mode_energy, single_mode_phase, verify_structure)
from waveinvis.errors import DegenerateSeedError, SingularGramError
from waveinvis.geometry import Disc, Ellipse
from waveinvis.oracles import (assemble_unitary_symmetric, explicit_dR0,
                               half_wave_thickness, sample_near,
                               slab_scattering_1d)

K_VALUES = (0.8 * np.pi, 4.0, 7.0)
ELL = 5.0
DEFAULT = Discretization(nx=200, ny=20, order=2, dtn_terms=10)
BOX = Rectangle(-1.0, 1.0, 0.25, 0.75)


def report(criterion: int, ok: bool, detail: str):
    print(f"[criterion {criterion:02d}] {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def build(k, obstacle=None, disc=DEFAULT):
    obstacle = obstacle or ObstacleRegion([BOX])
    return WaveguideSolver(WaveguideConfig(k=k, ell=ELL, obstacle=obstacle), disc)


@pytest.fixture(scope="module")
def solvers():
    return {k: build(k) for k in K_VALUES}


def piecewise_random(grid, seed, amplitude=0.5, cells_x=4, cells_y=2, box=BOX):
    """Random piecewise-constant material on a grid split of the box."""
    rng = np.random.default_rng(seed)
    xs = np.linspace(box.x0, box.x1, cells_x + 1)
    ys = np.linspace(box.y0, box.y1, cells_y + 1)
    pieces = []
    for i in range(cells_x):
        for j in range(cells_y):
            pieces.append((Rectangle(xs[i], xs[i + 1], ys[j], ys[j + 1]),
                           rng.uniform(-amplitude, amplitude)))
    return grid.from_pieces(pieces)


def test_criterion_01_transparency_baseline(solvers):
    worst_dev, worst_ratio, worst_time = 0.0, np.inf, 0.0
    for k in K_VALUES:
        t0 = time.perf_counter()
        dev = scattering_matrix(solvers[k], solvers[k].grid.zeros()) \
            .smatrix.deviation_from_reference()
        fine = build(k, disc=DEFAULT.refined())
        dev_fine = scattering_matrix(fine, fine.grid.zeros()) \
            .smatrix.deviation_from_reference()
        elapsed = time.perf_counter() - t0
        worst_dev = max(worst_dev, dev)
        worst_ratio = min(worst_ratio, dev / dev_fine)
        worst_time = max(worst_time, elapsed)
    ok = worst_dev < 1e-3 and worst_ratio >= 8.0 and worst_time < 30.0
    report(1, ok, f"max ||S - S_empty|| = {worst_dev:.2e} (< 1e-3), "
                  f"refinement drop {worst_ratio:.1f}x (>= 8), "
                  f"slowest wavenumber {worst_time:.1f}s (< 30s)")


def test_criterion_02_structure_residuals(solvers):
    t0 = time.perf_counter()
    worst = {"symmetry": 0.0, "unitarity": 0.0, "relation": 0.0,
             "volume_symmetry": 0.0, "volume_unitarity": 0.0}
    for k in K_VALUES:
        solver = solvers[k]
        for trial in range(20):
            rho = piecewise_random(solver.grid, seed=1000 * int(k) + trial)
            rep = verify_structure(scattering_matrix(solver, rho))
            for key in worst:
                worst[key] = max(worst[key], getattr(rep, key))
    elapsed = time.perf_counter() - t0
    ok = (worst["symmetry"] < 1e-3 and worst["unitarity"] < 1e-3
          and worst["volume_symmetry"] < 1e-3 and worst["volume_unitarity"] < 1e-3
          and worst["relation"] < 1e-2 and elapsed < 300.0)
    report(2, ok, f"sym {worst['symmetry']:.1e}, unit {worst['unitarity']:.1e}, "
                  f"volume sym/unit {worst['volume_symmetry']:.1e}/"
                  f"{worst['volume_unitarity']:.1e} (< 1e-3), "
                  f"conj(S)U=conj(U) {worst['relation']:.1e} (< 1e-2), "
                  f"{elapsed:.0f}s (< 300s)")


def test_criterion_03_slab_oracle():
    t0 = time.perf_counter()
    k = 0.8 * np.pi
    slab = Rectangle(-1.0, 1.0, 0.0, 1.0)
    solver = build(k, ObstacleRegion([slab]))
    s = scattering_matrix(solver, solver.grid.from_pieces([(slab, 0.1)])).smatrix
    r_o, t_o = slab_scattering_1d(k, 0.1, -1.0, 1.0)
    gap_r = abs(s.Rplus[0, 0] - r_o)
    gap_t = abs(s.Tplus[0, 0] - t_o)

    width = half_wave_thickness(k, 0.1)
    hw = Rectangle(-width / 2, width / 2, 0.0, 1.0)
    hw_solver = build(k, ObstacleRegion([hw]))
    s_hw = scattering_matrix(hw_solver, hw_solver.grid.from_pieces([(hw, 0.1)])).smatrix
    r_hw = abs(s_hw.Rplus[0, 0])
    elapsed = time.perf_counter() - t0
    ok = gap_r < 1e-3 and gap_t < 1e-3 and r_hw < 1e-3 and elapsed < 30.0
    report(3, ok, f"|R - oracle| = {gap_r:.2e}, |T - oracle| = {gap_t:.2e} (< 1e-3), "
                  f"half-wave |R| = {r_hw:.2e} (< 1e-3), {elapsed:.0f}s (< 30s)")


def test_criterion_04_differential_correctness(solvers):
    t0 = time.perf_counter()
    worst_err, worst_ratio = 0.0, 0.0
    for k in K_VALUES:
        solver = solvers[k]
        rng = np.random.default_rng(int(10 * k))
        for trial in range(10):
            rho = piecewise_random(solver.grid, seed=77 + trial)
            mu = MaterialField(solver.grid,
                               25.0 * rng.uniform(-1, 1, solver.grid.shape))
            bundle = scattering_matrix(solver, rho)
            ds = scattering_differential(bundle, mu)
            scale = np.abs(ds).max()
            errs = []
            for h in (1e-3, 1e-4):
                sp = scattering_matrix(solver, rho + h * mu).smatrix.entries
                sm = scattering_matrix(solver, rho + (-h) * mu).smatrix.entries
                errs.append(np.abs((sp - sm) / (2 * h) - ds).max() / scale)
            worst_err = max(worst_err, errs[0])
            worst_ratio = max(worst_ratio, errs[1] / errs[0])

    full = Rectangle(-1.0, 1.0, 0.0, 1.0)
    mono = build(0.8 * np.pi, ObstacleRegion([full]))
    bundle0 = scattering_matrix(mono, mono.grid.zeros())
    mu_ind = mono.grid.from_pieces([(Rectangle(-0.7, 0.3, 0.0, 1.0), 1.0)])
    dr0 = scattering_differential(bundle0, mu_ind)[0, 0]
    gap0 = abs(dr0 - explicit_dR0(0.8 * np.pi, -0.7, 0.3))
    elapsed = time.perf_counter() - t0
    ok = (worst_err < 1e-3 and worst_ratio < 0.05 and gap0 < 1e-4
          and elapsed < 300.0)
    report(4, ok, f"FD error at h=1e-3: {worst_err:.1e} (< 1e-3), "
                  f"h=1e-4/h=1e-3 error ratio {worst_ratio:.3f} (O(h^2): < 0.05), "
                  f"explicit dR(0) gap {gap0:.1e} (< 1e-4), {elapsed:.0f}s (< 300s)")


def test_criterion_05_energy_derivative_identity(solvers):
    t0 = time.perf_counter()
    solver = solvers[0.8 * np.pi]
    rho = piecewise_random(solver.grid, seed=5)
    bundle = scattering_matrix(solver, rho)
    s = bundle.smatrix.entries
    rng = np.random.default_rng(55)
    worst = 0.0
    for _ in range(50):
        mu = MaterialField(solver.grid, rng.uniform(-1, 1, solver.grid.shape))
        ds = scattering_differential(bundle, mu)
        resid = abs((np.conj(s[0, 0]) * ds[0, 0]
                     + np.conj(s[0, 1]) * ds[0, 1]).real)
        worst = max(worst, resid / mu.l2())
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and elapsed < 60.0
    report(5, ok, f"max |Re(conj(R+) dR+ + conj(T) dT)| / ||mu|| = {worst:.1e} "
                  f"(< 1e-6), {elapsed:.0f}s (< 60s)")


def test_criterion_06_reflection_invisibility_monomode(solvers):
    t0 = time.perf_counter()
    solver = solvers[0.8 * np.pi]
    out = continuation_run(solver, solver.grid.zeros(), reflection_only(1),
                           steps=3, seed=0)
    reflections = []
    for mat in out.materials:
        fresh = scattering_matrix(solver, mat)  # independent re-verification
        reflections.append(abs(fresh.smatrix.Rplus[0, 0]))
    sups = [m.linf() for m in out.materials]
    elapsed = time.perf_counter() - t0
    ok = (out.completed and len(out.materials) == 3
          and max(reflections) < 1e-5
          and all(b > a for a, b in zip(sups, sups[1:]))
          and elapsed < 600.0)
    report(6, ok, f"|R+| per accepted step: {[f'{r:.1e}' for r in reflections]} "
                  f"(< 1e-5), sup|rho| strictly increasing {np.round(sups, 3)}, "
                  f"{elapsed:.0f}s (< 600s)")


def test_criterion_07_full_invisibility_monomode(solvers):
    t0 = time.perf_counter()
    solver = solvers[0.8 * np.pi]
    out = continuation_run(solver, solver.grid.zeros(), full_invisibility(1),
                           steps=3, seed=0)
    final = scattering_matrix(solver, out.materials[-1])
    r_final = abs(final.smatrix.Rplus[0, 0])
    t_final = abs(final.smatrix.Tplus[0, 0] - 1.0)
    traces = [solver.scattered_trace_norm(final.fields, 0, side)
              for side in (-1, +1)]
    elapsed = time.perf_counter() - t0
    ok = (out.completed and r_final < 1e-5 and t_final < 1e-5
          and max(traces) < 1e-3 and elapsed < 600.0)
    report(7, ok, f"final |R+| = {r_final:.1e}, |T - 1| = {t_final:.1e} (< 1e-5), "
                  f"scattered trace norms {traces[0]:.1e}/{traces[1]:.1e} (< 1e-3), "
                  f"{elapsed:.0f}s (< 600s)")


def test_criterion_08_relative_invisibility(solvers):
    t0 = time.perf_counter()
    solver = solvers[0.8 * np.pi]
    rho0 = piecewise_random(solver.grid, seed=88, amplitude=0.5)
    bundle0 = scattering_matrix(solver, rho0)
    spec = select_relative_functional(bundle0.smatrix)
    out = continuation_run(solver, rho0, spec, steps=1, seed=2,
                           start_bundle=bundle0)
    s_gap = np.abs(out.bundles[-1].smatrix.entries - bundle0.smatrix.entries).max()
    rho_gap = (out.materials[-1] - rho0).linf()

    # the reference T0 = 0 geometry is out of scope; the functional logic is
    # checked by brute force on sampled unitary symmetric matrices instead
    def equivalence_holds(s0, spec_builder):
        fspec = spec_builder(s0)
        complete = np.abs(fspec.evaluate(s0) - fspec.target).max() < 1e-12
        samples = sample_near(s0, 0.3, seed=9, count=10000)
        fvals = np.stack([np.abs(fspec.evaluate(s) - fspec.target).max()
                          for s in samples])
        dist = np.abs(samples - s0).max(axis=(1, 2))
        near_zero = fvals < 1e-3
        sound = (not near_zero.any()) or dist[near_zero].max() < 1e-2
        separated = fvals[dist > 5e-2].min() > 1e-3
        return complete and sound and separated

    tz_ok = equivalence_holds(assemble_unitary_symmetric(0.0, 0.3, 1.1, 2.4)[0],
                              relative_t_zero)
    gen_ok = equivalence_holds(assemble_unitary_symmetric(0.8, 0.6, 1.0, 0.0)[0],
                               relative_generic)
    elapsed = time.perf_counter() - t0
    ok = (out.completed and s_gap < 1e-5 and rho_gap > 1e-3
          and tz_ok and gen_ok and elapsed < 600.0)
    report(8, ok, f"{spec.variant}: ||S(rho1) - S(rho0)|| = {s_gap:.1e} (< 1e-5), "
                  f"||rho1 - rho0|| = {rho_gap:.2f} (> 1e-3), "
                  f"T0=0 equivalence {tz_ok}, generic equivalence {gen_ok}, "
                  f"{elapsed:.0f}s (< 600s)")


def test_criterion_09_multimode_non_reflection(solvers):
    t0 = time.perf_counter()
    out7 = continuation_run(solvers[7.0], solvers[7.0].grid.zeros(),
                            reflection_only(3), steps=3, seed=0)
    worst7 = max(np.abs(b.smatrix.Rplus).max() for b in out7.bundles)

    mixed = ObstacleRegion([Rectangle(-1.5, 0.2, 0.1, 0.6),
                            Ellipse(0.8, 0.55, 0.5, 0.3)])
    solver4 = build(4.0, mixed)
    out4 = continuation_run(solver4, solver4.grid.zeros(), reflection_only(2),
                            steps=1, seed=0)
    worst4 = np.abs(out4.bundles[-1].smatrix.Rplus).max()
    elapsed = time.perf_counter() - t0
    ok = (out7.completed and len(out7.materials) == 3 and worst7 < 1e-4
          and out4.completed and worst4 < 1e-4 and elapsed < 1800.0)
    report(9, ok, f"k=7 (12 constraints, 3 steps) max |R+_mn| = {worst7:.1e}, "
                  f"k=4 (6 constraints) max |R+_mn| = {worst4:.1e} (< 1e-4), "
                  f"{elapsed:.0f}s (< 1800s)")


def test_criterion_10_piecewise_constant_constraints(solvers):
    t0 = time.perf_counter()
    # monomode full invisibility; d = 3 needs at least 4 cells for a
    # nontrivial kernel (with exactly d cells the only solution is rho_n)
    cells = [Rectangle(-1.1 + 0.55 * i, -0.55 + 0.55 * i, 0.2, 0.8)
             for i in range(4)]
    solver = build(0.8 * np.pi, ObstacleRegion(cells))
    part = Partition(cells)
    out = continuation_run(solver, solver.grid.zeros(), full_invisibility(1),
                           steps=1, seed=0, partition=part)
    final = scattering_matrix(solver, out.materials[-1])
    var = part.rasterize(solver.grid).cell_variances(out.materials[-1].values).max()
    r_mono = abs(final.smatrix.Rplus[0, 0])
    t_mono = abs(final.smatrix.Tplus[0, 0] - 1.0)

    # with exactly d cells the degeneracy is reported, not silently absorbed
    cells3 = cells[:3]
    solver3 = build(0.8 * np.pi, ObstacleRegion(cells3))
    try:
        continuation_run(solver3, solver3.grid.zeros(), full_invisibility(1),
                         steps=1, partition=Partition(cells3))
        exact_d_diagnosed = False
    except DegenerateSeedError:
        exact_d_diagnosed = True

    # 30 circular inclusions, 12 reflection constraints at k = 7
    discs = [Disc(-2.25 + 0.5 * i, 0.2 + 0.3 * j, 0.1)
             for i in range(10) for j in range(3)]
    solver30 = WaveguideSolver(
        WaveguideConfig(k=7.0, ell=ELL, obstacle=ObstacleRegion(discs)),
        Discretization(nx=400, ny=40))
    out30 = continuation_run(solver30, solver30.grid.zeros(), reflection_only(3),
                             steps=1, seed=0, partition=Partition(discs))
    var30 = Partition(discs).rasterize(solver30.grid) \
        .cell_variances(out30.materials[-1].values).max()
    r30 = np.abs(out30.bundles[-1].smatrix.Rplus).max()

    # infeasible cell counts produce the documented errors
    two = Partition(cells[:2])
    infeasible = not constrained_feasibility(two, 3).feasible
    bundle = scattering_matrix(solver, solver.grid.zeros())
    try:
        gram_basis(full_invisibility(1), bundle, two)
        gram_error = False
    except SingularGramError:
        gram_error = True
    elapsed = time.perf_counter() - t0
    ok = (out.completed and var < 1e-16 and r_mono < 1e-5 and t_mono < 1e-5
          and exact_d_diagnosed
          and out30.completed and var30 < 1e-16 and r30 < 1e-4
          and infeasible and gram_error and elapsed < 1800.0)
    report(10, ok, f"4-cell invisibility: |R+| = {r_mono:.1e}, |T-1| = {t_mono:.1e}, "
                   f"cell variance {var:.1e}; 30-disc k=7: max |R+| = {r30:.1e}, "
                   f"variance {var30:.1e}; S=d diagnosed: {exact_d_diagnosed}; "
                   f"S=2 < d=3 rejected: {infeasible and gram_error}; "
                   f"{elapsed:.0f}s (< 1800s)")


def test_criterion_11_right_inverse_and_kernel(solvers):
    t0 = time.perf_counter()
    solver = solvers[0.8 * np.pi]
    bundle0 = scattering_matrix(solver, solver.grid.zeros())
    rho = piecewise_random(solver.grid, seed=11, amplitude=0.4)
    bundle1 = scattering_matrix(solver, rho)
    t_zero_ref = assemble_unitary_symmetric(0.0, 0.0, np.pi / 2, 0.0)[0]

    def variants(bundle):
        yield reflection_only(1)
        yield single_mode_energy(1)
        yield single_mode_phase(1)
        yield full_invisibility(1)
        yield relative_real_t(bundle.smatrix)
        yield relative_generic(bundle.smatrix)
        yield relative_t_zero(t_zero_ref)  # synthetic zero-transmission reference

    worst_delta, worst_kernel = 0.0, 0.0
    count = 0
    for bundle in (bundle0, bundle1):
        for spec in variants(bundle):
            basis = gram_basis(spec, bundle)
            delta = np.array([basis.pairing(mu_j) for mu_j in basis.basis])
            worst_delta = max(worst_delta,
                              np.abs(delta - np.eye(spec.dimension)).max())
            mu0 = kernel_element(basis, default_seed_field(solver.grid, 3))
            worst_kernel = max(worst_kernel,
                               np.abs(basis.pairing(mu0)).max() / mu0.l2())
            count += 1

    multi = solvers[4.0]
    bundle_m = scattering_matrix(multi, piecewise_random(multi.grid, seed=12))
    for spec in (reflection_only(2), single_mode_energy(2, 1),
                 single_mode_phase(2, 0), full_invisibility(2)):
        basis = gram_basis(spec, bundle_m)
        delta = np.array([basis.pairing(mu_j) for mu_j in basis.basis])
        worst_delta = max(worst_delta,
                          np.abs(delta - np.eye(spec.dimension)).max())
        mu0 = kernel_element(basis, default_seed_field(multi.grid, 3))
        worst_kernel = max(worst_kernel,
                           np.abs(basis.pairing(mu0)).max() / mu0.l2())
        count += 1
    elapsed = time.perf_counter() - t0
    ok = worst_delta < 1e-8 and worst_kernel < 1e-8 and elapsed < 120.0
    report(11, ok, f"{count} variant/material combinations: "
                   f"max |dF_i(mu_j) - delta_ij| = {worst_delta:.1e} (< 1e-8), "
                   f"max |dF(mu_0)|/||mu_0|| = {worst_kernel:.1e} (< 1e-8), "
                   f"{elapsed:.0f}s (< 120s)")
