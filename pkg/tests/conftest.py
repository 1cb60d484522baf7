import numpy as np
import pytest

from waveinvis import (Discretization, ObstacleRegion, Rectangle,
                       WaveguideConfig, WaveguideSolver)

K_MONO = 0.8 * np.pi


def make_solver(k=K_MONO, ell=3.0, obstacle=None, nx=120, ny=16, order=2,
                dtn_terms=10):
    obstacle = obstacle or ObstacleRegion([Rectangle(-1.0, 1.0, 0.25, 0.75)])
    config = WaveguideConfig(k=k, ell=ell, obstacle=obstacle)
    return WaveguideSolver(config, Discretization(nx=nx, ny=ny, order=order,
                                                  dtn_terms=dtn_terms))


@pytest.fixture(scope="session")
def mono_solver():
    """Small monomode solver shared by fast tests."""
    return make_solver()


@pytest.fixture(scope="session")
def multi_solver():
    """Two propagating modes on a small mesh."""
    return make_solver(k=4.0)


@pytest.fixture(scope="session")
def mono_bundle(mono_solver):
    from waveinvis import scattering_matrix

    return scattering_matrix(mono_solver, mono_solver.grid.zeros())
