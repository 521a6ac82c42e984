"""Shared fixtures: the default multistable pairing, its waves and a reference run."""

from pathlib import Path

import numpy as np
import pytest

from degwave import solver, stationary, waves
from degwave.nonlinearity import DiffusionSpec, PressureMaps, ReactionSpec

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

# frozen reference speeds (shooting at tol 1e-8)
C_S_DEFAULT = 0.5291217634
C_Z_DEFAULT = 0.6054917
C_B_DEFAULT = 0.5346256


@pytest.fixture(scope="session")
def configs_dir():
    return CONFIGS


@pytest.fixture(scope="session")
def quad2():
    return DiffusionSpec.power(2.0)


@pytest.fixture(scope="session")
def quartic():
    return ReactionSpec.quartic()


@pytest.fixture(scope="session")
def maps(quad2, quartic):
    return PressureMaps(quad2, quartic)


@pytest.fixture(scope="session")
def oracle_maps(quad2):
    return PressureMaps(quad2, ReactionSpec.logistic())


@pytest.fixture(scope="session")
def summary(maps):
    return waves.compute_all(maps)


@pytest.fixture(scope="session")
def ground(quad2, quartic):
    return stationary.build_profile("GroundState", None, quad2, quartic)


@pytest.fixture(scope="session")
def small_run(quad2, quartic):
    """Default small-spreading run with snapshots every 0.5."""
    u0 = solver.InitialDataSpec("cos2", b=1.0, sigma=0.5)
    grid = solver.Grid1D(-40.0, 40.0, 0.01, symmetric=True)
    return solver.simulate(quad2, quartic, u0, grid, T=40.0, dt_out=0.1,
                           snapshot_times=np.arange(0.0, 40.0 + 1e-9, 0.5))
