"""
Fixtures partagées des tests.
"""

from pathlib import Path

import numpy as np
import pytest

from src.config import get_settings
from src.models import PhysParams, TimeScheme
from src.numerics.grid import Field, make_grid
from src.solver.initial_data import InitialData, build_density, build_temperature
from src.solver.profiles import distance
from src.solver.trajectory import TimeGrid

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Settings rechargés pour chaque test, sans fichier .env local."""
    monkeypatch.delenv("SOLVER_THREADS", raising=False)
    monkeypatch.delenv("DETA_BOUND", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def grid():
    """Grille grossière 8×8×9."""
    return make_grid(8, 8, 9)


@pytest.fixture
def params() -> PhysParams:
    return PhysParams()


@pytest.fixture
def vacuum_data(grid) -> InitialData:
    """Jeu par défaut : ρ₀ = d, θ₀ = d, u₀ = 0."""
    rho0, norms = build_density(grid, 1.0)
    theta0, record = build_temperature(grid, lambda x1, x2, x3: distance(x3))
    return InitialData(
        rho0=rho0,
        u0=Field.zeros(grid, 3),
        theta0=theta0,
        alpha=1.0,
        density_norms=norms,
        normal_derivative=record,
    )


@pytest.fixture
def short_time_grid() -> TimeGrid:
    return TimeGrid(0.001, 4, TimeScheme.CRANK_NICOLSON)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
