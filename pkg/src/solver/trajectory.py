"""
Grille temporelle et trajectoires (η, v, Θ) échantillonnées aux pas de temps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from src.exceptions import ConfigValidationError, DegenerateJacobian, GridMismatch, InsufficientHistory
from src.models import TimeScheme
from src.numerics.grid import Field, GridSpec, readonly_array
from src.numerics.kinematics import Deformation, FlowMap, advance_flow_map, compute_deformation, identity_flow_map
from src.numerics.operators import StateSlice
from src.solver.initial_data import DerivedInitials

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimeGrid:
    """Horizon T découpé en n_steps pas égaux."""
    T: float
    n_steps: int
    scheme: TimeScheme = TimeScheme.CRANK_NICOLSON

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigValidationError(f"horizon T = {self.T} doit être > 0")
        if self.n_steps < 1:
            raise ConfigValidationError(f"n_steps = {self.n_steps} doit être ≥ 1")

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)

    def coefficient_time(self, n: int) -> float:
        """Instant d'échantillonnage des coefficients du pas n → n+1."""
        if self.scheme is TimeScheme.CRANK_NICOLSON:
            return (n + 0.5) * self.dt
        return (n + 1) * self.dt


def interpolated_velocity(grid: GridSpec, velocities: np.ndarray, tg: TimeGrid):
    """Évaluateur temps → Field, linéaire par morceaux entre les pas."""

    def evaluate(time: float) -> Field:
        s = min(max(time / tg.dt, 0.0), float(tg.n_steps))
        n = min(int(np.floor(s)), tg.n_steps - 1)
        theta = s - n
        return Field(grid, (1.0 - theta) * velocities[n] + theta * velocities[n + 1])

    return evaluate


def transport_flow_map(grid: GridSpec, velocities: np.ndarray, tg: TimeGrid) -> np.ndarray:
    """
    Intègre η_t = v depuis η(0) = Id.

    Returns:
        Positions (n_steps + 1, 3, n3, n2, n1)
    """
    evaluator = interpolated_velocity(grid, velocities, tg)
    flow = identity_flow_map(grid)
    etas = [flow.eta.values]
    for _ in range(tg.n_steps):
        flow = advance_flow_map(flow, evaluator, tg.dt)
        etas.append(flow.eta.values)
    return np.stack(etas)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Historique (η, v, Θ) sur une grille temporelle.

    Les déformations sont calculées à la demande et mises en cache ; les
    dérivées temporelles utilisent des différences rétrogrades d'ordre 2
    quand l'historique le permet, d'ordre 1 sinon, et les DerivedInitials
    aux pas 0 et 1.
    """
    time_grid: TimeGrid
    grid: GridSpec
    eta: np.ndarray
    v: np.ndarray
    Theta: np.ndarray
    derived: DerivedInitials | None = None

    def __post_init__(self):
        n = self.time_grid.n_steps + 1
        shapes = {
            "eta": (n, 3, *self.grid.shape),
            "v": (n, 3, *self.grid.shape),
            "Theta": (n, 1, *self.grid.shape),
        }
        for name, shape in shapes.items():
            values = np.asarray(getattr(self, name), dtype=np.float64)
            if name == "Theta" and values.shape == (n, *self.grid.shape):
                values = values[:, None]
            if values.shape != shape:
                raise GridMismatch(f"{name} de forme {values.shape}, attendu {shape}")
            object.__setattr__(self, name, readonly_array(values))

    # -------------------------------------------------------------------------
    # Accès aux états
    # -------------------------------------------------------------------------

    @property
    def n_steps(self) -> int:
        return self.time_grid.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.time_grid.times

    def velocity(self, n: int) -> Field:
        return Field(self.grid, self.v[n])

    def temperature(self, n: int) -> Field:
        return Field(self.grid, self.Theta[n])

    def flow_map(self, n: int) -> FlowMap:
        return FlowMap(Field(self.grid, self.eta[n]), float(self.times[n]))

    @cached_property
    def deformations(self) -> tuple[Deformation, ...]:
        cache = []
        for n in range(self.n_steps + 1):
            defm = compute_deformation(self.flow_map(n))
            if defm.J.scalar.min() <= 0.0:
                raise DegenerateJacobian(f"J ≤ 0 au pas {n}")
            cache.append(defm)
        return tuple(cache)

    def deformation(self, n: int) -> Deformation:
        return self.deformations[n]

    def slice(self, n: int) -> StateSlice:
        return StateSlice(self.velocity(n), self.temperature(n), self.deformation(n), float(self.times[n]))

    def with_derived(self, derived: DerivedInitials | None) -> Trajectory:
        return replace(self, derived=derived)

    # -------------------------------------------------------------------------
    # Différences rétrogrades
    # -------------------------------------------------------------------------

    def _first(self, series: np.ndarray, n: int, rate0: Field | None) -> np.ndarray:
        dt = self.time_grid.dt
        if n >= 2:
            return (3.0 * series[n] - 4.0 * series[n - 1] + series[n - 2]) / (2.0 * dt)
        if rate0 is None:
            raise InsufficientHistory(f"dérivée en temps au pas {n} sans dérivées initiales")
        if n == 0:
            return rate0.values
        return 2.0 * (series[1] - series[0]) / dt - rate0.values

    def _second(self, series: np.ndarray, n: int, rate0: Field | None, accel0: Field | None) -> np.ndarray:
        dt = self.time_grid.dt
        if n >= 3:
            return (2.0 * series[n] - 5.0 * series[n - 1] + 4.0 * series[n - 2] - series[n - 3]) / dt**2
        if n == 2:
            return (series[2] - 2.0 * series[1] + series[0]) / dt**2
        if rate0 is None or accel0 is None:
            raise InsufficientHistory(f"dérivée seconde au pas {n} sans dérivées initiales")
        if n == 0:
            return accel0.values
        return 2.0 * (series[1] - series[0] - dt * rate0.values) / dt**2

    def _check_step(self, n: int) -> None:
        if not 0 <= n <= self.n_steps:
            raise InsufficientHistory(f"pas {n} hors de [0, {self.n_steps}]")

    def v_t(self, n: int) -> Field:
        self._check_step(n)
        rate = self.derived.u0t if self.derived else None
        return Field(self.grid, self._first(self.v, n, rate))

    def v_tt(self, n: int) -> Field:
        self._check_step(n)
        d = self.derived
        return Field(self.grid, self._second(self.v, n, d.u0t if d else None, d.u0tt if d else None))

    def Theta_t(self, n: int) -> Field:
        self._check_step(n)
        rate = self.derived.theta0t if self.derived else None
        return Field(self.grid, self._first(self.Theta, n, rate))

    def Theta_tt(self, n: int) -> Field:
        self._check_step(n)
        d = self.derived
        return Field(
            self.grid, self._second(self.Theta, n, d.theta0t if d else None, d.theta0tt if d else None)
        )


def constant_trajectory(
    grid: GridSpec, tg: TimeGrid, u0: Field, theta0: Field, derived: DerivedInitials | None = None
) -> Trajectory:
    """Itéré initial : v ≡ u₀, Θ ≡ θ₀, η transporté par u₀ (η = Id + t·u₀)."""
    n = tg.n_steps + 1
    v = np.broadcast_to(u0.values, (n, *u0.values.shape)).copy()
    theta = np.broadcast_to(theta0.values, (n, *theta0.values.shape)).copy()
    return Trajectory(tg, grid, transport_flow_map(grid, v, tg), v, theta, derived)
