"""
Opérateur de résolution Ξ, distance de V_T, itération de point fixe
et étude de contraction en fonction de l'horizon T.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from src.config import get_settings
from src.diagnostics.norms import sobolev_seminorms_sq
from src.exceptions import (
    AprioriViolated,
    ConfigValidationError,
    GridMismatch,
    MaxIterExceeded,
    NonContraction,
)
from src.models import ContractionRow, IterationRecord, IterationReport, PhysParams, TimeScheme
from src.numerics.grid import Field, integrate_array
from src.numerics.kinematics import check_apriori
from src.numerics.operators import momentum_residual, temperature_residual
from src.solver.initial_data import DerivedInitials, InitialData
from src.solver.linear_solver import BasisSet, FrozenCoefficients, solve_temperature, solve_velocity
from src.solver.profiles import distance
from src.solver.trajectory import TimeGrid, Trajectory, constant_trajectory, transport_flow_map

logger = logging.getLogger(__name__)

NON_CONTRACTION_ADVICE = "réduire l'horizon T : l'existence n'est garantie que pour T assez petit"


@dataclass(frozen=True)
class FixedPointResult:
    solution: Trajectory
    report: IterationReport


def apply_Xi(
    input: Trajectory,
    data: InitialData,
    p: PhysParams,
    b: BasisSet,
    deta_bound: float | None = None,
) -> Trajectory:
    """
    Une application de Ξ : η̃ reconstruit à partir de ṽ, coefficients figés,
    vitesse puis température, flot de sortie transporté par la nouvelle vitesse.

    Raises:
        AprioriViolated: Si l'hypothèse a priori échoue sur l'entrée
    """
    tg, grid = input.time_grid, input.grid
    if grid != data.grid:
        raise GridMismatch("trajectoire et données initiales sur des grilles différentes")
    eta_tilde = transport_flow_map(grid, input.v, tg)
    frozen = FrozenCoefficients.from_history(grid, eta_tilde, input.Theta, tg, deta_bound)
    velocity = solve_velocity(frozen, data, p, tg, b)
    temperature = solve_temperature(velocity, frozen, data, p, tg, b)
    eta = transport_flow_map(grid, velocity.fields, tg)
    return Trajectory(tg, grid, eta, velocity.fields, temperature.fields, input.derived)


def vt_distance(t1: Trajectory, t2: Trajectory, rho0: Field) -> float:
    """
    Distance de V_T : sup_t ∥ρ₀^{1/2}(δv, δΘ)∥²_{L²} + ∫₀ᵀ ∥(δv, δΘ)∥²_{H¹} dt
    (trapèzes), puis racine carrée.

    Raises:
        GridMismatch: Si les grilles spatiales ou temporelles diffèrent
    """
    if t1.grid != t2.grid or t1.time_grid != t2.time_grid or rho0.grid != t1.grid:
        raise GridMismatch("trajectoires sur des grilles différentes")
    grid = t1.grid
    rho = rho0.scalar
    dv = t1.v - t2.v
    dtheta = t1.Theta - t2.Theta
    weighted = [
        float(np.sum(integrate_array(grid, rho * dv[n] ** 2)) + np.sum(integrate_array(grid, rho * dtheta[n] ** 2)))
        for n in range(t1.n_steps + 1)
    ]
    h1 = np.array(
        [sobolev_seminorms_sq(grid, dv[n], 1) + sobolev_seminorms_sq(grid, dtheta[n], 1) for n in range(t1.n_steps + 1)]
    )
    dt = t1.time_grid.dt
    integral = dt * (h1.sum() - 0.5 * (h1[0] + h1[-1]))
    return float(np.sqrt(max(max(weighted) + integral, 0.0)))


def equation_residuals(traj: Trajectory, rho0: Field, p: PhysParams) -> tuple[float | None, float | None]:
    """Max des résidus intérieurs du système sur les pas où les différences rétrogrades existent."""
    first = 1 if traj.derived is not None else 2
    steps = range(first, traj.n_steps + 1)
    if not steps:
        return None, None
    momentum = temperature = 0.0
    for n in steps:
        s = traj.slice(n)
        momentum = max(momentum, float(np.abs(momentum_residual(s, traj.v_t(n), rho0, p).values).max()))
        temperature = max(temperature, float(np.abs(temperature_residual(s, traj.Theta_t(n), rho0, p).values).max()))
    return momentum, temperature


def iterate_to_fixed_point(
    data: InitialData,
    p: PhysParams,
    b: BasisSet,
    tg: TimeGrid,
    tol: float = 1e-8,
    max_iter: int = 20,
    derived: DerivedInitials | None = None,
    deta_bound: float | None = None,
) -> FixedPointResult:
    """
    Itération de Picard depuis le transport des données initiales.

    Raises:
        NonContraction: Deux rapports consécutifs ≥ 1
        MaxIterExceeded: Tolérance non atteinte en max_iter itérations
    """
    if not tol > 0:
        raise ConfigValidationError("la tolérance de Picard doit être > 0")
    current = constant_trajectory(data.grid, tg, data.u0, data.theta0, derived)
    report = IterationReport()
    previous_distance: float | None = None
    growth = 0

    logger.info(f"🔁 Picard : T = {tg.T}, {tg.n_steps} pas, tol = {tol:g}")
    for k in range(1, max_iter + 1):
        try:
            updated = apply_Xi(current, data, p, b, deta_bound)
        except AprioriViolated as exc:
            raise NonContraction(f"{exc} ; {NON_CONTRACTION_ADVICE}") from exc
        distance_k = vt_distance(updated, current, data.rho0)
        ratio = None
        if previous_distance is not None and previous_distance > 0:
            ratio = distance_k / previous_distance
        report.records.append(IterationRecord(iteration=k, distance=distance_k, ratio=ratio))
        logger.info(f"   → itération {k} : δ = {distance_k:.3e}" + (f", r = {ratio:.3f}" if ratio is not None else ""))
        current = updated

        if distance_k <= tol:
            report.converged = True
            break
        growth = growth + 1 if ratio is not None and ratio >= 1.0 else 0
        if growth >= 2:
            raise NonContraction(f"rapports ≥ 1 aux itérations {k - 1} et {k} ; {NON_CONTRACTION_ADVICE}")
        previous_distance = distance_k
    else:
        raise MaxIterExceeded(f"δ = {report.records[-1].distance:.3e} > {tol:g} après {max_iter} itérations")

    report.apriori = [check_apriori(current.deformation(n), deta_bound) for n in range(current.n_steps + 1)]
    report.momentum_residual, report.temperature_residual = equation_residuals(current, data.rho0, p)
    logger.info(f"✅ Point fixe atteint en {report.iterations} itération(s)")
    return FixedPointResult(current, report)


# =============================================================================
# ÉTUDE DE CONTRACTION
# =============================================================================

def _perturbation(grid, rng: np.random.Generator, amplitude: float) -> tuple[np.ndarray, np.ndarray]:
    """Perturbation lisse (v, Θ) de bas modes ; Θ s'annule sur Γ."""
    x1, x2, x3 = grid.mesh()
    v = np.zeros((3, *grid.shape))
    theta = np.zeros(grid.shape)
    for k1 in range(2):
        for k2 in range(2):
            for n in range(3):
                shape = np.cos(2 * np.pi * (k1 * x1 + k2 * x2)) * (2 * x3 - 1) ** n
                v += rng.standard_normal(3)[:, None, None, None] * shape
                theta += rng.standard_normal() * shape * distance(x3)
    return amplitude * v, amplitude * theta[None]


def _perturbed(base: Trajectory, v: np.ndarray, theta: np.ndarray) -> Trajectory:
    ramp = (base.times / base.time_grid.T)[:, None, None, None, None]
    return Trajectory(base.time_grid, base.grid, base.eta, base.v + ramp * v, base.Theta + ramp * theta, base.derived)


def _study_horizon(
    T: float,
    data: InitialData,
    p: PhysParams,
    b: BasisSet,
    n_steps: int,
    scheme: TimeScheme,
    seed: int,
    amplitude: float,
    deta_bound: float | None,
) -> ContractionRow:
    tg = TimeGrid(T, n_steps, scheme)
    rng = np.random.default_rng(seed)
    base = constant_trajectory(data.grid, tg, data.u0, data.theta0)
    x1 = _perturbed(base, *_perturbation(data.grid, rng, amplitude))
    x2 = _perturbed(base, *_perturbation(data.grid, rng, amplitude))
    denominator = vt_distance(x1, x2, data.rho0)
    if denominator == 0.0:
        logger.warning(f"⚠️ T = {T} : paire identique, rapport indéfini")
        return ContractionRow(T=T, ratio=None, skipped=True)
    numerator = vt_distance(apply_Xi(x1, data, p, b, deta_bound), apply_Xi(x2, data, p, b, deta_bound), data.rho0)
    ratio = numerator / denominator
    logger.info(f"   → T = {T} : r̄ = {ratio:.4f}")
    return ContractionRow(T=T, ratio=ratio)


def contraction_study(
    data: InitialData,
    p: PhysParams,
    b: BasisSet,
    horizons: list[float],
    n_steps: int = 10,
    scheme: TimeScheme = TimeScheme.CRANK_NICOLSON,
    seed: int = 0,
    amplitude: float = 1e-3,
    deta_bound: float | None = None,
) -> list[ContractionRow]:
    """
    Rapport dist(Ξx₁, Ξx₂)/dist(x₁, x₂) pour deux itérés perturbés, par horizon.

    Les horizons indépendants tournent sur au plus SOLVER_THREADS threads ;
    les lignes sont rendues dans l'ordre des horizons.
    """
    if not horizons:
        raise ConfigValidationError("liste d'horizons vide")
    if any(not T > 0 for T in horizons):
        raise ConfigValidationError("les horizons doivent être > 0")

    workers = min(get_settings().solver_threads, len(horizons))
    logger.info(f"🔁 Étude de contraction sur {len(horizons)} horizon(s), {workers} thread(s)")

    def run(T: float) -> ContractionRow:
        return _study_horizon(T, data, p, b, n_steps, scheme, seed, amplitude, deta_bound)

    if workers <= 1:
        return [run(T) for T in horizons]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, horizons))
