"""
Normes de Sobolev discrètes et fonctionnelles d'énergie E et F.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np

from src.exceptions import InsufficientHistory, TraceViolation
from src.models import EnergyEntry, EnergyReport
from src.numerics.grid import Field, GridSpec, diff_array, integrate_array

if TYPE_CHECKING:
    from src.solver.trajectory import Trajectory

logger = logging.getLogger(__name__)

MAX_ORDER = 3
TRACE_TOLERANCE = 1e-8


def sobolev_seminorms_sq(grid: GridSpec, values: np.ndarray, k: int, weight: np.ndarray | None = None) -> float:
    """Σ_{|β| ≤ k} ∫ w |∂^β f|², sommé sur les composantes."""
    total = 0.0
    for b1 in range(k + 1):
        tangential = diff_array(grid, values, 1, b1) if b1 else values
        for b2 in range(k + 1 - b1):
            mixed = diff_array(grid, tangential, 2, b2) if b2 else tangential
            derivative = mixed
            for b3 in range(k + 1 - b1 - b2):
                if b3:
                    derivative = diff_array(grid, derivative, 3)
                integrand = derivative**2 if weight is None else weight * derivative**2
                total += float(np.sum(integrate_array(grid, integrand)))
    return total


def sobolev_norm(f: Field, k: int, weight: Field | None = None, zero_trace: bool = False) -> float:
    """
    Norme H^k discrète par dérivées spectrales et quadrature.

    Args:
        f: Champ scalaire, vectoriel ou tensoriel
        k: Ordre 0 à 3
        weight: Poids scalaire multipliant l'intégrande (∥ρ₀^{1/2}·∥ pour k = 0)
        zero_trace: Exige f = 0 aux nœuds de bord (norme H¹₀)

    Raises:
        TraceViolation: Si zero_trace et trace non nulle
    """
    if not 0 <= k <= MAX_ORDER:
        raise ValueError(f"ordre de Sobolev {k} hors de [0, {MAX_ORDER}]")
    if zero_trace:
        trace = max(np.abs(f.values[:, 0]).max(), np.abs(f.values[:, -1]).max())
        if trace > TRACE_TOLERANCE:
            raise TraceViolation(f"trace {trace:.3e} non nulle pour une norme H¹₀")
    w = None if weight is None else weight.scalar
    return float(np.sqrt(max(sobolev_seminorms_sq(f.grid, f.values, k, w), 0.0)))


def norm_sq(f: Field, k: int, weight: Field | None = None) -> float:
    return sobolev_norm(f, k, weight) ** 2


def tangential_norm_sq(f: Field, k: int) -> float:
    """∥∂̄f∥²_{H^k} = ∥∂₁f∥² + ∥∂₂f∥²."""
    return sum(sobolev_seminorms_sq(f.grid, diff_array(f.grid, f.values, axis), k) for axis in (1, 2))


# =============================================================================
# FONCTIONNELLES D'ÉNERGIE
# =============================================================================

def energy_E(traj: Trajectory, step: int, rho0: Field) -> EnergyEntry:
    """
    Les six termes de E au pas `step`.

    Raises:
        InsufficientHistory: Sans DerivedInitials aux pas 0 et 1
    """
    v = traj.velocity(step)
    theta = traj.temperature(step)
    return EnergyEntry(
        step=step,
        time=float(traj.times[step]),
        v_tt_weighted=norm_sq(traj.v_tt(step), 0, rho0),
        v_t_h1=norm_sq(traj.v_t(step), 1),
        v_h3=norm_sq(v, 3),
        theta_tt_weighted=norm_sq(traj.Theta_tt(step), 0, rho0),
        theta_t_h1=norm_sq(traj.Theta_t(step), 1),
        theta_h3=norm_sq(theta, 3),
    )


def dissipation_integrand(traj: Trajectory, step: int) -> float:
    """Intégrande temporel de F au pas `step`."""
    v = traj.velocity(step)
    theta = traj.temperature(step)
    return (
        norm_sq(traj.v_tt(step), 1)
        + norm_sq(traj.v_t(step), 3)
        + tangential_norm_sq(v, 3)
        + norm_sq(traj.Theta_tt(step), 1)
        + norm_sq(traj.Theta_t(step), 3)
        + tangential_norm_sq(theta, 3)
    )


def _trapezoid(values: list[float], dt: float) -> float:
    if len(values) < 2:
        return 0.0
    return float(dt * (sum(values) - 0.5 * (values[0] + values[-1])))


def energy_F(traj: Trajectory, upto_step: int, rho0: Field) -> float:
    """E(upto_step) plus les intégrales en temps (trapèzes) des termes dissipatifs."""
    if not 0 <= upto_step <= traj.n_steps:
        raise InsufficientHistory(f"pas {upto_step} hors de la trajectoire")
    integrand = [dissipation_integrand(traj, n) for n in range(upto_step + 1)]
    return energy_E(traj, upto_step, rho0).total + _trapezoid(integrand, traj.time_grid.dt)


def energy_report(traj: Trajectory, rho0: Field, M0: float = 1.0) -> EnergyReport:
    """Séries E(t) et F(t) sur tous les pas, intégrande calculé une seule fois par pas."""
    entries: list[EnergyEntry] = []
    f_values: list[float] = []
    integrand: list[float] = []
    for n in range(traj.n_steps + 1):
        entry = energy_E(traj, n, rho0)
        integrand.append(dissipation_integrand(traj, n))
        entries.append(entry)
        f_values.append(entry.total + _trapezoid(integrand, traj.time_grid.dt))
    logger.debug(f"📐 Énergie calculée sur {len(entries)} pas, sup F = {max(f_values):.6g}")
    return EnergyReport(entries=entries, F=f_values, M0=M0)
