"""
Moniteurs d'exécution : grandeurs eulériennes, entropie près du bord,
condition de vide physique, positivité intérieure et dérives contrôlées
par l'hypothèse a priori.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from src.diagnostics.norms import norm_sq, sobolev_norm
from src.exceptions import DegenerateJacobian, GridMismatch, InsufficientHistory, NonPositiveState
from src.models import (
    AprioriDriftRecord,
    InteriorPositivityRecord,
    NormalDerivativeRecord,
    PhysParams,
    VacuumDriftRecord,
)
from src.numerics.grid import Field, GridSpec, gradient_array
from src.numerics.kinematics import JACOBIAN_FLOOR, Deformation, deformation_rates
from src.numerics.operators import outward_normal_derivative

if TYPE_CHECKING:
    from src.solver.trajectory import Trajectory

logger = logging.getLogger(__name__)

DRIFT_TOLERANCE = 1e-10
VACUUM_TOLERANCE = 1e-8


def _distance(grid: GridSpec) -> np.ndarray:
    _, _, x3 = grid.mesh()
    return x3 * (1.0 - x3)


def _interior_mask(grid: GridSpec) -> np.ndarray:
    mask = np.ones(grid.shape, dtype=bool)
    mask[0] = mask[-1] = False
    return mask


# =============================================================================
# GRANDEURS EULÉRIENNES
# =============================================================================

def eulerian_density(rho0: Field, d: Deformation) -> Field:
    """ρ = ρ₀/J aux nœuds."""
    if rho0.grid != d.grid:
        raise GridMismatch("ρ₀ et la déformation sur des grilles différentes")
    jac = d.J.scalar
    if jac.min() < JACOBIAN_FLOOR:
        raise DegenerateJacobian(f"J minimal {jac.min():.3e} : densité eulérienne indéfinie")
    return Field(rho0.grid, rho0.scalar / jac)


def eulerian_pressure(rho: Field, Theta: Field, p: PhysParams) -> Field:
    """p = RρΘ."""
    return Field(rho.grid, p.R * rho.scalar * Theta.scalar)


def sound_speed(Theta: Field, p: PhysParams) -> Field:
    """c = √(γRΘ), Θ tronquée à 0."""
    return Field(Theta.grid, np.sqrt(p.gamma * p.R * np.maximum(Theta.scalar, 0.0)))


# =============================================================================
# ENTROPIE
# =============================================================================

@dataclass(frozen=True)
class EntropyField:
    """Entropie S sur les nœuds intérieurs (0 sur Γ) et statistiques de bande."""
    S: Field
    band: float
    band_min: float
    band_max: float

    @property
    def spread(self) -> float:
        return self.band_max - self.band_min


def entropy_field(Theta: Field, rho: Field, p: PhysParams, band: float = 0.05) -> EntropyField:
    """
    S = R/(γ−1) · ln(RΘ/(Ā ρ^{γ−1})) sur l'intérieur ; la bande regroupe les
    nœuds intérieurs où d(x) < band, complétés des premières couches.

    Raises:
        NonPositiveState: Si Θ ou ρ n'est pas > 0 à l'intérieur
    """
    grid = Theta.grid
    if rho.grid != grid:
        raise GridMismatch("Θ et ρ sur des grilles différentes")
    inner = _interior_mask(grid)
    theta, density = Theta.scalar, rho.scalar
    if theta[inner].min() <= 0.0 or density[inner].min() <= 0.0:
        raise NonPositiveState("Θ et ρ doivent être > 0 à l'intérieur pour définir l'entropie")

    S = np.zeros(grid.shape)
    ratio = p.R * theta[inner] / (p.A_bar * density[inner] ** (p.gamma - 1.0))
    S[inner] = p.R / (p.gamma - 1.0) * np.log(ratio)

    mask = inner & (_distance(grid) < band)
    mask[1] = mask[-2] = True
    return EntropyField(Field(grid, S), band, float(S[mask].min()), float(S[mask].max()))


# =============================================================================
# CONDITION DE VIDE ET POSITIVITÉ
# =============================================================================

def vacuum_boundary_monitor(Theta: Field) -> NormalDerivativeRecord:
    """Extrema de ∇_nΘ sur Γ ; violation si max ≥ 0."""
    bottom, top = outward_normal_derivative(Theta.grid, Theta.scalar)
    values = np.concatenate([bottom.ravel(), top.ravel()])
    if not np.all(np.isfinite(values)):
        return NormalDerivativeRecord(min=float("-inf"), max=float("inf"), violated=True)
    lo, hi = float(values.min()), float(values.max())
    return NormalDerivativeRecord(min=lo, max=hi, violated=hi > -VACUUM_TOLERANCE)


def interior_positivity(Theta: Field, theta0: Field, d0: float = 0.05) -> InteriorPositivityRecord:
    """min Θ sur {d ≥ d0} comparé à δ(d0)/2, δ(d0) = min θ₀ sur le même ensemble."""
    mask = _distance(Theta.grid) >= d0
    if not mask.any():
        raise ValueError(f"aucun nœud avec d ≥ {d0}")
    theta_min = float(Theta.scalar[mask].min())
    delta = float(theta0.scalar[mask].min())
    return InteriorPositivityRecord(d0=d0, theta_min=theta_min, delta=delta, violated=theta_min < 0.5 * delta)


# =============================================================================
# DÉRIVES
# =============================================================================

def _trapezoid_series(values: list[float], dt: float) -> list[float]:
    out = [0.0]
    for n in range(1, len(values)):
        out.append(out[-1] + 0.5 * dt * (values[n - 1] + values[n]))
    return out


def apriori_drift(traj: Trajectory) -> AprioriDriftRecord:
    """
    Compare max|Dη(t)| à |Dη(0)| + ∫₀ᵗ‖Dv‖_∞ et max|J(t) − 1| à ∫₀ᵗ‖J_t‖_∞.
    """
    grid, dt = traj.grid, traj.time_grid.dt
    steps = range(traj.n_steps + 1)
    dv_max, jt_max, deta, jdrift = [], [], [], []
    for n in steps:
        defm = traj.deformation(n)
        v = traj.velocity(n)
        dv_max.append(float(np.abs(gradient_array(grid, v.values)).max()))
        j_t, _ = deformation_rates(defm, v)
        jt_max.append(float(np.abs(j_t.scalar).max()))
        deta.append(float(np.abs(defm.Deta_matrix).max()))
        jdrift.append(float(np.abs(defm.J.scalar - 1.0).max()))

    deta_pred = [deta[0] + s for s in _trapezoid_series(dv_max, dt)]
    j_pred = _trapezoid_series(jt_max, dt)
    holds = all(m <= q + DRIFT_TOLERANCE for m, q in zip(deta, deta_pred)) and all(
        m <= q + DRIFT_TOLERANCE for m, q in zip(jdrift, j_pred)
    )
    if not holds:
        logger.warning("⚠️ Dérive de Dη ou de J au-delà de la prédiction intégrée")
    return AprioriDriftRecord(
        times=[float(t) for t in traj.times],
        deta_measured=deta,
        deta_predicted=deta_pred,
        j_drift_measured=jdrift,
        j_drift_predicted=j_pred,
        holds=holds,
    )


def embedding_constant(theta0: Field) -> float:
    """max|Dθ₀| / ‖θ₀‖_{H³}, ou 1 si la norme est nulle."""
    h3 = sobolev_norm(theta0, 3)
    if h3 == 0.0:
        return 1.0
    return float(np.abs(gradient_array(theta0.grid, theta0.values)).max()) / h3


def _theta_rate(traj: Trajectory, n: int) -> Field:
    try:
        return traj.Theta_t(n)
    except InsufficientHistory:
        return Field(traj.grid, (traj.Theta[1] - traj.Theta[0]) / traj.time_grid.dt)


def vacuum_drift(traj: Trajectory) -> VacuumDriftRecord:
    """
    |∇_nΘ(t) − ∇_nθ₀|_max face à t^{1/2}(∫₀ᵗ‖Θ_t‖²_{H³})^{1/2}·C_emb.
    """
    grid, dt = traj.grid, traj.time_grid.dt
    theta0 = traj.temperature(0)
    c_emb = embedding_constant(theta0)
    reference = np.concatenate([face.ravel() for face in outward_normal_derivative(grid, theta0.scalar)])

    drift, rates = [], []
    for n in range(traj.n_steps + 1):
        current = np.concatenate([face.ravel() for face in outward_normal_derivative(grid, traj.Theta[n, 0])])
        drift.append(float(np.abs(current - reference).max()))
        rates.append(norm_sq(_theta_rate(traj, n), 3))

    integral = _trapezoid_series(rates, dt)
    bound = [float(np.sqrt(t * max(i, 0.0)) * c_emb) for t, i in zip(traj.times, integral)]
    holds = all(m <= b + DRIFT_TOLERANCE for m, b in zip(drift, bound))
    return VacuumDriftRecord(
        times=[float(t) for t in traj.times],
        drift=drift,
        bound=bound,
        embedding_constant=c_emb,
        holds=holds,
    )
