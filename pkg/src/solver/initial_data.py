"""
Données initiales (ρ₀, u₀, θ₀) : construction, validation des conditions
de vide, dérivées temporelles initiales, constante M₀ et compatibilité.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.diagnostics.monitors import vacuum_boundary_monitor
from src.diagnostics.norms import norm_sq, sobolev_seminorms_sq
from src.exceptions import (
    ConfigValidationError,
    DecayViolation,
    GridMismatch,
    UnboundedDerivative,
    VacuumConditionViolation,
)
from src.models import (
    CompatibilityReport,
    DensityNorms,
    NormalDerivativeRecord,
    PhysParams,
    RunConfig,
)
from src.numerics.grid import Field, GridSpec, diff_array, extrapolate_boundary, gradient_array, make_grid
from src.numerics.kinematics import compute_deformation, identity_flow_map
from src.numerics.operators import (
    StateSlice,
    momentum_forcing,
    momentum_forcing_rate,
    stress_array,
    temperature_forcing,
    temperature_forcing_rate,
)
from src.solver.profiles import (
    DENSITY_ENVELOPES,
    TEMPERATURE_PROFILES,
    VELOCITY_PROFILES,
    distance,
    resolve_profile,
)

logger = logging.getLogger(__name__)

UNBOUNDED_THRESHOLD = 1e12
COMPATIBILITY_TOLERANCE = 1e-8
DECAY_BAND = 0.05
SUFFICIENT_DECAY = 2.0 / 3.0

ScalarProfile = Callable[..., object] | Field | float


def _boundary_max(values: np.ndarray) -> float:
    return float(max(np.abs(values[..., 0, :, :]).max(), np.abs(values[..., -1, :, :]).max()))


def _interior(values: np.ndarray) -> np.ndarray:
    return values[..., 1:-1, :, :]


@dataclass(frozen=True)
class InitialData:
    """
    Données initiales du problème à frontière libre.

    Avec validated=False (mode sans validation) les contrôles de positivité
    et de vide sont sautés ; ρ₀ reste une densité de vide admissible.
    """
    rho0: Field
    u0: Field
    theta0: Field
    alpha: float
    validated: bool = True
    density_norms: DensityNorms | None = None
    normal_derivative: NormalDerivativeRecord | None = None

    def __post_init__(self):
        grid = self.rho0.grid
        if self.u0.grid != grid or self.theta0.grid != grid:
            raise GridMismatch("ρ₀, u₀ et θ₀ doivent partager la même grille")
        if self.u0.components != 3 or self.rho0.components != 1 or self.theta0.components != 1:
            raise GridMismatch("u₀ vectoriel, ρ₀ et θ₀ scalaires attendus")
        if self.validated:
            self.validate()

    @property
    def grid(self) -> GridSpec:
        return self.rho0.grid

    def validate(self) -> None:
        """Contrôle (rho1), (rho2), (theta1) et (theta2)."""
        if not self.alpha > 0:
            raise DecayViolation(f"exposant de décroissance α = {self.alpha} doit être > 0")
        rho, theta = self.rho0.scalar, self.theta0.scalar
        if _boundary_max(rho) > 0.0:
            raise ConfigValidationError("ρ₀ doit s'annuler en x₃ ∈ {0, 1}")
        if _interior(rho).min() <= 0.0:
            raise ConfigValidationError("ρ₀ doit être strictement positive à l'intérieur")
        if _boundary_max(theta) > COMPATIBILITY_TOLERANCE:
            raise ConfigValidationError("θ₀ doit s'annuler en x₃ ∈ {0, 1}")
        if _interior(theta).min() <= 0.0:
            raise ConfigValidationError("θ₀ doit être strictement positive à l'intérieur")
        record = normal_derivative_record(self.theta0)
        if record.violated:
            raise VacuumConditionViolation(
                f"∇_nθ₀ doit être < 0 sur Γ (max = {record.max:.6g})"
            )


@dataclass(frozen=True)
class DerivedInitials:
    """u₀ₜ, u₀ₜₜ, θ₀ₜ, θ₀ₜₜ déterminés par les équations, et M₀."""
    u0t: Field
    u0tt: Field
    theta0t: Field
    theta0tt: Field
    M0: float = 1.0


def distance_function(g: GridSpec) -> Field:
    """d(x) = x₃(1 − x₃) aux nœuds."""
    return Field.from_function(g, lambda x1, x2, x3: distance(x3))


def _sample(g: GridSpec, profile: ScalarProfile) -> np.ndarray:
    if isinstance(profile, Field):
        if profile.grid != g:
            raise GridMismatch("profil défini sur une autre grille")
        return profile.scalar
    if callable(profile):
        return Field.from_function(g, profile).scalar
    return np.full(g.shape, float(profile))


# =============================================================================
# DENSITÉ
# =============================================================================

def estimate_decay_exponent(rho0: Field, band: float = DECAY_BAND) -> float | None:
    """
    Pente des moindres carrés de log ρ₀ contre log d sur les nœuds
    intérieurs avec d < band, ρ₀ moyennée en (x₁, x₂).
    """
    g = rho0.grid
    x3 = g.x3_nodes[1:-1]
    dist = distance(x3)
    profile = rho0.scalar[1:-1].mean(axis=(1, 2))
    mask = (dist < band) & (profile > 0)
    if mask.sum() < 2:
        return None
    slope, _ = np.polyfit(np.log(dist[mask]), np.log(profile[mask]), 1)
    return float(slope)


def density_norms(rho0: Field, alpha: float) -> DensityNorms:
    """Substituts discrets des normes de (rho3)."""
    g = rho0.grid
    rho = rho0.scalar
    w = g.node_weights()
    grad = gradient_array(g, rho)
    grad_mag = np.sqrt(np.sum(grad**2, axis=0))
    tangential = np.stack([diff_array(g, rho, 1), diff_array(g, rho, 2)])
    hessian = gradient_array(g, grad)
    tangential_hessian = np.stack([diff_array(g, hessian, 1), diff_array(g, hessian, 2)])
    second = np.sqrt(np.sum(hessian**2, axis=(0, 1))) + np.sqrt(np.sum(tangential_hessian**2, axis=(0, 1, 2)))
    d = distance(g.mesh()[2])
    exponent = estimate_decay_exponent(rho0)
    return DensityNorms(
        linf=float(np.abs(rho).max()),
        grad_l3=float(np.sum(w * grad_mag**3) ** (1.0 / 3.0)),
        tangential_h1=float(np.sqrt(sobolev_seminorms_sq(g, tangential, 1))),
        weighted_second=float(np.sqrt(np.sum(w * (d * second) ** 2))),
        decay_exponent=exponent,
        meets_sufficient_decay=alpha > SUFFICIENT_DECAY,
    )


def build_density(g: GridSpec, alpha: float, envelope: ScalarProfile = 1.0) -> tuple[Field, DensityNorms]:
    """
    ρ₀ = enveloppe · d^α, nulle exactement sur Γ.

    Returns:
        (ρ₀, substituts des normes de (rho3))

    Raises:
        DecayViolation: Si α ≤ 0
    """
    if not alpha > 0:
        raise DecayViolation(f"α = {alpha} : la densité doit décroître vers le vide (α > 0)")
    env = _sample(g, envelope)
    if env.min() <= 0:
        raise ConfigValidationError("l'enveloppe de densité doit rester strictement positive")
    d = distance(g.mesh()[2])
    rho = env * np.power(d, alpha)
    rho[0] = 0.0
    rho[-1] = 0.0
    rho0 = Field(g, rho)
    return rho0, density_norms(rho0, alpha)


# =============================================================================
# TEMPÉRATURE
# =============================================================================

def normal_derivative_record(theta: Field) -> NormalDerivativeRecord:
    """Extrema de ∇_nθ sur Γ ; violation si max > −1e-8 ou valeur non finie."""
    return vacuum_boundary_monitor(theta)


def build_temperature(g: GridSpec, profile: ScalarProfile) -> tuple[Field, NormalDerivativeRecord]:
    """
    Échantillonne θ₀ et contrôle la condition de vide physique.

    Raises:
        VacuumConditionViolation: Si ∇_nθ₀ ≥ 0 ou non fini sur Γ
    """
    values = np.array(_sample(g, profile), dtype=float)
    values[0] = 0.0
    values[-1] = 0.0
    theta0 = Field(g, values)
    record = normal_derivative_record(theta0)
    if record.violated:
        raise VacuumConditionViolation(f"∇_nθ₀ ∈ [{record.min:.6g}, {record.max:.6g}] : doit être < 0 sur Γ")
    return theta0, record


# =============================================================================
# DÉRIVÉES TEMPORELLES INITIALES
# =============================================================================

def divide_by_density(g: GridSpec, numerator: np.ndarray, rho0: Field) -> np.ndarray:
    """
    Quotient par ρ₀ aux nœuds où ρ₀ ≠ 0 ; les faces où ρ₀ s'annule sont
    complétées par extrapolation polynomiale des nœuds intérieurs.
    """
    rho = rho0.scalar
    if _interior(rho).min() <= 0.0:
        raise UnboundedDerivative("ρ₀ s'annule à l'intérieur : quotient non borné")
    vacuum_faces = np.any(rho[0] == 0.0) or np.any(rho[-1] == 0.0)
    safe = np.where(rho == 0.0, 1.0, rho)
    quotient = numerator / safe
    if vacuum_faces:
        quotient = extrapolate_boundary(g, quotient)
    return quotient


def _check_bounded(name: str, values: np.ndarray) -> None:
    peak = float(np.abs(_interior(values)).max())
    if not np.isfinite(peak) or peak > UNBOUNDED_THRESHOLD:
        raise UnboundedDerivative(f"{name} non borné ({peak:.3e}) : profils initiaux incompatibles")


def initial_time_derivatives(data: InitialData, p: PhysParams, g: GridSpec | None = None) -> DerivedInitials:
    """
    u₀ₜ, θ₀ₜ par les équations à t = 0 (η = Id), puis u₀ₜₜ, θ₀ₜₜ par
    dérivation en temps des seconds membres.

    Raises:
        UnboundedDerivative: Si u₀ₜ, θ₀ₜ, u₀ₜₜ ou θ₀ₜₜ dépasse 1e12 à l'intérieur
    """
    g = g or data.grid
    if g != data.grid:
        raise GridMismatch("grille différente de celle des données initiales")
    defm = compute_deformation(identity_flow_map(g))
    s0 = StateSlice(data.u0, data.theta0, defm, 0.0)

    u0t = divide_by_density(g, momentum_forcing(s0, data.rho0, p), data.rho0)
    theta0t = divide_by_density(g, temperature_forcing(s0, data.rho0, p), data.rho0) / p.c_v
    _check_bounded("u₀ₜ", u0t)
    _check_bounded("θ₀ₜ", theta0t)
    u0t_field, theta0t_field = Field(g, u0t), Field(g, theta0t)

    u0tt = divide_by_density(g, momentum_forcing_rate(s0, u0t_field, theta0t_field, data.rho0, p), data.rho0)
    theta0tt = (
        divide_by_density(g, temperature_forcing_rate(s0, u0t_field, theta0t_field, data.rho0, p), data.rho0)
        / p.c_v
    )
    _check_bounded("u₀ₜₜ", u0tt)
    _check_bounded("θ₀ₜₜ", theta0tt)
    di = DerivedInitials(u0t_field, Field(g, u0tt), theta0t_field, Field(g, theta0tt))
    m0 = compute_M0(di, data, g)
    logger.debug(f"📐 Dérivées initiales calculées, M₀ = {m0:.6g}")
    return DerivedInitials(di.u0t, di.u0tt, di.theta0t, di.theta0tt, m0)


def compute_M0(di: DerivedInitials, data: InitialData, g: GridSpec | None = None) -> float:
    """M₀ = somme des six normes initiales + 1."""
    return (
        norm_sq(di.u0tt, 0, data.rho0)
        + norm_sq(di.u0t, 1)
        + norm_sq(data.u0, 3)
        + norm_sq(di.theta0tt, 0, data.rho0)
        + norm_sq(di.theta0t, 1)
        + norm_sq(data.theta0, 3)
        + 1.0
    )


def check_compatibility(
    data: InitialData, di: DerivedInitials, g: GridSpec | None = None, p: PhysParams | None = None
) -> CompatibilityReport:
    """
    Résidus des conditions de compatibilité aux nœuds de bord :
    θ₀, ∂̄θ₀, ∂̄²θ₀, θ₀ₜ nuls et 𝕊_Id[u₀]ⁱ³, 𝕊_Id[∂̄u₀]ⁱ³ nuls.
    """
    g = g or data.grid
    p = p or PhysParams()
    theta = data.theta0.scalar
    identity = np.broadcast_to(np.eye(3)[:, :, None, None, None], (3, 3, *g.shape))
    u0 = data.u0.values
    tangential_u0 = np.concatenate([diff_array(g, u0, 1), diff_array(g, u0, 2)])

    def traction_max(values: np.ndarray) -> float:
        residual = 0.0
        for start in range(0, values.shape[0], 3):
            sigma = stress_array(g, values[start : start + 3], identity, p)
            residual = max(residual, _boundary_max(sigma[:, 2]))
        return residual

    residuals = {
        "theta0_trace": _boundary_max(theta),
        "tangential_theta0_trace": max(_boundary_max(diff_array(g, theta, a)) for a in (1, 2)),
        "tangential2_theta0_trace": max(
            _boundary_max(diff_array(g, diff_array(g, theta, a), b)) for a in (1, 2) for b in (1, 2)
        ),
        "theta0t_trace": _boundary_max(di.theta0t.scalar),
        "stress_u0": traction_max(u0),
        "stress_tangential_u0": traction_max(tangential_u0),
    }
    report = CompatibilityReport(residuals=residuals, tolerance=COMPATIBILITY_TOLERANCE)
    for name in report.failed:
        logger.warning(f"⚠️ Condition de compatibilité non satisfaite : {name} = {residuals[name]:.3e}")
    return report


# =============================================================================
# CONSTRUCTION DEPUIS LA CONFIGURATION
# =============================================================================

def build_initial_data(cfg: RunConfig, g: GridSpec | None = None) -> InitialData:
    """Construit les données initiales décrites par la configuration."""
    g = g or make_grid(cfg.grid.n1, cfg.grid.n2, cfg.grid.n3)
    section = cfg.initial
    envelope = resolve_profile(DENSITY_ENVELOPES, section.density.name, section.density.params)
    rho0, norms = build_density(g, section.density.alpha, envelope)
    velocity = resolve_profile(VELOCITY_PROFILES, section.velocity.name, section.velocity.params)
    u0 = Field.from_function(g, velocity)
    temperature = resolve_profile(TEMPERATURE_PROFILES, section.temperature.name, section.temperature.params)

    if section.validate_data:
        theta0, record = build_temperature(g, temperature)
    else:
        logger.warning("⚠️ Mode sans validation : contrôles de positivité et de vide désactivés")
        values = np.array(Field.from_function(g, temperature).scalar)
        values[0] = values[-1] = 0.0
        theta0 = Field(g, values)
        record = normal_derivative_record(theta0)

    logger.info(
        f"📝 Données initiales : ρ₀ = {section.density.name} (α = {section.density.alpha}), "
        f"θ₀ = {section.temperature.name}, u₀ = {section.velocity.name}"
    )
    return InitialData(
        rho0=rho0,
        u0=u0,
        theta0=theta0,
        alpha=section.density.alpha,
        validated=section.validate_data,
        density_norms=norms,
        normal_derivative=record,
    )
