"""
Suite de vérification exécutée par la commande `verify` : identités
cinématiques, compatibilité des données, inégalités, mode de chaleur
exact, solutions manufacturées et ordres de convergence en temps et en espace.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from src.diagnostics.inequalities import hardy_check, korn_check, lobatto_nodes
from src.models import CheckResult, PhysParams, RunConfig, TimeScheme, VerifyReport
from src.numerics.grid import Field, GridSpec, gradient_array, make_grid
from src.numerics.kinematics import (
    FlowMap,
    advance_flow_map,
    check_apriori,
    cofactor_matrix,
    compute_deformation,
    deformation_rates,
    identity_flow_map,
    identity_positions,
    piola_residual,
)
from src.solver.initial_data import InitialData, build_initial_data, check_compatibility, initial_time_derivatives
from src.solver.linear_solver import (
    FrozenCoefficients,
    GalerkinSolution,
    build_basis,
    solve_temperature,
    solve_velocity,
    temperature_source,
)
from src.solver.trajectory import TimeGrid

logger = logging.getLogger(__name__)

PIOLA_TOLERANCE = 1e-8
COFACTOR_TOLERANCE = 1e-8
RATE_TOLERANCE = 1e-6
INEQUALITY_TOLERANCE = 1e-8
HEAT_TOLERANCE = 1e-6
MANUFACTURED_TOLERANCE = 1e-5
ORDER_TOLERANCE = 0.2
DECAY_FACTOR = 0.1

PIOLA_GRID = (32, 32, 33)
PAIR_N3 = 25
ORDER_M3 = 12
ORDER_STEPS = (25, 50, 100)
DECAY_STEPS = 100

FLOW_SAMPLES = 20
FLOW_AMPLITUDE = 0.05
GRADIENT_CAP = 0.2


# =============================================================================
# CHAMPS DE TEST
# =============================================================================

def random_displacement(grid: GridSpec, rng: np.random.Generator, amplitude: float = FLOW_AMPLITUDE) -> np.ndarray:
    """
    Déplacement lisse à bande limitée (modes |k| ≤ 1, degré ≤ 2 en x₃),
    d'amplitude ≤ amplitude et de gradient ≤ 0.2 entrée par entrée.
    """
    x1, x2, x3 = grid.mesh()
    xi = 2.0 * x3 - 1.0
    radial = [np.ones_like(xi), xi, 2.0 * xi**2 - 1.0]
    displacement = np.zeros((3, *grid.shape))
    for k1 in (-1, 0, 1):
        for k2 in (-1, 0, 1):
            phase = 2.0 * np.pi * (k1 * x1 + k2 * x2)
            for trig in (np.cos, np.sin):
                for poly in radial:
                    displacement += rng.standard_normal(3)[:, None, None, None] * trig(phase) * poly
    displacement *= amplitude / np.abs(displacement).max()
    slope = np.abs(gradient_array(grid, displacement)).max()
    if slope > GRADIENT_CAP:
        displacement *= GRADIENT_CAP / slope
    return displacement


def random_flow_map(grid: GridSpec, rng: np.random.Generator, amplitude: float = FLOW_AMPLITUDE) -> FlowMap:
    return FlowMap(Field(grid, identity_positions(grid) + random_displacement(grid, rng, amplitude)))


def _result(name: str, value: float, threshold: float, detail: str = "") -> CheckResult:
    passed = bool(np.isfinite(value) and value <= threshold)
    icon = "✅" if passed else "❌"
    logger.info(f"   {icon} {name} : {value:.3e} (seuil {threshold:g})")
    return CheckResult(name=name, passed=passed, value=float(value), threshold=threshold, detail=detail)


# =============================================================================
# VÉRIFICATIONS
# =============================================================================

def check_piola_and_cofactor(
    grid: GridSpec | None = None, seed: int = 0, samples: int = FLOW_SAMPLES
) -> list[CheckResult]:
    """aᵏᵢ,ₖ = 0 et a = cof(Dη)ᵀ sur des flots aléatoires, grille 32×32×33 par défaut."""
    grid = grid or make_grid(*PIOLA_GRID)
    rng = np.random.default_rng(seed)
    piola = cofactor = 0.0
    for _ in range(samples):
        defm = compute_deformation(random_flow_map(grid, rng))
        piola = max(piola, float(np.abs(piola_residual(defm).values).max()))
        cofactor = max(cofactor, float(np.abs(defm.a.values - cofactor_matrix(defm.Deta).values).max()))
    detail = f"{samples} flots aléatoires, grille {grid.n1}×{grid.n2}×{grid.n3}"
    return [
        _result("piola_identity", piola, PIOLA_TOLERANCE, detail),
        _result("cofactor_consistency", cofactor, COFACTOR_TOLERANCE, detail),
    ]


def check_jacobian_rate(grid: GridSpec, seed: int = 0, t: float = 0.1, h: float = 1e-2) -> CheckResult:
    """J_t = aˢᵣvʳ,ₛ le long d'un flot transporté, par différences de Richardson."""
    rng = np.random.default_rng(seed)
    start = random_flow_map(grid, rng)
    v = Field(grid, random_displacement(grid, rng))

    def jacobian(time: float) -> np.ndarray:
        return compute_deformation(advance_flow_map(start, v, time)).J.scalar

    def central(step: float) -> np.ndarray:
        return (jacobian(t + step) - jacobian(t - step)) / (2.0 * step)

    rate = (4.0 * central(h / 2.0) - central(h)) / 3.0
    j_t, _ = deformation_rates(compute_deformation(advance_flow_map(start, v, t)), v)
    return _result("jacobian_rate", float(np.abs(rate - j_t.scalar).max()), RATE_TOLERANCE)


def check_apriori_identity(grid: GridSpec) -> CheckResult:
    check = check_apriori(compute_deformation(identity_flow_map(grid)))
    return CheckResult(
        name="apriori_identity",
        passed=check.ok,
        value=check.deta_max,
        threshold=check.deta_bound,
        detail=f"J ∈ [{check.j_min:.6g}, {check.j_max:.6g}]",
    )


def check_initial_compatibility(cfg: RunConfig) -> list[CheckResult]:
    """Conditions de compatibilité : avertissements, jamais des échecs."""
    data = build_initial_data(cfg)
    derived = initial_time_derivatives(data, cfg.physics)
    report = check_compatibility(data, derived, p=cfg.physics)
    return [
        CheckResult(
            name=f"compatibility.{name}",
            passed=value <= report.tolerance,
            value=value,
            threshold=report.tolerance,
            warning=True,
        )
        for name, value in report.residuals.items()
    ]


def check_inequalities(grid: GridSpec) -> list[CheckResult]:
    """Cas analytiques de Hardy et de Korn."""
    s = lobatto_nodes(16)
    hardy_constant = hardy_check(np.ones_like(s), 2.0)
    hardy_linear = hardy_check(s, 0.0)
    x3 = grid.mesh()[2]
    korn = korn_check(Field(grid, np.stack([x3, np.zeros_like(x3), np.zeros_like(x3)])))
    return [
        _result("hardy_constant_k2", abs(hardy_constant.ratio - 3.0), INEQUALITY_TOLERANCE),
        _result("hardy_linear_k0", abs(hardy_linear.ratio - 1.0), INEQUALITY_TOLERANCE),
        _result("korn_linear_shear", abs(korn.ratio - 4.0 / 7.0), INEQUALITY_TOLERANCE),
    ]


def _uniform_data(grid: GridSpec, u0: Field, theta0: Field) -> InitialData:
    """ρ₀ ≡ 1, sans validation de vide."""
    return InitialData(rho0=Field(grid, np.ones(grid.shape)), u0=u0, theta0=theta0, alpha=1.0, validated=False)


def check_heat_mode(p: PhysParams, n3: int = 33, m3: int = 16, T: float = 0.1, dt: float = 1e-4) -> CheckResult:
    """Mode propre sin(πx₃) de l'équation de la chaleur à v = 0, ρ₀ ≡ 1."""
    grid = make_grid(4, 4, n3)
    x3 = grid.mesh()[2]
    theta0 = Field(grid, np.sin(np.pi * x3))
    data = _uniform_data(grid, Field.zeros(grid, 3), theta0)
    tg = TimeGrid(T, int(round(T / dt)), TimeScheme.CRANK_NICOLSON)
    basis = build_basis(grid, 1, min(m3, n3 - 2))
    velocity = np.zeros((tg.n_steps + 1, 3, *grid.shape))
    solution = solve_temperature(velocity, FrozenCoefficients.at_rest(grid), data, p, tg, basis)
    exact = np.exp(-p.kappa * np.pi**2 * T / p.c_v) * np.sin(np.pi * x3)
    error = float(np.abs(solution.fields[-1, 0] - exact).max() / np.abs(exact).max())
    return _result("heat_mode", error, HEAT_TOLERANCE, f"CN dt = {dt:g}, t = {T:g}")


def manufactured_velocity(grid: GridSpec) -> tuple[Callable[[float], np.ndarray], Callable[[float, PhysParams], Field]]:
    """
    v* = e^{−t}(0, 0, x₃²(3 − 2x₃)), traction nulle en x₃ ∈ {0, 1}, et le
    forçage f = v*_t − (2μ + λ)g″e₃ qui en fait une solution à ρ₀ ≡ 1, η̃ = Id.
    """
    x3 = grid.mesh()[2]
    profile = x3**2 * (3.0 - 2.0 * x3)
    curvature = 6.0 - 12.0 * x3
    zeros = np.zeros_like(x3)

    def exact(t: float) -> np.ndarray:
        return np.exp(-t) * np.stack([zeros, zeros, profile])

    def forcing(t: float, p: PhysParams) -> Field:
        vertical = np.exp(-t) * (-profile - (2.0 * p.mu + p.lam) * curvature)
        return Field(grid, np.stack([zeros, zeros, vertical]))

    return exact, forcing


def manufactured_error(p: PhysParams, n_steps: int, T: float = 0.1, n3: int = 17, m3: int = 4) -> float:
    """Erreur max à t = T de la vitesse de Galerkin contre v*."""
    grid = make_grid(4, 4, n3)
    exact, forcing = manufactured_velocity(grid)
    data = _uniform_data(grid, Field(grid, exact(0.0)), Field.zeros(grid))
    tg = TimeGrid(T, n_steps, TimeScheme.CRANK_NICOLSON)
    basis = build_basis(grid, 1, m3)
    solution = solve_velocity(FrozenCoefficients.at_rest(grid), data, p, tg, basis, lambda t: forcing(t, p))
    return float(np.abs(solution.fields[-1] - exact(T)).max())


def check_manufactured(p: PhysParams) -> CheckResult:
    return _result("manufactured_velocity", manufactured_error(p, 100), MANUFACTURED_TOLERANCE, "CN dt = 1e-3")


@dataclass(frozen=True)
class ManufacturedPair:
    """
    Couple lisse non polynomial en x₃, solution exacte à ρ₀ ≡ 1, η̃ = Id,
    Θ̃ = 0 avec les forçages associés :

        v* = e^{−t}(0, 0, cos πx₃)                 traction nulle en x₃ ∈ {0, 1}
        θ* = e^{−t} sin(πx₃)(1 + 0.1 cos 2πx₁)     nulle en x₃ ∈ {0, 1}
    """
    grid: GridSpec
    velocity: Callable[[float], np.ndarray]
    temperature: Callable[[float], np.ndarray]
    velocity_forcing: Callable[[float], Field]
    temperature_forcing: Callable[[float], Field]


def manufactured_pair(grid: GridSpec, p: PhysParams) -> ManufacturedPair:
    x1, _, x3 = grid.mesh()
    zeros = np.zeros_like(x3)
    vertical = np.cos(np.pi * x3)
    sine = np.sin(np.pi * x3)
    ripple = np.cos(2.0 * np.pi * x1)
    rest = FrozenCoefficients.at_rest(grid).at(0)
    rho0 = Field(grid, np.ones(grid.shape))

    def velocity(t: float) -> np.ndarray:
        return np.exp(-t) * np.stack([zeros, zeros, vertical])

    def temperature(t: float) -> np.ndarray:
        return np.exp(-t) * sine * (1.0 + 0.1 * ripple)

    def velocity_forcing(t: float) -> Field:
        # v*_t − (2μ + λ)∂₃²v*³
        amplitude = np.exp(-t) * ((2.0 * p.mu + p.lam) * np.pi**2 - 1.0) * vertical
        return Field(grid, np.stack([zeros, zeros, amplitude]))

    def temperature_forcing(t: float) -> Field:
        # c_vθ*_t − κΔθ* − 𝕊[v*] : Dv*
        laplacian = -np.pi**2 * temperature(t) - 0.4 * np.pi**2 * np.exp(-t) * sine * ripple
        work = temperature_source(grid, rest, velocity(t), rho0, p)
        return Field(grid, -p.c_v * temperature(t) - p.kappa * laplacian - work)

    return ManufacturedPair(grid, velocity, temperature, velocity_forcing, temperature_forcing)


def solve_manufactured_pair(
    p: PhysParams, n_steps: int, m3: int, T: float = 0.1, n3: int = PAIR_N3
) -> tuple[ManufacturedPair, GalerkinSolution, GalerkinSolution]:
    """
    Vitesse et température de Galerkin (CN) pour le couple manufacturé ;
    la température reçoit v* exacte aux nœuds temporels.
    """
    grid = make_grid(4, 4, n3)
    pair = manufactured_pair(grid, p)
    data = _uniform_data(grid, Field(grid, pair.velocity(0.0)), Field(grid, pair.temperature(0.0)))
    tg = TimeGrid(T, n_steps, TimeScheme.CRANK_NICOLSON)
    basis = build_basis(grid, 2, m3)
    frozen = FrozenCoefficients.at_rest(grid)
    velocity = solve_velocity(frozen, data, p, tg, basis, pair.velocity_forcing)
    exact_velocity = np.stack([pair.velocity(t) for t in tg.times])
    temperature = solve_temperature(exact_velocity, frozen, data, p, tg, basis, pair.temperature_forcing)
    return pair, velocity, temperature


def manufactured_pair_errors(p: PhysParams, n_steps: int, m3: int) -> tuple[float, float]:
    """Erreurs max à t = T (vitesse, température) contre (v*, θ*)."""
    pair, velocity, temperature = solve_manufactured_pair(p, n_steps, m3)
    T = velocity.time_grid.T
    return (
        float(np.abs(velocity.fields[-1] - pair.velocity(T)).max()),
        float(np.abs(temperature.fields[-1, 0] - pair.temperature(T)).max()),
    )


def self_convergence_rates(p: PhysParams, steps: tuple[int, int, int] = ORDER_STEPS) -> tuple[float, float]:
    """
    Ordre en temps par auto-convergence : log₂ des écarts entre pas
    successifs dt, dt/2, dt/4 sur une base fine.
    """
    finals = []
    for n_steps in steps:
        _, velocity, temperature = solve_manufactured_pair(p, n_steps, ORDER_M3)
        finals.append((velocity.fields[-1], temperature.fields[-1]))
    rates = []
    for component in (0, 1):
        coarse = np.abs(finals[0][component] - finals[1][component]).max()
        fine = np.abs(finals[1][component] - finals[2][component]).max()
        rates.append(float(np.log2(coarse / fine)))
    return rates[0], rates[1]


def check_convergence_order(p: PhysParams) -> list[CheckResult]:
    """Ordre 2 ± 0.2 des deux solveurs CN."""
    velocity_rate, temperature_rate = self_convergence_rates(p)
    return [
        _result(f"convergence_order_{name}", abs(rate - 2.0), ORDER_TOLERANCE, f"ordre {rate:.3f}")
        for name, rate in (("velocity", velocity_rate), ("temperature", temperature_rate))
    ]


def check_spatial_decay(p: PhysParams) -> list[CheckResult]:
    """Décroissance spectrale : l'erreur doit être divisée par au moins 10 de m3 = 4 à m3 = 6."""
    coarse = manufactured_pair_errors(p, DECAY_STEPS, 4)
    fine = manufactured_pair_errors(p, DECAY_STEPS, 6)
    return [
        _result(f"spatial_decay_{name}", f / c, DECAY_FACTOR, f"erreur {c:.3e} → {f:.3e}")
        for name, c, f in (("velocity", coarse[0], fine[0]), ("temperature", coarse[1], fine[1]))
    ]


def run_verification(cfg: RunConfig, seed: int = 0) -> VerifyReport:
    """
    Exécute toute la suite sur la grille de la configuration ; Piola et
    cofacteur tournent toujours sur 32×32×33.

    Raises:
        ConfigurationError: Données initiales invalides
    """
    grid = make_grid(cfg.grid.n1, cfg.grid.n2, cfg.grid.n3)
    report = VerifyReport()
    logger.info(f"🔍 Vérification sur la grille {grid.n1}×{grid.n2}×{grid.n3}")
    report.checks.extend(check_initial_compatibility(cfg))
    report.checks.extend(check_piola_and_cofactor(seed=seed))
    report.checks.append(check_jacobian_rate(grid, seed))
    report.checks.append(check_apriori_identity(grid))
    report.checks.extend(check_inequalities(grid))
    report.checks.append(check_heat_mode(cfg.physics))
    report.checks.append(check_manufactured(cfg.physics))
    report.checks.extend(check_convergence_order(cfg.physics))
    report.checks.extend(check_spatial_decay(cfg.physics))
    for name in report.warnings:
        logger.warning(f"⚠️ Avertissement de compatibilité : {name}")
    return report
