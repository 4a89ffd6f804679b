"""
Discrétisation de Galerkin et intégration en temps du système linéarisé :
à coefficients (η̃, Θ̃) figés, résout l'équation de la vitesse puis celle
de la température.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy import linalg

from src.exceptions import AprioriViolated, GridMismatch, InvalidResolution, LinearSolveFailure, SingularMass
from src.models import PhysParams, TimeScheme
from src.numerics.grid import Field, GridSpec, gradient_array, integrate_array, product, readonly_array
from src.numerics.kinematics import (
    J_LOWER,
    J_UPPER,
    Deformation,
    FlowMap,
    check_apriori,
    compute_deformation,
    identity_flow_map,
)
from src.numerics.operators import (
    conduction_pairing,
    contracted_gradient,
    pressure_array,
    pressure_pairing,
    stress_array,
    stress_work_array,
    viscous_pairing,
)
from src.solver.initial_data import InitialData
from src.solver.trajectory import TimeGrid

logger = logging.getLogger(__name__)

MASS_EIGEN_FLOOR = 1e-14

Forcing = Callable[[float], Field]


# =============================================================================
# BASES
# =============================================================================

def fourier_modes(m: int) -> list[tuple[str, int]]:
    """Modes réels 1, cos 2πx, sin 2πx, cos 4πx, … (m modes)."""
    modes = [("const", 0)]
    k = 1
    while len(modes) < m:
        modes.append(("cos", k))
        if len(modes) < m:
            modes.append(("sin", k))
        k += 1
    return modes


def _fourier_values(kind: str, k: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    arg = 2.0 * np.pi * k * x
    if kind == "const":
        return np.ones_like(x), np.zeros_like(x)
    if kind == "cos":
        return np.cos(arg), -2.0 * np.pi * k * np.sin(arg)
    return np.sin(arg), 2.0 * np.pi * k * np.cos(arg)


def _polynomial_values(coefficients: np.ndarray, x3: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Valeur et dérivée en x₃ d'une série de Chebyshev en ξ = 2x₃ − 1."""
    xi = 2.0 * x3 - 1.0
    return cheb.chebval(xi, coefficients), 2.0 * cheb.chebval(xi, cheb.chebder(coefficients))


def _unit(n: int) -> np.ndarray:
    c = np.zeros(n + 1)
    c[n] = 1.0
    return c


@dataclass(frozen=True, eq=False)
class ModeSpace:
    """Modes orthonormalisés en L² discret : valeurs (nb, N) et gradients (3, nb, N)."""
    descriptors: tuple[tuple, ...]
    values: np.ndarray
    gradients: np.ndarray

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def synthesize(self, coefficients: np.ndarray, grid: GridSpec) -> np.ndarray:
        """Coefficients (…, nb) → valeurs nodales (…, n3, n2, n1)."""
        return (np.asarray(coefficients) @ self.values).reshape(*np.shape(coefficients)[:-1], *grid.shape)


def _mode_space(grid: GridSpec, m: int, polynomials: list[tuple[int, np.ndarray]]) -> ModeSpace:
    x1, x2, x3 = grid.x1_nodes, grid.x2_nodes, grid.x3_nodes
    rows, grads, descriptors = [], [], []
    for kind1, k1 in fourier_modes(m):
        f1, df1 = _fourier_values(kind1, k1, x1)
        for kind2, k2 in fourier_modes(m):
            f2, df2 = _fourier_values(kind2, k2, x2)
            for degree, coefficients in polynomials:
                p3, dp3 = _polynomial_values(coefficients, x3)
                value = np.einsum("z,y,x->zyx", p3, f2, f1)
                rows.append(value.ravel())
                grads.append(
                    np.stack(
                        [
                            np.einsum("z,y,x->zyx", p3, f2, df1).ravel(),
                            np.einsum("z,y,x->zyx", p3, df2, f1).ravel(),
                            np.einsum("z,y,x->zyx", dp3, f2, f1).ravel(),
                        ]
                    )
                )
                descriptors.append((kind1, k1, kind2, k2, degree))
    phi = np.array(rows)
    dphi = np.stack(grads, axis=1)
    w = grid.node_weights().ravel()
    gram = (phi * w) @ phi.T
    try:
        lower = linalg.cholesky(gram, lower=True)
    except linalg.LinAlgError as exc:
        raise InvalidResolution(f"base non libre sur la grille {grid.shape} : {exc}") from exc
    phi = linalg.solve_triangular(lower, phi, lower=True)
    dphi = np.stack([linalg.solve_triangular(lower, dphi[r], lower=True) for r in range(3)])
    return ModeSpace(tuple(descriptors), readonly_array(phi), readonly_array(dphi))


@dataclass(frozen=True, eq=False)
class BasisSet:
    """Bases de Galerkin : vitesse dans H¹, température dans H¹₀."""
    grid: GridSpec
    m: int
    m3: int
    velocity: ModeSpace
    temperature: ModeSpace

    def gram_matrix(self, space: str = "velocity") -> np.ndarray:
        modes = getattr(self, space)
        return (modes.values * self.grid.node_weights().ravel()) @ modes.values.T


def build_basis(g: GridSpec, m: int, m3: int | None = None) -> BasisSet:
    """
    Modes Fourier réels × T_n(2x₃ − 1) pour la vitesse et
    Fourier × (T_n − T_{n mod 2}) pour la température, n = 2 … m3 + 1.

    Raises:
        InvalidResolution: Si les modes ne sont pas résolus par la grille
    """
    m3 = m if m3 is None else m3
    if m < 1 or m3 < 1:
        raise InvalidResolution("m et m3 doivent être ≥ 1")
    k_max = m // 2
    if 2 * k_max >= min(g.n1, g.n2):
        raise InvalidResolution(f"m = {m} : fréquence {k_max} non résolue par {g.n1}×{g.n2}")
    if m3 + 2 > g.n3:
        raise InvalidResolution(f"m3 = {m3} : trop de modes pour n3 = {g.n3}")

    velocity_polys = [(n, _unit(n)) for n in range(m3)]
    temperature_polys = []
    for n in range(2, m3 + 2):
        coefficients = _unit(n)
        coefficients[n % 2] -= 1.0
        temperature_polys.append((n, coefficients))

    basis = BasisSet(
        grid=g,
        m=m,
        m3=m3,
        velocity=_mode_space(g, m, velocity_polys),
        temperature=_mode_space(g, m, temperature_polys),
    )
    logger.debug(f"📐 Base : {basis.velocity.size} modes vitesse, {basis.temperature.size} modes température")
    return basis


def assemble_mass(rho0: Field, b: BasisSet, space: str = "velocity") -> np.ndarray:
    """
    (ρ₀ w_l, w_s) par quadrature.

    Raises:
        SingularMass: Si la plus petite valeur propre est ≤ 1e-14
    """
    modes = getattr(b, space)
    weighted = modes.values * (b.grid.node_weights() * rho0.scalar).ravel()
    mass = weighted @ modes.values.T
    mass = 0.5 * (mass + mass.T)
    smallest = float(linalg.eigvalsh(mass, subset_by_index=[0, 0])[0])
    if smallest <= MASS_EIGEN_FLOOR:
        raise SingularMass(f"matrice de masse non définie positive (λ_min = {smallest:.3e})")
    return mass


# =============================================================================
# COEFFICIENTS FIGÉS
# =============================================================================

@dataclass(frozen=True)
class CoefficientSample:
    """ã, Ã, J̃ (via la déformation) et Θ̃ à un instant d'échantillonnage."""
    defm: Deformation
    Theta: Field
    time: float


@dataclass(frozen=True)
class FrozenCoefficients:
    """Coefficients échantillonnés à chaque pas (milieu pour CN, fin pour BE)."""
    samples: tuple[CoefficientSample, ...]
    stationary: bool = False

    def __post_init__(self):
        for sample in self.samples:
            jac = sample.defm.J.scalar
            if jac.min() < J_LOWER or jac.max() > J_UPPER:
                raise AprioriViolated(
                    f"J̃ ∈ [{jac.min():.4f}, {jac.max():.4f}] hors de [{J_LOWER}, {J_UPPER}] à t = {sample.time:.6g}"
                )

    @property
    def grid(self) -> GridSpec:
        return self.samples[0].defm.grid

    def at(self, n: int) -> CoefficientSample:
        return self.samples[0] if self.stationary else self.samples[n]

    @classmethod
    def at_rest(cls, grid: GridSpec, Theta: Field | None = None) -> FrozenCoefficients:
        """η̃ = Id et Θ̃ donnée (nulle par défaut), constants en temps."""
        defm = compute_deformation(identity_flow_map(grid))
        return cls((CoefficientSample(defm, Theta or Field.zeros(grid), 0.0),), stationary=True)

    @classmethod
    def from_history(
        cls,
        grid: GridSpec,
        etas: np.ndarray,
        thetas: np.ndarray,
        tg: TimeGrid,
        deta_bound: float | None = None,
    ) -> FrozenCoefficients:
        """
        Échantillonne (η̃, Θ̃) : moyenne des pas n, n+1 pour CN, pas n+1 pour BE.

        Raises:
            AprioriViolated: Si l'hypothèse a priori échoue en un échantillon
        """
        samples = []
        for n in range(tg.n_steps):
            if tg.scheme is TimeScheme.CRANK_NICOLSON:
                eta = 0.5 * (etas[n] + etas[n + 1])
                theta = 0.5 * (thetas[n] + thetas[n + 1])
            else:
                eta, theta = etas[n + 1], thetas[n + 1]
            time = tg.coefficient_time(n)
            defm = compute_deformation(FlowMap(Field(grid, eta), time))
            check = check_apriori(defm, deta_bound)
            if not check.ok:
                raise AprioriViolated(
                    f"hypothèse a priori violée à t = {time:.6g} : J ∈ [{check.j_min:.4f}, {check.j_max:.4f}], "
                    f"|Dη| = {check.deta_max:.4f}"
                )
            samples.append(CoefficientSample(defm, Field(grid, theta), time))
        return cls(tuple(samples))


# =============================================================================
# ASSEMBLAGE
# =============================================================================

def _flat(grid: GridSpec, matrix: np.ndarray) -> np.ndarray:
    return matrix.reshape(3, 3, grid.size)


def velocity_stiffness(b: BasisSet, sample: CoefficientSample, p: PhysParams) -> np.ndarray:
    """
    Forme bilinéaire ∫ ãʳⱼ 𝕊ⁱʲ_η̃[w_l eⱼ'] ∂ᵣw_s, blocs (i, j) de taille nb.

    Cᵢⱼ[r, k] = μδᵢⱼ(ãÃᵀ)[r, k] + μ ã[r, j]Ã[k, i] + λ ã[r, i]Ã[k, j].
    """
    grid = b.grid
    a = _flat(grid, sample.defm.a_matrix)
    A = _flat(grid, sample.defm.A_matrix)
    w = grid.node_weights().ravel()
    metric = np.einsum("rjn,kjn->rkn", a, A)
    grads = b.velocity.gradients
    nb = b.velocity.size
    stiffness = np.zeros((3 * nb, 3 * nb))
    for i in range(3):
        for j in range(i, 3):
            coeff = p.mu * np.einsum("rn,kn->rkn", a[:, j], A[:, i]) + p.lam * np.einsum("rn,kn->rkn", a[:, i], A[:, j])
            if i == j:
                coeff = coeff + p.mu * metric
            weighted = np.einsum("rkn,kln->rln", coeff * w, grads)
            block = np.tensordot(grads, weighted, axes=([0, 2], [0, 2]))
            stiffness[i * nb : (i + 1) * nb, j * nb : (j + 1) * nb] = block
            if i != j:
                stiffness[j * nb : (j + 1) * nb, i * nb : (i + 1) * nb] = block.T
    return stiffness


def temperature_stiffness(b: BasisSet, sample: CoefficientSample, p: PhysParams) -> np.ndarray:
    """κ ∫ (ãÃᵀ)[r, k] ∂ₖψ_l ∂ᵣψ_s."""
    grid = b.grid
    a = _flat(grid, sample.defm.a_matrix)
    A = _flat(grid, sample.defm.A_matrix)
    metric = np.einsum("rjn,kjn->rkn", a, A) * grid.node_weights().ravel()
    grads = b.temperature.gradients
    weighted = np.einsum("rkn,kln->rln", metric, grads)
    return p.kappa * np.tensordot(grads, weighted, axes=([0, 2], [0, 2]))


def frozen_pressure(sample: CoefficientSample, rho0: Field, p: PhysParams) -> np.ndarray:
    """P̃ = Rρ₀Θ̃/J̃."""
    return pressure_array(rho0.scalar, sample.Theta.scalar, sample.defm.J.scalar, p)


def velocity_load(b: BasisSet, sample: CoefficientSample, rho0: Field, p: PhysParams) -> np.ndarray:
    """∫ ãʳᵢ P̃ ∂ᵣw_s, composante i par blocs."""
    grid = b.grid
    a = _flat(grid, sample.defm.a_matrix)
    press = frozen_pressure(sample, rho0, p).ravel() * grid.node_weights().ravel()
    grads = b.velocity.gradients
    return np.concatenate([np.einsum("rn,rsn->s", a[:, i] * press, grads) for i in range(3)])


def forcing_load(modes: ModeSpace, grid: GridSpec, forcing: Field) -> np.ndarray:
    """∫ f·w_s pour chaque composante de f, concaténé."""
    f = forcing.values.reshape(forcing.components, grid.size) * grid.node_weights().ravel()
    return np.concatenate([modes.values @ component for component in f])


def temperature_source(
    grid: GridSpec, sample: CoefficientSample, v: np.ndarray, rho0: Field, p: PhysParams
) -> np.ndarray:
    """𝕊_η̃[v] : ã Dv − P̃ ãʳᵢvⁱ,ᵣ aux nœuds."""
    defm = sample.defm
    dv = gradient_array(grid, v)
    sigma = stress_array(grid, v, defm.A_matrix, p)
    press = frozen_pressure(sample, rho0, p)
    return stress_work_array(grid, sigma, defm.a_matrix, dv) - product(grid, press, contracted_gradient(defm.a_matrix, dv))


def temperature_load(
    b: BasisSet, sample: CoefficientSample, v: np.ndarray, rho0: Field, p: PhysParams, forcing: Field | None = None
) -> np.ndarray:
    source = temperature_source(b.grid, sample, v, rho0, p)
    if forcing is not None:
        source = source + forcing.scalar
    return b.temperature.values @ (source.ravel() * b.grid.node_weights().ravel())


# =============================================================================
# INTÉGRATION EN TEMPS
# =============================================================================


@dataclass(frozen=True, eq=False)
class GalerkinSolution:
    """Valeurs nodales (n_steps + 1, C, n3, n2, n1) et coefficients de Galerkin par pas."""
    grid: GridSpec
    fields: np.ndarray
    coefficients: np.ndarray
    time_grid: TimeGrid

    def field(self, n: int) -> Field:
        return Field(self.grid, self.fields[n])


@dataclass(frozen=True)
class WeakDefects:
    """Défauts absolus des deux identités faibles, un par fonction test."""
    velocity: list[float]
    temperature: list[float]

    @property
    def max(self) -> float:
        return max(self.velocity + self.temperature, default=0.0)


def _factor(matrix: np.ndarray):
    try:
        lu, piv = linalg.lu_factor(matrix)
    except (linalg.LinAlgError, ValueError) as exc:
        raise LinearSolveFailure(f"factorisation impossible : {exc}") from exc
    diagonal = np.abs(np.diag(lu))
    if diagonal.min() <= np.finfo(float).eps * diagonal.max():
        raise LinearSolveFailure("système d'un pas de temps singulier")
    return lu, piv


def _solve(factor, rhs: np.ndarray) -> np.ndarray:
    solution = linalg.lu_solve(factor, rhs)
    if not np.all(np.isfinite(solution)):
        raise LinearSolveFailure("solution non finie")
    return solution


def _implicit_weight(tg: TimeGrid) -> float:
    return 0.5 if tg.scheme is TimeScheme.CRANK_NICOLSON else 1.0


def _check_inputs(frozen: FrozenCoefficients, data: InitialData, tg: TimeGrid, b: BasisSet) -> None:
    if frozen.grid != b.grid or data.grid != b.grid:
        raise GridMismatch("coefficients, données et base sur des grilles différentes")
    if not frozen.stationary and len(frozen.samples) != tg.n_steps:
        raise GridMismatch(f"{len(frozen.samples)} échantillons pour {tg.n_steps} pas de temps")


def weighted_projection(modes: ModeSpace, grid: GridSpec, weight: np.ndarray, values: np.ndarray, mass: np.ndarray):
    """Coefficients c avec (ρ w_s, Σ c_l w_l) = (ρ w_s, f) pour chaque composante."""
    w = grid.node_weights().ravel() * weight.ravel()
    flat = values.reshape(values.shape[0], grid.size) * w
    rhs = np.stack([modes.values @ component for component in flat], axis=1)
    return linalg.solve(mass, rhs, assume_a="pos").T


def solve_velocity(
    frozen: FrozenCoefficients,
    data: InitialData,
    p: PhysParams,
    tg: TimeGrid,
    b: BasisSet,
    forcing: Forcing | None = None,
) -> GalerkinSolution:
    """
    Galerkin pour ρ₀v_t = −ãʳᵢ(Rρ₀Θ̃/J̃),ᵣ + ãʳⱼ(𝕊ⁱʲ_η̃[v]),ᵣ (+ f),
    condition de traction naturelle, schéma BE ou CN.

    Raises:
        SingularMass: Masse non définie positive
        LinearSolveFailure: Système d'un pas non résoluble
        AprioriViolated: J̃ hors des bornes a priori
    """
    _check_inputs(frozen, data, tg, b)
    grid, dt, weight = b.grid, tg.dt, _implicit_weight(tg)
    nb = b.velocity.size
    mass = assemble_mass(data.rho0, b)
    mass_full = np.kron(np.eye(3), mass)

    c = weighted_projection(b.velocity, grid, data.rho0.scalar, data.u0.values, mass).ravel()
    coefficients = [c]
    fields = [data.u0.values]
    factor = stiffness = base_load = None

    for n in range(tg.n_steps):
        sample = frozen.at(n)
        if factor is None or not frozen.stationary:
            stiffness = velocity_stiffness(b, sample, p)
            factor = _factor(mass_full / dt + weight * stiffness)
            base_load = velocity_load(b, sample, data.rho0, p)
        load = base_load
        if forcing is not None:
            load = load + forcing_load(b.velocity, grid, forcing(tg.coefficient_time(n)))
        rhs = mass_full @ c / dt - (1.0 - weight) * (stiffness @ c) + load
        c = _solve(factor, rhs)
        coefficients.append(c)
        fields.append(b.velocity.synthesize(c.reshape(3, nb), grid))

    logger.debug(f"✅ Vitesse résolue sur {tg.n_steps} pas ({tg.scheme.value})")
    return GalerkinSolution(grid, readonly_array(np.stack(fields)), np.stack(coefficients), tg)


def _fields(solution: GalerkinSolution | np.ndarray) -> np.ndarray:
    return solution.fields if isinstance(solution, GalerkinSolution) else np.asarray(solution)


def _step_average(series: np.ndarray, n: int, weight: float) -> np.ndarray:
    return weight * series[n + 1] + (1.0 - weight) * series[n]


def solve_temperature(
    v: GalerkinSolution | np.ndarray,
    frozen: FrozenCoefficients,
    data: InitialData,
    p: PhysParams,
    tg: TimeGrid,
    b: BasisSet,
    forcing: Forcing | None = None,
) -> GalerkinSolution:
    """
    Galerkin H¹₀ pour c_vρ₀Θ_t = 𝕊_η̃[v] : ãDv − P̃ ãʳᵢvⁱ,ᵣ + κ ãʳᵢ(∇_η̃Θ)ⁱ,ᵣ (+ g),
    termes de travail et de compression calculés à partir de v.
    """
    _check_inputs(frozen, data, tg, b)
    velocities = _fields(v)
    if velocities.shape[0] != tg.n_steps + 1:
        raise GridMismatch("vitesse et grille temporelle incompatibles")
    grid, dt, weight = b.grid, tg.dt, _implicit_weight(tg)
    mass = p.c_v * assemble_mass(data.rho0, b, "temperature")

    c = weighted_projection(b.temperature, grid, data.rho0.scalar, data.theta0.values, mass / p.c_v)[0]
    coefficients = [c]
    fields = [data.theta0.values]
    factor = stiffness = None

    for n in range(tg.n_steps):
        sample = frozen.at(n)
        if factor is None or not frozen.stationary:
            stiffness = temperature_stiffness(b, sample, p)
            factor = _factor(mass / dt + weight * stiffness)
        v_bar = _step_average(velocities, n, weight)
        source = forcing(tg.coefficient_time(n)) if forcing is not None else None
        load = temperature_load(b, sample, v_bar, data.rho0, p, source)
        rhs = mass @ c / dt - (1.0 - weight) * (stiffness @ c) + load
        c = _solve(factor, rhs)
        coefficients.append(c)
        fields.append(b.temperature.synthesize(c, grid)[None])

    logger.debug(f"✅ Température résolue sur {tg.n_steps} pas ({tg.scheme.value})")
    return GalerkinSolution(grid, readonly_array(np.stack(fields)), np.stack(coefficients), tg)


def weak_residual(
    v: GalerkinSolution | np.ndarray,
    Theta: GalerkinSolution | np.ndarray,
    frozen: FrozenCoefficients,
    data: InitialData,
    p: PhysParams,
    tg: TimeGrid,
    velocity_tests: list[Field],
    temperature_tests: list[Field],
    velocity_forcing: Forcing | None = None,
    temperature_forcing: Forcing | None = None,
) -> WeakDefects:
    """
    Défauts des identités faibles intégrées sur [0, T] pour des fonctions
    test indépendantes du temps, avec la quadrature en temps du schéma.
    """
    velocities, temperatures = _fields(v), _fields(Theta)
    grid, dt, weight = data.grid, tg.dt, _implicit_weight(tg)
    rho = data.rho0.scalar

    v_defects = []
    for phi in velocity_tests:
        total = integrate_array(grid, rho * np.einsum("ixyz,ixyz->xyz", velocities[-1] - data.u0.values, phi.values))
        for n in range(tg.n_steps):
            sample = frozen.at(n)
            v_bar = _step_average(velocities, n, weight)
            flux = viscous_pairing(grid, v_bar, phi.values, sample.defm, p) - pressure_pairing(
                grid, frozen_pressure(sample, data.rho0, p), phi.values, sample.defm
            )
            if velocity_forcing is not None:
                f = velocity_forcing(tg.coefficient_time(n)).values
                flux -= integrate_array(grid, np.einsum("ixyz,ixyz->xyz", f, phi.values))
            total += dt * flux
        v_defects.append(abs(float(total)))

    theta_defects = []
    for psi in temperature_tests:
        total = p.c_v * integrate_array(grid, rho * (temperatures[-1, 0] - data.theta0.scalar) * psi.scalar)
        for n in range(tg.n_steps):
            sample = frozen.at(n)
            theta_bar = _step_average(temperatures, n, weight)[0]
            v_bar = _step_average(velocities, n, weight)
            source = temperature_source(grid, sample, v_bar, data.rho0, p)
            if temperature_forcing is not None:
                source = source + temperature_forcing(tg.coefficient_time(n)).scalar
            flux = conduction_pairing(grid, theta_bar, psi.scalar, sample.defm, p.kappa) - integrate_array(
                grid, source * psi.scalar
            )
            total += dt * flux
        theta_defects.append(abs(float(total)))

    return WeakDefects(velocity=v_defects, temperature=theta_defects)
