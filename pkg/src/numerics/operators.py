"""
Opérateurs différentiels lagrangiens, tenseur des contraintes visqueuses
et résidus ponctuels du système en coordonnées lagrangiennes.

Notations : Dv[i, r] = vⁱ,ᵣ ; a[r, i] = aʳᵢ ; A[k, i] = Aᵏᵢ.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from src.exceptions import DegenerateJacobian, GridMismatch
from src.models import BoundaryStressRecord, PhysParams
from src.numerics.grid import Field, GridSpec, diff_array, gradient_array, integrate_array, product
from src.numerics.kinematics import (
    JACOBIAN_FLOOR,
    Deformation,
    as_components,
    deformation_rates,
    inverse_rate,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StateSlice:
    """Inconnues (v, Θ) et déformation à un instant."""
    v: Field
    Theta: Field
    defm: Deformation
    time: float = 0.0

    def __post_init__(self):
        grid = self.defm.grid
        if self.v.grid != grid or self.Theta.grid != grid:
            raise GridMismatch("v, Θ et la déformation doivent partager la même grille")

    @property
    def grid(self) -> GridSpec:
        return self.defm.grid


def _check_jacobian(d: Deformation) -> np.ndarray:
    jac = d.J.scalar
    if np.min(np.abs(jac)) < JACOBIAN_FLOOR:
        raise DegenerateJacobian(f"|J| minimal {np.min(np.abs(jac)):.3e}")
    return jac


def _interior(values: np.ndarray) -> np.ndarray:
    out = np.array(values)
    out[..., 0, :, :] = 0.0
    out[..., -1, :, :] = 0.0
    return out


# =============================================================================
# OPÉRATEURS DE BASE (tableaux)
# =============================================================================

def eta_gradient_array(grid: GridSpec, scalar: np.ndarray, A: np.ndarray) -> np.ndarray:
    """(∇_η F)ⁱ = Aᵏᵢ F,ₖ."""
    return np.einsum("kixyz,kxyz->ixyz", A, gradient_array(grid, scalar))


def velocity_gradient_array(grid: GridSpec, v: np.ndarray) -> np.ndarray:
    return gradient_array(grid, v)


def stress_array(grid: GridSpec, v: np.ndarray, A: np.ndarray, p: PhysParams) -> np.ndarray:
    """𝕊ⁱʲ = μ(Aᵏⱼ vⁱ,ₖ + Aᵏᵢ vʲ,ₖ) + λ(Aᵏₗ vˡ,ₖ)δⁱʲ, forme (3, 3, …)."""
    dv = gradient_array(grid, v)
    g = np.einsum("kjxyz,ikxyz->ijxyz", A, dv)
    div = np.einsum("iixyz->xyz", g)
    return p.mu * (g + g.transpose(1, 0, 2, 3, 4)) + p.lam * div * np.eye(3)[:, :, None, None, None]


def stress_rate_array(
    grid: GridSpec, v: np.ndarray, v_t: np.ndarray, A: np.ndarray, A_t: np.ndarray, p: PhysParams
) -> np.ndarray:
    """∂_t 𝕊_η[v] à partir de A_t et v_t."""
    dv = gradient_array(grid, v)
    dv_t = gradient_array(grid, v_t)
    g = np.einsum("kjxyz,ikxyz->ijxyz", A_t, dv) + np.einsum("kjxyz,ikxyz->ijxyz", A, dv_t)
    div = np.einsum("iixyz->xyz", g)
    return p.mu * (g + g.transpose(1, 0, 2, 3, 4)) + p.lam * div * np.eye(3)[:, :, None, None, None]


def pressure_array(rho0: np.ndarray, theta: np.ndarray, jac: np.ndarray, p: PhysParams) -> np.ndarray:
    """P = Rρ₀Θ/J."""
    return p.R * rho0 * theta / jac


def contracted_gradient(a: np.ndarray, dv: np.ndarray) -> np.ndarray:
    """aʳᵢ vⁱ,ᵣ (= J div_η v)."""
    return np.einsum("rixyz,irxyz->xyz", a, dv)


def stress_work_array(grid: GridSpec, stress: np.ndarray, a: np.ndarray, dv: np.ndarray) -> np.ndarray:
    """𝕊ⁱʲ aʳⱼ vⁱ,ᵣ, produit désaliasé en x₁, x₂."""
    a_dv = np.einsum("rjxyz,irxyz->ijxyz", a, dv)
    return sum(product(grid, stress[i, j], a_dv[i, j]) for i in range(3) for j in range(3))


def _divergence_rows(grid: GridSpec, a: np.ndarray, tensor: np.ndarray) -> np.ndarray:
    """aʳⱼ Tⁱʲ,ᵣ pour chaque i."""
    out = np.zeros((3, *grid.shape))
    for r in range(3):
        d_t = diff_array(grid, tensor, r + 1)
        out += np.einsum("jxyz,ijxyz->ixyz", a[r], d_t)
    return out


def _row_gradient(grid: GridSpec, a: np.ndarray, scalar: np.ndarray) -> np.ndarray:
    """aʳᵢ F,ᵣ."""
    return np.einsum("rixyz,rxyz->ixyz", a, gradient_array(grid, scalar))


# =============================================================================
# OPÉRATEURS PUBLICS
# =============================================================================

def grad_eta(F: Field, d: Deformation) -> Field:
    """Gradient lagrangien (∇_η F)ⁱ = Aᵏᵢ F,ₖ."""
    return Field(F.grid, eta_gradient_array(F.grid, F.scalar, d.A_matrix))


def div_eta(W: Field, d: Deformation) -> Field:
    """Divergence lagrangienne Aᵏₗ Wˡ,ₖ."""
    dw = gradient_array(W.grid, W.values)
    return Field(W.grid, np.einsum("klxyz,lkxyz->xyz", d.A_matrix, dw))


def stress(W: Field, d: Deformation, p: PhysParams) -> Field:
    """Tenseur visqueux 𝕊_η[W] (9 composantes)."""
    return Field(W.grid, as_components(stress_array(W.grid, W.values, d.A_matrix, p)))


def momentum_forcing(s: StateSlice, rho0: Field, p: PhysParams) -> np.ndarray:
    """−aʳᵢ(Rρ₀Θ/J),ᵣ + aʳⱼ(𝕊ⁱʲ),ᵣ ; ρ₀ v_t égale ce terme pour une solution."""
    grid, d = s.grid, s.defm
    jac = _check_jacobian(d)
    a = d.a_matrix
    press = pressure_array(rho0.scalar, s.Theta.scalar, jac, p)
    sigma = stress_array(grid, s.v.values, d.A_matrix, p)
    return -_row_gradient(grid, a, press) + _divergence_rows(grid, a, sigma)


def temperature_forcing(s: StateSlice, rho0: Field, p: PhysParams) -> np.ndarray:
    """−(Rρ₀Θ/J)aʳᵢvⁱ,ᵣ + 𝕊ⁱʲaʳⱼvⁱ,ᵣ + κ aʳᵢ(∇_ηΘ)ⁱ,ᵣ."""
    grid, d = s.grid, s.defm
    jac = _check_jacobian(d)
    a, A = d.a_matrix, d.A_matrix
    dv = gradient_array(grid, s.v.values)
    press = pressure_array(rho0.scalar, s.Theta.scalar, jac, p)
    sigma = stress_array(grid, s.v.values, A, p)
    flux = eta_gradient_array(grid, s.Theta.scalar, A)
    conduction = sum(np.einsum("ixyz,ixyz->xyz", a[r], diff_array(grid, flux, r + 1)) for r in range(3))
    return (
        -product(grid, press, contracted_gradient(a, dv))
        + stress_work_array(grid, sigma, a, dv)
        + p.kappa * conduction
    )


def momentum_residual(
    s: StateSlice, v_t: Field, rho0: Field, p: PhysParams, interior_only: bool = True
) -> Field:
    """
    ρ₀v_tⁱ + aʳᵢ(Rρ₀Θ/J),ᵣ − aʳⱼ(𝕊ⁱʲ_η[v]),ᵣ aux nœuds.

    Les lignes de bord sont mises à zéro sauf si interior_only=False.
    """
    residual = rho0.scalar * v_t.values - momentum_forcing(s, rho0, p)
    return Field(s.grid, _interior(residual) if interior_only else residual)


def temperature_residual(
    s: StateSlice, Theta_t: Field, rho0: Field, p: PhysParams, interior_only: bool = True
) -> Field:
    """c_vρ₀Θ_t + (Rρ₀Θ/J)aʳᵢvⁱ,ᵣ − 𝕊ⁱʲaʳⱼvⁱ,ᵣ − κ aʳᵢ(∇_ηΘ)ⁱ,ᵣ."""
    residual = p.c_v * rho0.scalar * Theta_t.scalar - temperature_forcing(s, rho0, p)
    return Field(s.grid, _interior(residual) if interior_only else residual)


def traction_array(grid: GridSpec, v: np.ndarray, d: Deformation, p: PhysParams) -> np.ndarray:
    """a³ⱼ𝕊ⁱʲ_η[v] en tout nœud, forme (3, …)."""
    sigma = stress_array(grid, v, d.A_matrix, p)
    return np.einsum("jxyz,ijxyz->ixyz", d.a_matrix[2], sigma)


def boundary_stress_residual(v: Field, d: Deformation, p: PhysParams) -> BoundaryStressRecord:
    """max |a³ⱼ𝕊ⁱʲ_η[v]| par composante sur x₃ = 0 et x₃ = 1."""
    traction = traction_array(v.grid, v.values, d, p)
    bottom = np.abs(traction[:, 0]).max(axis=(1, 2))
    top = np.abs(traction[:, -1]).max(axis=(1, 2))
    return BoundaryStressRecord(bottom=[float(x) for x in bottom], top=[float(x) for x in top])


# =============================================================================
# DÉRIVÉES TEMPORELLES DES SECONDS MEMBRES
# =============================================================================

def momentum_forcing_rate(
    s: StateSlice, v_t: Field, Theta_t: Field, rho0: Field, p: PhysParams
) -> np.ndarray:
    """∂_t du second membre de quantité de mouvement, le long de η_t = v."""
    grid, d = s.grid, s.defm
    jac = _check_jacobian(d)
    j_t, a_t_field = deformation_rates(d, s.v)
    a, A = d.a_matrix, d.A_matrix
    a_t = a_t_field.values.reshape(3, 3, *grid.shape)
    A_t = inverse_rate(d, j_t, a_t_field)
    rho, theta = rho0.scalar, s.Theta.scalar
    press = pressure_array(rho, theta, jac, p)
    press_t = p.R * rho * (Theta_t.scalar / jac - theta * j_t.scalar / jac**2)
    sigma = stress_array(grid, s.v.values, A, p)
    sigma_t = stress_rate_array(grid, s.v.values, v_t.values, A, A_t, p)
    return (
        -_row_gradient(grid, a_t, press)
        - _row_gradient(grid, a, press_t)
        + _divergence_rows(grid, a_t, sigma)
        + _divergence_rows(grid, a, sigma_t)
    )


def temperature_forcing_rate(
    s: StateSlice, v_t: Field, Theta_t: Field, rho0: Field, p: PhysParams
) -> np.ndarray:
    """∂_t du second membre de l'équation de la température."""
    grid, d = s.grid, s.defm
    jac = _check_jacobian(d)
    j_t, a_t_field = deformation_rates(d, s.v)
    a, A = d.a_matrix, d.A_matrix
    a_t = a_t_field.values.reshape(3, 3, *grid.shape)
    A_t = inverse_rate(d, j_t, a_t_field)
    rho, theta = rho0.scalar, s.Theta.scalar
    dv = gradient_array(grid, s.v.values)
    dv_t = gradient_array(grid, v_t.values)
    press = pressure_array(rho, theta, jac, p)
    press_t = p.R * rho * (Theta_t.scalar / jac - theta * j_t.scalar / jac**2)
    sigma = stress_array(grid, s.v.values, A, p)
    sigma_t = stress_rate_array(grid, s.v.values, v_t.values, A, A_t, p)

    compression = (
        press_t * contracted_gradient(a, dv)
        + press * contracted_gradient(a_t, dv)
        + press * contracted_gradient(a, dv_t)
    )
    work = (
        stress_work_array(grid, sigma_t, a, dv)
        + stress_work_array(grid, sigma, a_t, dv)
        + stress_work_array(grid, sigma, a, dv_t)
    )
    dtheta = gradient_array(grid, theta)
    flux = np.einsum("kixyz,kxyz->ixyz", A, dtheta)
    flux_t = np.einsum("kixyz,kxyz->ixyz", A_t, dtheta) + eta_gradient_array(grid, Theta_t.scalar, A)
    conduction = sum(
        np.einsum("ixyz,ixyz->xyz", a_t[r], diff_array(grid, flux, r + 1))
        + np.einsum("ixyz,ixyz->xyz", a[r], diff_array(grid, flux_t, r + 1))
        for r in range(3)
    )
    return -compression + work + p.kappa * conduction


# =============================================================================
# FORMES FAIBLES
# =============================================================================

def _face_integral(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """[∫_{𝕋²} f dx₁dx₂] entre x₃ = 0 et x₃ = 1."""
    return values[..., -1, :, :].mean(axis=(-1, -2)) - values[..., 0, :, :].mean(axis=(-1, -2))


def viscous_pairing(grid: GridSpec, v: np.ndarray, phi: np.ndarray, d: Deformation, p: PhysParams) -> float:
    """∫ aʳⱼ 𝕊ⁱʲ_η[v] φⁱ,ᵣ."""
    sigma = stress_array(grid, v, d.A_matrix, p)
    dphi = gradient_array(grid, phi)
    integrand = np.einsum("rjxyz,ijxyz,irxyz->xyz", d.a_matrix, sigma, dphi)
    return float(integrate_array(grid, integrand))


def pressure_pairing(grid: GridSpec, press: np.ndarray, phi: np.ndarray, d: Deformation) -> float:
    """∫ aʳᵢ P φⁱ,ᵣ."""
    dphi = gradient_array(grid, phi)
    return float(integrate_array(grid, press * contracted_gradient(d.a_matrix, dphi)))


def conduction_pairing(grid: GridSpec, theta: np.ndarray, psi: np.ndarray, d: Deformation, kappa: float) -> float:
    """κ ∫ aʳᵢ (∇_ηΘ)ⁱ ψ,ᵣ."""
    flux = eta_gradient_array(grid, theta, d.A_matrix)
    dpsi = gradient_array(grid, psi)
    return kappa * float(integrate_array(grid, np.einsum("rixyz,ixyz,rxyz->xyz", d.a_matrix, flux, dpsi)))


def weak_momentum_pairing(s: StateSlice, v_t: Field, rho0: Field, p: PhysParams, phi: Field) -> float:
    """
    Forme faible de l'équation de quantité de mouvement contre φ, termes de bord compris.

    Égale ∫ momentum_residual · φ (résidu complet) après intégration par parties.
    """
    grid, d = s.grid, s.defm
    jac = _check_jacobian(d)
    a = d.a_matrix
    press = pressure_array(rho0.scalar, s.Theta.scalar, jac, p)
    traction = traction_array(grid, s.v.values, d, p)
    pressure_flux = a[2] * press
    inertia = integrate_array(grid, rho0.scalar * np.einsum("ixyz,ixyz->xyz", v_t.values, phi.values))
    boundary = _face_integral(grid, np.einsum("ixyz,ixyz->xyz", pressure_flux - traction, phi.values))
    return float(
        inertia
        - pressure_pairing(grid, press, phi.values, d)
        + viscous_pairing(grid, s.v.values, phi.values, d, p)
        + boundary
    )


def weak_temperature_pairing(s: StateSlice, Theta_t: Field, rho0: Field, p: PhysParams, psi: Field) -> float:
    """Forme faible de l'équation de la température contre ψ."""
    grid, d = s.grid, s.defm
    jac = _check_jacobian(d)
    a, A = d.a_matrix, d.A_matrix
    dv = gradient_array(grid, s.v.values)
    press = pressure_array(rho0.scalar, s.Theta.scalar, jac, p)
    sigma = stress_array(grid, s.v.values, A, p)
    flux = eta_gradient_array(grid, s.Theta.scalar, A)
    source = -product(grid, press, contracted_gradient(a, dv)) + stress_work_array(grid, sigma, a, dv)
    normal_flux = np.einsum("ixyz,ixyz->xyz", a[2], flux)
    return float(
        p.c_v * integrate_array(grid, rho0.scalar * Theta_t.scalar * psi.scalar)
        + conduction_pairing(grid, s.Theta.scalar, psi.scalar, d, p.kappa)
        - p.kappa * _face_integral(grid, normal_flux * psi.scalar)
        - integrate_array(grid, source * psi.scalar)
    )


def outward_normal_derivative(grid: GridSpec, scalar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """∇_n F sur Γ avec n = −e₃ en x₃ = 0 et n = +e₃ en x₃ = 1."""
    d3 = diff_array(grid, scalar, 3)
    return -d3[..., 0, :, :], d3[..., -1, :, :]
