"""
Cinématique lagrangienne : flot η, tenseurs de déformation (A, J, a),
leurs dérivées temporelles, identité de Piola et hypothèse a priori.

Convention des tenseurs : composante 3·r + c = entrée [r, c].
Pour A et a l'indice de ligne est l'indice haut (a[k, i] = aᵏᵢ) ;
pour Dη, [i, j] = ηⁱ,ⱼ.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from src.config import get_settings
from src.exceptions import DegenerateJacobian, GridMismatch, NonFiniteState
from src.models import AprioriCheck
from src.numerics.grid import Field, GridSpec, diff_array, gradient_array

logger = logging.getLogger(__name__)

JACOBIAN_FLOOR = 1e-10
J_LOWER, J_UPPER = 0.5, 1.5

VelocityEvaluator = Union[Field, Callable[[float], Field]]


def as_matrix(values: np.ndarray) -> np.ndarray:
    """(9, n3, n2, n1) -> (3, 3, n3, n2, n1)."""
    return values.reshape(3, 3, *values.shape[1:])


def as_components(matrix: np.ndarray) -> np.ndarray:
    """(3, 3, n3, n2, n1) -> (9, n3, n2, n1)."""
    return matrix.reshape(9, *matrix.shape[2:])


def identity_positions(grid: GridSpec) -> np.ndarray:
    x1, x2, x3 = grid.mesh()
    return np.stack([x1, x2, x3])


def vector_jacobian(grid: GridSpec, vector: np.ndarray) -> np.ndarray:
    """Dv[i, j] = ∂_j vⁱ pour un tableau (3, n3, n2, n1)."""
    return gradient_array(grid, vector)


@dataclass(frozen=True)
class FlowMap:
    """Positions y = η(x, t) des étiquettes matérielles."""
    eta: Field
    time: float = 0.0

    @property
    def grid(self) -> GridSpec:
        return self.eta.grid

    def displacement(self) -> np.ndarray:
        """η − Id, périodique en x₁, x₂."""
        return self.eta.values - identity_positions(self.grid)


@dataclass(frozen=True)
class Deformation:
    """Triplet (A, J, a) et gradient Dη à un instant."""
    A: Field
    J: Field
    a: Field
    Deta: Field

    @property
    def grid(self) -> GridSpec:
        return self.J.grid

    @property
    def A_matrix(self) -> np.ndarray:
        return as_matrix(self.A.values)

    @property
    def a_matrix(self) -> np.ndarray:
        return as_matrix(self.a.values)

    @property
    def Deta_matrix(self) -> np.ndarray:
        return as_matrix(self.Deta.values)


def identity_flow_map(grid: GridSpec) -> FlowMap:
    """η(0) = Id."""
    return FlowMap(Field(grid, identity_positions(grid)), 0.0)


def _velocity_at(v: VelocityEvaluator, time: float) -> np.ndarray:
    return v.values if isinstance(v, Field) else v(time).values


def advance_flow_map(m: FlowMap, v: VelocityEvaluator, dt: float) -> FlowMap:
    """
    Avance η_t = v d'un pas dt par Runge–Kutta classique à 4 étages.

    Args:
        m: Flot courant
        v: Vitesse figée (Field) ou évaluateur temps -> Field
        dt: Pas de temps > 0
    """
    if dt <= 0:
        raise ValueError(f"dt doit être > 0 (reçu {dt})")
    t = m.time
    k1 = _velocity_at(v, t)
    k2 = _velocity_at(v, t + dt / 2)
    k3 = _velocity_at(v, t + dt / 2)
    k4 = _velocity_at(v, t + dt)
    # η_t ne dépend pas de η : les étages se réduisent à des évaluations en temps
    eta = m.eta.values + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(eta)):
        raise NonFiniteState(f"flot non fini à t = {t + dt:.6g}")
    return FlowMap(Field(m.grid, eta), t + dt)


def deformation_from_gradient(grid: GridSpec, deta: np.ndarray) -> Deformation:
    """Construit (A, J, a) à partir de Dη sous forme (3, 3, n3, n2, n1)."""
    stacked = np.moveaxis(deta, (0, 1), (-2, -1))
    jac = np.linalg.det(stacked)
    if np.min(np.abs(jac)) < JACOBIAN_FLOOR:
        raise DegenerateJacobian(f"|J| minimal {np.min(np.abs(jac)):.3e} < {JACOBIAN_FLOOR}")
    inverse = np.moveaxis(np.linalg.inv(stacked), (-2, -1), (0, 1))
    cof = inverse * jac
    return Deformation(
        A=Field(grid, as_components(inverse)),
        J=Field(grid, jac),
        a=Field(grid, as_components(cof)),
        Deta=Field(grid, as_components(deta)),
    )


def compute_deformation(m: FlowMap) -> Deformation:
    """
    Dη par différentiation spectrale du déplacement, J = det, A = (Dη)⁻¹, a = J·A.

    Raises:
        DegenerateJacobian: Si |J| < 1e-10 en un nœud
    """
    grid = m.grid
    deta = vector_jacobian(grid, m.displacement())
    deta = deta + np.eye(3)[:, :, None, None, None]
    return deformation_from_gradient(grid, deta)


def cofactor_matrix(deta: Field) -> Field:
    """
    Adjugée de Dη par mineurs 2×2, dans la disposition aᵏᵢ.

    Oracle indépendant de l'inversion numérique : a[k, i] = cof(Dη)[i, k].
    """
    m = as_matrix(deta.values)
    cof = np.empty_like(m)
    for i in range(3):
        i1, i2 = (i + 1) % 3, (i + 2) % 3
        for k in range(3):
            k1, k2 = (k + 1) % 3, (k + 2) % 3
            cof[k, i] = m[i1, k1] * m[i2, k2] - m[i1, k2] * m[i2, k1]
    return Field(deta.grid, as_components(cof))


def deformation_rates(d: Deformation, v: Field) -> tuple[Field, Field]:
    """
    Dérivées temporelles J_t = aˢᵣ vʳ,ₛ et
    (a_t)ᵏᵢ = J⁻¹ vʳ,ₛ (aˢᵣ aᵏᵢ − aˢᵢ aᵏᵣ).

    Returns:
        (J_t, a_t)
    """
    if v.grid != d.grid or v.components != 3:
        raise GridMismatch("la vitesse doit être un champ vectoriel sur la grille de la déformation")
    jac = d.J.scalar
    if np.min(np.abs(jac)) < JACOBIAN_FLOOR:
        raise DegenerateJacobian("Jacobien dégénéré dans deformation_rates")
    a = d.a_matrix
    dv = vector_jacobian(d.grid, v.values)
    # dv[r, s] = vʳ,ₛ ; a[s, r] = aˢᵣ
    j_t = np.einsum("srxyz,rsxyz->xyz", a, dv)
    # contraction B[s, r] = aˢᵣ… puis a_t[k, i] = J⁻¹ (J_t aᵏᵢ − aᵏᵣ vʳ,ₛ aˢᵢ)
    a_dv_a = np.einsum("krxyz,rsxyz,sixyz->kixyz", a, dv, a)
    a_t = (j_t[None, None] * a - a_dv_a) / jac[None, None]
    return Field(d.grid, j_t), Field(d.grid, as_components(a_t))


def inverse_rate(d: Deformation, j_t: Field, a_t: Field) -> np.ndarray:
    """A_t = a_t/J − a J_t/J², forme (3, 3, n3, n2, n1)."""
    jac = d.J.scalar
    return as_matrix(a_t.values) / jac - d.a_matrix * (j_t.scalar / jac**2)


def piola_residual(d: Deformation) -> Field:
    """aᵏᵢ,ₖ par différentiation spectrale des cofacteurs (3 composantes)."""
    a = d.a_matrix
    residual = sum(diff_array(d.grid, a[k], k + 1) for k in range(3))
    return Field(d.grid, residual)


def check_apriori(d: Deformation, deta_bound: float | None = None) -> AprioriCheck:
    """
    Vérifie 1/2 ≤ J ≤ 3/2 (bornes incluses) et max|Dη| ≤ deta_bound.

    |Dη| est le module maximal des entrées ; la somme des entrées est
    rapportée à titre informatif.
    """
    bound = get_settings().deta_bound if deta_bound is None else deta_bound
    jac = d.J.scalar
    deta = d.Deta_matrix
    j_min, j_max = float(jac.min()), float(jac.max())
    deta_max = float(np.abs(deta).max())
    entry_sum = float(np.abs(deta).sum(axis=(0, 1)).max())
    ok = J_LOWER <= j_min and j_max <= J_UPPER and deta_max <= bound
    if not ok:
        logger.debug(f"⚠️ Hypothèse a priori violée : J ∈ [{j_min:.4f}, {j_max:.4f}], |Dη| = {deta_max:.4f}")
    return AprioriCheck(
        ok=ok,
        j_min=j_min,
        j_max=j_max,
        deta_max=deta_max,
        deta_entry_sum_max=entry_sum,
        deta_bound=bound,
    )
