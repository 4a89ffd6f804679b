"""
Contrôles numériques des inégalités de Hardy (1-D) et de Korn (pondérée ou non).
Les rapports sont rendus tels quels, sans seuil.
"""

from __future__ import annotations

import logging

import numpy as np
from numpy.polynomial import Chebyshev
from scipy import linalg
from scipy.special import roots_jacobi

from src.diagnostics.norms import sobolev_seminorms_sq
from src.exceptions import GridMismatch, UnsupportedExponent
from src.models import InequalityResult, KornStudyRow
from src.numerics.grid import Field, GridSpec, gradient_array, integrate_array

logger = logging.getLogger(__name__)

UNIT_DOMAIN = [0.0, 1.0]


def lobatto_nodes(n: int) -> np.ndarray:
    """n + 1 points de Chebyshev–Lobatto croissants sur [0, 1]."""
    return (1.0 - np.cos(np.pi * np.arange(n + 1) / n)) / 2.0


def weighted_integral(poly: Chebyshev, beta: float, points: int) -> float:
    """∫₀¹ s^β poly(s) ds par Gauss–Jacobi, β > −1."""
    x, w = roots_jacobi(points, 0.0, beta)
    return float(2.0 ** (-beta - 1.0) * np.dot(w, poly((1.0 + x) / 2.0)))


def _check_exponent(k: float) -> None:
    if k == 1:
        raise UnsupportedExponent("inégalité de Hardy non définie pour k = 1")
    if k <= -1:
        raise UnsupportedExponent(f"k = {k} : le second membre ∫s^k g′² diverge")


def hardy_check(g: np.ndarray, k: float, nodes: np.ndarray | None = None) -> InequalityResult:
    """
    Membres de l'inégalité de Hardy pour l'interpolant de Chebyshev de g.

    k > 1 : lhs = ∫s^{k−2}g², rhs = ∫s^k(g² + g′²).
    k < 1 : lhs = ∫s^{k−2}(g − g(0))², rhs = ∫s^k g′².

    Args:
        g: Échantillons sur [0, 1]
        k: Exposant (k ≠ 1, k > −1)
        nodes: Abscisses des échantillons (défaut : Chebyshev–Lobatto)

    Raises:
        UnsupportedExponent: Pour k = 1 ou k ≤ −1
    """
    _check_exponent(k)
    values = np.asarray(g, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("hardy_check attend au moins deux échantillons 1-D")
    nodes = lobatto_nodes(values.size - 1) if nodes is None else np.asarray(nodes, dtype=float)
    poly = Chebyshev.fit(nodes, values, values.size - 1, domain=UNIT_DOMAIN)
    points = values.size + 2
    slope = poly.deriv()

    if k > 1:
        lhs = weighted_integral(poly**2, k - 2.0, points)
        rhs = weighted_integral(poly**2 + slope**2, k, points)
    else:
        # (g − g(0))/s est polynomial : s^{k−2}(g − g(0))² = s^k h²
        h, _ = divmod(poly - poly(0.0), Chebyshev.identity(domain=UNIT_DOMAIN))
        lhs = weighted_integral(h**2, k, points)
        rhs = weighted_integral(slope**2, k, points)
    return InequalityResult(lhs=lhs, rhs=rhs, ratio=lhs / rhs if rhs > 0 else float("inf"))


def hardy_constant(degree: int, k: float) -> float:
    """
    Plus grand quotient lhs/rhs sur les polynômes de degré ≤ degree
    (problème aux valeurs propres généralisé, cas k > 1).
    """
    _check_exponent(k)
    if k < 1:
        raise UnsupportedExponent("hardy_constant ne traite que k > 1")
    basis = [Chebyshev.basis(n, domain=UNIT_DOMAIN) for n in range(degree + 1)]
    points = degree + 3
    size = degree + 1
    lhs, rhs = np.zeros((size, size)), np.zeros((size, size))
    for i in range(size):
        for j in range(i, size):
            lhs[i, j] = lhs[j, i] = weighted_integral(basis[i] * basis[j], k - 2.0, points)
            rhs[i, j] = rhs[j, i] = weighted_integral(
                basis[i] * basis[j] + basis[i].deriv() * basis[j].deriv(), k, points
            )
    return float(linalg.eigh(lhs, rhs, eigvals_only=True)[-1])


# =============================================================================
# KORN
# =============================================================================

def korn_check(v: Field, weighted: bool = False, rho0: Field | None = None) -> InequalityResult:
    """
    lhs = ∥v∥²_{H¹}, rhs = ∫Σ(vⁱ,ⱼ + vʲ,ᵢ)² + ∥v∥²_{L²} (ou ∥ρ₀^{1/2}v∥² si weighted).
    """
    if v.components != 3:
        raise GridMismatch("korn_check attend un champ vectoriel")
    if weighted and rho0 is None:
        raise ValueError("korn_check pondéré sans ρ₀")
    grid = v.grid
    lhs = sobolev_seminorms_sq(grid, v.values, 1)
    dv = gradient_array(grid, v.values)
    symmetric = dv + dv.transpose(1, 0, 2, 3, 4)
    rhs = float(integrate_array(grid, np.sum(symmetric**2, axis=(0, 1))))
    weight = rho0.scalar if weighted else 1.0
    rhs += float(np.sum(integrate_array(grid, weight * v.values**2)))
    return InequalityResult(lhs=lhs, rhs=rhs, ratio=lhs / rhs if rhs > 0 else float("inf"))


def random_smooth_field(grid: GridSpec, coefficients: np.ndarray) -> Field:
    """Champ vectoriel Σ c · cos/sin(2π(k₁x₁ + k₂x₂)) T_n(2x₃ − 1), coefficients (3, 2, 3, 3, 4)."""
    x1, x2, x3 = grid.mesh()
    xi = 2.0 * x3 - 1.0
    values = np.zeros((3, *grid.shape))
    for kind, trig in enumerate((np.cos, np.sin)):
        for k1 in range(3):
            for k2 in range(3):
                angular = trig(2.0 * np.pi * ((k1 - 1) * x1 + (k2 - 1) * x2))
                for n in range(coefficients.shape[-1]):
                    radial = Chebyshev.basis(n)(xi)
                    values += coefficients[:, kind, k1, k2, n, None, None, None] * angular * radial
    return Field(grid, values)


def korn_constant_study(
    grid: GridSpec, alphas: list[float], samples: int = 100, seed: int = 0
) -> list[KornStudyRow]:
    """
    Rapport de Korn pondéré maximal sur des champs aléatoires lisses, ρ₀ = d^α.

    Les champs ne dépendent que de la graine : deux grilles voient les mêmes fonctions.
    """
    _, _, x3 = grid.mesh()
    rows = []
    for alpha in alphas:
        rho0 = Field(grid, (x3 * (1.0 - x3)) ** alpha)
        rng = np.random.default_rng(seed)
        best = 0.0
        for _ in range(samples):
            field = random_smooth_field(grid, rng.standard_normal((3, 2, 3, 3, 4)))
            best = max(best, korn_check(field, weighted=True, rho0=rho0).ratio)
        logger.debug(f"📐 Korn pondéré α = {alpha} : rapport max {best:.6g}")
        rows.append(KornStudyRow(alpha=alpha, max_ratio=best, samples=samples))
    return rows
