"""
Discrétisation tensorielle de Ω = 𝕋² × (0, 1).

Fourier (nœuds uniformes, trapèzes) en x₁, x₂ ; Chebyshev–Gauss–Lobatto
ramené sur [0, 1] (matrice de différentiation, poids de Clenshaw–Curtis)
en x₃. Les champs sont stockés (composante, i3, i2, i1), i1 le plus rapide.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from src.exceptions import GridMismatch, InvalidResolution, NonFiniteState

logger = logging.getLogger(__name__)

ALLOWED_COMPONENTS = (1, 3, 9)

# Axes des tableaux (…, n3, n2, n1) pour les directions x₁, x₂, x₃
ARRAY_AXIS = {1: -1, 2: -2, 3: -3}


def readonly_array(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=np.float64)
    array.setflags(write=False)
    return array


def chebyshev_matrix(n: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Matrice de différentiation de Chebyshev et points extrémaux cos(kπ/n).

    Returns:
        (D, xi) avec xi décroissant de 1 à -1
    """
    s = np.arange(n + 1)
    xi = np.cos(np.pi * s / n)
    c = np.hstack(([2.0], np.ones(n - 1), [2.0])) * (-1.0) ** s
    dx = xi[:, None] - xi[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    return d, xi


def clenshaw_curtis_weights(n: int) -> np.ndarray:
    """Poids de Clenshaw–Curtis sur [-1, 1] (somme 2) aux points cos(kπ/n)."""
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    ii = np.arange(1, n)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n**2 - 1.0)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2.0 * k * theta[ii]) / (4.0 * k**2 - 1.0)
        v -= np.cos(n * theta[ii]) / (n**2 - 1.0)
    else:
        w[0] = w[n] = 1.0 / n**2
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2.0 * k * theta[ii]) / (4.0 * k**2 - 1.0)
    w[ii] = 2.0 * v / n
    return w


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Grille Fourier × Fourier × Chebyshev–Lobatto de Ω."""
    n1: int
    n2: int
    n3: int
    x3_nodes: np.ndarray
    quadrature_weights: np.ndarray
    cheb_diff: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n3, self.n2, self.n1)

    @property
    def size(self) -> int:
        return self.n1 * self.n2 * self.n3

    @property
    def x1_nodes(self) -> np.ndarray:
        return np.arange(self.n1) / self.n1

    @property
    def x2_nodes(self) -> np.ndarray:
        return np.arange(self.n2) / self.n2

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coordonnées (X1, X2, X3) aux nœuds, chacune de forme (n3, n2, n1)."""
        x3, x2, x1 = np.meshgrid(self.x3_nodes, self.x2_nodes, self.x1_nodes, indexing="ij")
        return x1, x2, x3

    def node_weights(self) -> np.ndarray:
        """Poids de quadrature tensoriels, forme (n3, n2, n1)."""
        w = self.quadrature_weights[:, None, None] / (self.n1 * self.n2)
        return np.broadcast_to(w, self.shape)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridSpec):
            return NotImplemented
        return (self.n1, self.n2, self.n3) == (other.n1, other.n2, other.n3)

    def __hash__(self) -> int:
        return hash((self.n1, self.n2, self.n3))


def validate_resolution(n1: int, n2: int, n3: int) -> None:
    """Vérifie les contraintes de parité et de taille de la grille."""
    for name, n in (("n1", n1), ("n2", n2)):
        if int(n) != n or n < 4 or n % 2:
            raise InvalidResolution(f"{name} doit être pair et ≥ 4 (reçu {n})")
    if int(n3) != n3 or n3 < 5 or n3 % 2 == 0:
        raise InvalidResolution(f"n3 doit être impair et ≥ 5 (reçu {n3})")


@lru_cache(maxsize=32)
def make_grid(n1: int, n2: int, n3: int) -> GridSpec:
    """
    Construit la grille spectrale de Ω.

    Raises:
        InvalidResolution: Si n1, n2 ne sont pas pairs ≥ 4 ou n3 impair ≥ 5
    """
    validate_resolution(n1, n2, n3)
    d, xi = chebyshev_matrix(n3 - 1)
    # x₃ = (1 - ξ)/2 croissant, donc d/dx₃ = -2 d/dξ
    x3 = (1.0 - xi) / 2.0
    x3[0], x3[-1] = 0.0, 1.0
    weights = clenshaw_curtis_weights(n3 - 1) / 2.0
    logger.debug(f"📐 Grille {n1}×{n2}×{n3} construite")
    return GridSpec(
        n1=n1,
        n2=n2,
        n3=n3,
        x3_nodes=readonly_array(x3),
        quadrature_weights=readonly_array(weights),
        cheb_diff=readonly_array(-2.0 * d),
    )


@dataclass(frozen=True, eq=False)
class Field:
    """Échantillons scalaires (1), vectoriels (3) ou tensoriels (9) sur la grille."""
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape == self.grid.shape:
            values = values[None]
        if values.ndim != 4 or values.shape[1:] != self.grid.shape:
            raise GridMismatch(f"forme {values.shape} incompatible avec la grille {self.grid.shape}")
        if values.shape[0] not in ALLOWED_COMPONENTS:
            raise GridMismatch(f"nombre de composantes {values.shape[0]} non supporté")
        if not np.all(np.isfinite(values)):
            raise NonFiniteState("champ contenant des NaN ou des Inf")
        object.__setattr__(self, "values", readonly_array(values))

    @property
    def components(self) -> int:
        return self.values.shape[0]

    @property
    def scalar(self) -> np.ndarray:
        """Valeurs d'un champ scalaire, forme (n3, n2, n1)."""
        return self.values[0]

    @classmethod
    def zeros(cls, grid: GridSpec, components: int = 1) -> Field:
        return cls(grid, np.zeros((components, *grid.shape)))

    @classmethod
    def from_function(cls, grid: GridSpec, func: Callable[..., object]) -> Field:
        """Échantillonne func(x1, x2, x3), qui renvoie un tableau ou une liste de composantes."""
        x1, x2, x3 = grid.mesh()
        out = func(x1, x2, x3)
        if isinstance(out, (list, tuple)):
            out = np.stack([np.broadcast_to(np.asarray(c, dtype=float), grid.shape) for c in out])
        else:
            out = np.broadcast_to(np.asarray(out, dtype=float), grid.shape)
        return cls(grid, out)

    def with_values(self, values: np.ndarray) -> Field:
        return Field(self.grid, values)

    def __add__(self, other: Field) -> Field:
        _check_same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: Field) -> Field:
        _check_same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, factor: float) -> Field:
        return Field(self.grid, self.values * float(factor))

    __rmul__ = __mul__


def _check_same_grid(a: Field, b: Field) -> None:
    if a.grid != b.grid or a.components != b.components:
        raise GridMismatch("champs définis sur des grilles ou composantes différentes")


# =============================================================================
# DIFFÉRENTIATION ET QUADRATURE
# =============================================================================

def diff_array(grid: GridSpec, values: np.ndarray, axis: int, order: int = 1) -> np.ndarray:
    """Dérivée spectrale d'un tableau (…, n3, n2, n1) selon x_axis."""
    if axis not in ARRAY_AXIS:
        raise ValueError(f"axe {axis} invalide (1, 2 ou 3)")
    if axis == 3:
        out = values
        for _ in range(order):
            out = np.moveaxis(np.tensordot(grid.cheb_diff, out, axes=(1, -3)), 0, -3)
        return out

    ax = ARRAY_AXIS[axis]
    n = values.shape[ax]
    k = np.fft.rfftfreq(n, d=1.0 / n)
    multiplier = (2j * np.pi * k) ** order
    if order % 2 == 1:
        multiplier[-1] = 0.0
    shape = [1] * values.ndim
    shape[ax] = k.size
    spectrum = np.fft.rfft(values, axis=ax) * multiplier.reshape(shape)
    return np.fft.irfft(spectrum, n=n, axis=ax)


def gradient_array(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Pile des trois dérivées : out[k] = ∂_k values, axe inséré avant (n3, n2, n1)."""
    return np.stack([diff_array(grid, values, axis) for axis in (1, 2, 3)], axis=-4)


def diff(f: Field, axis: int) -> Field:
    """
    Dérivée spectrale composante par composante.

    FFT selon x₁, x₂ ; matrice de Chebyshev selon x₃.
    """
    return Field(f.grid, diff_array(f.grid, f.values, axis))


def integrate_array(grid: GridSpec, values: np.ndarray) -> np.ndarray | float:
    """Quadrature ∫_Ω sur les trois derniers axes."""
    total = np.tensordot(values, grid.quadrature_weights, axes=([-3], [0]))
    return total.sum(axis=(-1, -2)) / (grid.n1 * grid.n2)


def integrate(f: Field) -> float:
    """∫_Ω f dx par trapèzes en x₁, x₂ et Clenshaw–Curtis en x₃."""
    if f.components != 1:
        raise GridMismatch("integrate attend un champ scalaire")
    return float(integrate_array(f.grid, f.scalar))


def dealias(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Troncature 2/3 en x₁, x₂ : supprime les modes |k| ≥ n/3."""
    spectrum = np.fft.rfft2(values, axes=(-2, -1))
    k2 = np.abs(np.fft.fftfreq(grid.n2, d=1.0 / grid.n2))
    k1 = np.fft.rfftfreq(grid.n1, d=1.0 / grid.n1)
    keep = (k2[:, None] < grid.n2 / 3.0) & (k1[None, :] < grid.n1 / 3.0)
    return np.fft.irfft2(spectrum * keep, s=(grid.n2, grid.n1), axes=(-2, -1))


def product(grid: GridSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Produit ponctuel désaliasé."""
    return dealias(grid, a * b)


def extrapolate_boundary(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """
    Remplace les valeurs en x₃ ∈ {0, 1} par l'extrapolation polynomiale
    des nœuds intérieurs (interpolation barycentrique de Chebyshev).
    """
    out = np.array(values, dtype=np.float64)
    inner = grid.x3_nodes[1:-1]
    moved = np.moveaxis(out, -3, 0)
    interpolant = BarycentricInterpolator(inner, moved[1:-1], axis=0)
    ends = interpolant(np.array([0.0, 1.0]))
    moved[0] = ends[0]
    moved[-1] = ends[1]
    return out
