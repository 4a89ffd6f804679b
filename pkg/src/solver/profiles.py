"""
Registre des profils initiaux sélectionnables par nom dans la configuration.

Chaque profil est une fonction fermée (x1, x2, x3, **params) évaluée aux
nœuds ; les vitesses renvoient la liste de leurs trois composantes.
"""

import logging
from typing import Callable

import numpy as np

from src.exceptions import ConfigValidationError

logger = logging.getLogger(__name__)

Profile = Callable[..., object]

TWO_PI = 2.0 * np.pi


def distance(x3):
    """d(x) = x₃(1 − x₃)."""
    return x3 * (1.0 - x3)


# =============================================================================
# ENVELOPPES DE DENSITÉ (ρ₀ = enveloppe · d^α)
# =============================================================================

def _uniform_envelope(x1, x2, x3, amplitude: float = 1.0):
    return amplitude * np.ones_like(x3)


def _modulated_envelope(x1, x2, x3, eps: float = 0.1, k: float = 1.0, amplitude: float = 1.0):
    return amplitude * (1.0 + eps * np.sin(TWO_PI * k * x1))


DENSITY_ENVELOPES: dict[str, Profile] = {
    "power_distance": _uniform_envelope,
    "modulated": _modulated_envelope,
}


# =============================================================================
# TEMPÉRATURES
# =============================================================================

def _distance_temperature(x1, x2, x3, amplitude: float = 1.0, eps: float = 0.0, k: float = 1.0):
    return amplitude * distance(x3) * (1.0 + eps * np.cos(TWO_PI * k * x2))


def _sine_temperature(x1, x2, x3, amplitude: float = 1.0):
    return amplitude * np.sin(np.pi * x3)


def _polynomial_temperature(x1, x2, x3, p: float = 2.0, q: float = 1.0, amplitude: float = 1.0):
    return amplitude * x3**p * (1.0 - x3) ** q


def _zero_scalar(x1, x2, x3):
    return np.zeros_like(x3)


TEMPERATURE_PROFILES: dict[str, Profile] = {
    "distance": _distance_temperature,
    "sine": _sine_temperature,
    "polynomial": _polynomial_temperature,
    "zero": _zero_scalar,
}


# =============================================================================
# VITESSES
# =============================================================================

def _zero_velocity(x1, x2, x3):
    zero = np.zeros_like(x3)
    return [zero, zero, zero]


def _shear_velocity(x1, x2, x3, amplitude: float = 1.0):
    """(c·x₃, 0, 0) : contrainte 𝕊¹³ = μc non nulle sur Γ."""
    zero = np.zeros_like(x3)
    return [amplitude * x3, zero, zero]


def _compatible_shear(x1, x2, x3, amplitude: float = 1.0, k: float = 1.0):
    zero = np.zeros_like(x3)
    return [amplitude * np.sin(TWO_PI * k * x1) * x3**2 * (1.0 - x3) ** 2, zero, zero]


def _vertical_cosine(x1, x2, x3, amplitude: float = 1.0):
    """(0, 0, c·cos πx₃) : traction nulle sur Γ."""
    zero = np.zeros_like(x3)
    return [zero, zero, amplitude * np.cos(np.pi * x3)]


def _fourier_mode(x1, x2, x3, amplitude: float = 1.0, k1: float = 1.0, n: float = 1.0):
    """Un mode Fourier–Chebyshev de la base vitesse, porté par la composante 1."""
    zero = np.zeros_like(x3)
    cheb = np.cos(n * np.arccos(np.clip(2.0 * x3 - 1.0, -1.0, 1.0)))
    return [amplitude * np.cos(TWO_PI * k1 * x1) * cheb, zero, zero]


VELOCITY_PROFILES: dict[str, Profile] = {
    "zero": _zero_velocity,
    "shear": _shear_velocity,
    "compatible_shear": _compatible_shear,
    "vertical_cosine": _vertical_cosine,
    "mode": _fourier_mode,
}


def resolve_profile(registry: dict[str, Profile], name: str, params: dict[str, float] | None = None) -> Profile:
    """
    Retourne le profil nommé, ses paramètres liés.

    Raises:
        ConfigValidationError: Si le nom ou un paramètre est inconnu
    """
    key = name.strip().lower()
    if key not in registry:
        raise ConfigValidationError(f"profil inconnu '{name}' (disponibles : {', '.join(sorted(registry))})")
    func = registry[key]
    bound = dict(params or {})
    accepted = func.__code__.co_varnames[3 : func.__code__.co_argcount]
    unknown = sorted(set(bound) - set(accepted))
    if unknown:
        raise ConfigValidationError(f"paramètres inconnus pour '{name}' : {', '.join(unknown)}")

    def profile(x1, x2, x3):
        return func(x1, x2, x3, **bound)

    profile.__name__ = key
    return profile
