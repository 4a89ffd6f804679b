"""
Solveur lagrangien spectral du problème de Navier–Stokes compressible
à frontière libre avec vide - Module principal.
"""

from src.config import Settings, get_settings
from src.models import PhysParams, RunConfig, TimeScheme

__all__ = [
    "get_settings",
    "Settings",
    "PhysParams",
    "RunConfig",
    "TimeScheme",
]
