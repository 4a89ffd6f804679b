"""
Module Numérique - grille spectrale, cinématique lagrangienne et opérateurs.
"""

from src.numerics.grid import Field, GridSpec, diff, integrate, make_grid
from src.numerics.kinematics import (
    Deformation,
    FlowMap,
    advance_flow_map,
    check_apriori,
    cofactor_matrix,
    compute_deformation,
    deformation_rates,
    identity_flow_map,
    piola_residual,
)
from src.numerics.operators import (
    StateSlice,
    boundary_stress_residual,
    div_eta,
    grad_eta,
    momentum_residual,
    stress,
    temperature_residual,
)

__all__ = [
    # Grille
    "Field",
    "GridSpec",
    "diff",
    "integrate",
    "make_grid",
    # Cinématique
    "Deformation",
    "FlowMap",
    "advance_flow_map",
    "check_apriori",
    "cofactor_matrix",
    "compute_deformation",
    "deformation_rates",
    "identity_flow_map",
    "piola_residual",
    # Opérateurs
    "StateSlice",
    "boundary_stress_residual",
    "div_eta",
    "grad_eta",
    "momentum_residual",
    "stress",
    "temperature_residual",
]
