"""
Module Solveur - données initiales, problème linéarisé et itération de Picard.
"""

from src.solver.initial_data import (
    DerivedInitials,
    InitialData,
    build_initial_data,
    check_compatibility,
    compute_M0,
    initial_time_derivatives,
)
from src.solver.trajectory import TimeGrid, Trajectory, constant_trajectory
from src.solver.linear_solver import (
    BasisSet,
    FrozenCoefficients,
    GalerkinSolution,
    assemble_mass,
    build_basis,
    solve_temperature,
    solve_velocity,
    weak_residual,
)
from src.solver.picard import FixedPointResult, apply_Xi, contraction_study, iterate_to_fixed_point, vt_distance

__all__ = [
    # Données initiales
    "DerivedInitials",
    "InitialData",
    "build_initial_data",
    "check_compatibility",
    "compute_M0",
    "initial_time_derivatives",
    # Trajectoires
    "TimeGrid",
    "Trajectory",
    "constant_trajectory",
    # Galerkin
    "BasisSet",
    "FrozenCoefficients",
    "GalerkinSolution",
    "assemble_mass",
    "build_basis",
    "solve_temperature",
    "solve_velocity",
    "weak_residual",
    # Picard
    "FixedPointResult",
    "apply_Xi",
    "contraction_study",
    "iterate_to_fixed_point",
    "vt_distance",
]
