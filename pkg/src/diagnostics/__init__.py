"""
Module Diagnostics - normes, énergies, moniteurs et inégalités.
"""

from src.diagnostics.norms import energy_E, energy_F, energy_report, sobolev_norm
from src.diagnostics.monitors import (
    EntropyField,
    apriori_drift,
    entropy_field,
    eulerian_density,
    eulerian_pressure,
    interior_positivity,
    sound_speed,
    vacuum_boundary_monitor,
    vacuum_drift,
)
from src.diagnostics.inequalities import hardy_check, hardy_constant, korn_check, korn_constant_study

__all__ = [
    "energy_E",
    "energy_F",
    "energy_report",
    "sobolev_norm",
    "EntropyField",
    "apriori_drift",
    "entropy_field",
    "eulerian_density",
    "eulerian_pressure",
    "interior_positivity",
    "sound_speed",
    "vacuum_boundary_monitor",
    "vacuum_drift",
    "hardy_check",
    "hardy_constant",
    "korn_check",
    "korn_constant_study",
]
