"""
Hiérarchie des erreurs du solveur.
Chaque classe porte le code de sortie utilisé par la CLI et l'API HTTP.
"""


class SolverError(Exception):
    """Erreur de base du solveur."""
    exit_code = 4


# =============================================================================
# CONFIGURATION (code 2)
# =============================================================================

class ConfigurationError(SolverError):
    """Configuration ou données d'entrée invalides."""
    exit_code = 2


class InvalidResolution(ConfigurationError, ValueError):
    """Résolution de grille ou ordre de base incompatible."""


class DecayViolation(ConfigurationError, ValueError):
    """Exposant de décroissance de la densité non admissible."""


class VacuumConditionViolation(ConfigurationError, ValueError):
    """Dérivée normale de la température non strictement négative au bord."""


class UnsupportedExponent(ConfigurationError, ValueError):
    """Exposant de Hardy non supporté (k = 1)."""


class ParseError(ConfigurationError):
    """Ligne de configuration illisible."""

    def __init__(self, message: str, line: int):
        super().__init__(f"ligne {line}: {message}")
        self.line = line


class ConfigValidationError(ConfigurationError):
    """Un invariant de la configuration n'est pas respecté."""


# =============================================================================
# CONTRACTION (code 3)
# =============================================================================

class ContractionFailure(SolverError):
    """L'itération de point fixe ne converge pas."""
    exit_code = 3


class NonContraction(ContractionFailure):
    """Deux ratios consécutifs ≥ 1 : réduire l'horizon T."""


class MaxIterExceeded(ContractionFailure):
    """Nombre maximal d'itérations atteint."""


class AprioriViolated(ContractionFailure):
    """Jacobien figé hors de [1/2, 3/2] ou |Dη| au-delà de la borne."""


# =============================================================================
# ÉCHECS NUMÉRIQUES (code 4)
# =============================================================================

class NumericalFailure(SolverError):
    """Échec numérique du solveur."""
    exit_code = 4


class NonFiniteState(NumericalFailure):
    """NaN ou Inf dans un champ."""


class DegenerateJacobian(NumericalFailure):
    """|J| < 1e-10 en au moins un nœud."""


class UnboundedDerivative(NumericalFailure):
    """Dérivée temporelle initiale non bornée (profils incompatibles)."""


class SingularMass(NumericalFailure):
    """Matrice de masse non définie positive."""


class LinearSolveFailure(NumericalFailure):
    """Système linéaire d'un pas de temps non résoluble."""


class GridMismatch(NumericalFailure):
    """Champs ou trajectoires sur des grilles différentes."""


class TraceViolation(NumericalFailure):
    """Trace non nulle pour une norme H¹₀."""


class InsufficientHistory(NumericalFailure):
    """Pas assez d'états stockés pour les différences rétrogrades."""


class NonPositiveState(NumericalFailure):
    """Densité ou température non strictement positive à l'intérieur."""


class FormatError(NumericalFailure):
    """En-tête ou charge utile de snapshot incohérents."""
