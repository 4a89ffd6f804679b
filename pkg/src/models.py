"""
Modèles de données Pydantic du solveur.
Définit la configuration d'un calcul (physique, grille, profils, temps)
et les rapports produits par les moniteurs et les commandes.
"""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class TimeScheme(str, Enum):
    """Schémas d'intégration en temps du problème linéarisé."""
    BACKWARD_EULER = "backward_euler"
    CRANK_NICOLSON = "crank_nicolson"


# Mapping des libellés acceptés dans les fichiers de configuration
SCHEME_ALIASES = {
    "be": TimeScheme.BACKWARD_EULER,
    "backward-euler": TimeScheme.BACKWARD_EULER,
    "euler": TimeScheme.BACKWARD_EULER,
    "cn": TimeScheme.CRANK_NICOLSON,
    "crank-nicolson": TimeScheme.CRANK_NICOLSON,
}


# =============================================================================
# PARAMÈTRES PHYSIQUES
# =============================================================================

class PhysParams(BaseModel):
    """
    Coefficients du gaz polytropique visqueux et conducteur.
    Les invariants sont revalidés à chaque chargement de configuration.
    """
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    mu: float = Field(1.0, description="Viscosité de cisaillement")
    lam: float = Field(0.0, alias="lambda", description="Second coefficient de Lamé")
    kappa: float = Field(1.0, description="Conductivité thermique")
    R: float = Field(1.0, description="Constante des gaz")
    c_v: float = Field(1.0, description="Chaleur spécifique à volume constant")
    gamma: float = Field(2.0, description="Exposant adiabatique")
    A_bar: float = Field(1.0, description="Constante de référence de l'entropie")

    @field_validator("mu", "kappa", "R", "c_v", "A_bar")
    @classmethod
    def must_be_positive(cls, v: float, info) -> float:
        if not v > 0:
            raise ValueError(f"{info.field_name} must be positive ({info.field_name} doit être > 0)")
        return v

    @field_validator("gamma")
    @classmethod
    def gamma_above_one(cls, v: float) -> float:
        if not v > 1:
            raise ValueError("gamma must exceed 1 (gamma doit dépasser 1)")
        return v

    @model_validator(mode="after")
    def bulk_viscosity_positive(self) -> "PhysParams":
        if not 2 * self.mu + 3 * self.lam > 0:
            raise ValueError("2*mu + 3*lambda must be positive (2μ + 3λ doit être > 0)")
        return self


# =============================================================================
# CONFIGURATION D'UN CALCUL
# =============================================================================

class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class GridSection(_Section):
    n1: int = 16
    n2: int = 16
    n3: int = 33

    @model_validator(mode="after")
    def resolution_rules(self) -> "GridSection":
        from src.numerics.grid import validate_resolution

        validate_resolution(self.n1, self.n2, self.n3)
        return self


class BasisSection(_Section):
    m: int = Field(4, ge=1, description="Modes de Fourier par direction périodique")
    m3: int | None = Field(None, ge=1, description="Modes de Chebyshev (défaut : m)")


class ProfileSection(_Section):
    name: str
    params: dict[str, float] = Field(default_factory=dict)


class DensitySection(ProfileSection):
    name: str = "power_distance"
    alpha: float = Field(1.0, description="Exposant de décroissance vers le vide")


class InitialSection(_Section):
    density: DensitySection = Field(default_factory=DensitySection)
    temperature: ProfileSection = Field(default_factory=lambda: ProfileSection(name="distance"))
    velocity: ProfileSection = Field(default_factory=lambda: ProfileSection(name="zero"))
    validate_data: bool = Field(True, alias="validate", description="False = mode sans validation")


class TimeSection(_Section):
    T: float = Field(0.005, gt=0)
    n_steps: int = Field(10, ge=1)
    scheme: TimeScheme = TimeScheme.CRANK_NICOLSON

    @field_validator("scheme", mode="before")
    @classmethod
    def coerce_scheme(cls, v):
        """Accepte les abréviations (cn, be) et les tirets."""
        if isinstance(v, str):
            key = v.strip().lower()
            return SCHEME_ALIASES.get(key, key.replace("-", "_"))
        return v


class PicardSection(_Section):
    tol: float = Field(1e-8, gt=0)
    max_iter: int = Field(20, ge=1)


class OutputsSection(_Section):
    directory: str | None = None
    snapshot_stride: int = Field(0, ge=0, description="0 = état final seulement")


class AprioriSection(_Section):
    deta_bound: float | None = Field(None, gt=0)


class DiagnosticsSection(_Section):
    entropy_band: float = Field(0.05, gt=0, lt=0.25)
    positivity_d0: float = Field(0.05, gt=0, lt=0.25)


class RunConfig(_Section):
    """Configuration complète d'un calcul."""
    grid: GridSection = Field(default_factory=GridSection)
    basis: BasisSection = Field(default_factory=BasisSection)
    physics: PhysParams = Field(default_factory=PhysParams)
    initial: InitialSection = Field(default_factory=InitialSection)
    time: TimeSection = Field(default_factory=TimeSection)
    picard: PicardSection = Field(default_factory=PicardSection)
    outputs: OutputsSection = Field(default_factory=OutputsSection)
    apriori: AprioriSection = Field(default_factory=AprioriSection)
    diagnostics: DiagnosticsSection = Field(default_factory=DiagnosticsSection)


# =============================================================================
# RAPPORTS
# =============================================================================

class AprioriCheck(BaseModel):
    """Résultat de la vérification de l'hypothèse a priori."""
    ok: bool
    j_min: float
    j_max: float
    deta_max: float
    deta_entry_sum_max: float
    deta_bound: float


class NormalDerivativeRecord(BaseModel):
    """Extrema de la dérivée normale sortante sur Γ."""
    min: float
    max: float
    violated: bool = False


class DensityNorms(BaseModel):
    """Substituts discrets des normes de la densité initiale."""
    linf: float
    grad_l3: float
    tangential_h1: float
    weighted_second: float
    decay_exponent: float | None = None
    meets_sufficient_decay: bool | None = None


class CompatibilityReport(BaseModel):
    """Résidus maximaux des conditions de compatibilité (avertissements)."""
    residuals: dict[str, float]
    tolerance: float = 1e-8

    @property
    def failed(self) -> list[str]:
        return [name for name, value in self.residuals.items() if value > self.tolerance]

    @property
    def passed(self) -> bool:
        return not self.failed


class BoundaryStressRecord(BaseModel):
    """max |a³ⱼ𝕊ⁱʲ| par composante i sur chaque face."""
    bottom: list[float]
    top: list[float]

    @property
    def max(self) -> float:
        return max(self.bottom + self.top)


class EnergyEntry(BaseModel):
    """Les six termes de E à un pas de temps."""
    step: int
    time: float
    v_tt_weighted: float
    v_t_h1: float
    v_h3: float
    theta_tt_weighted: float
    theta_t_h1: float
    theta_h3: float

    @property
    def terms(self) -> list[float]:
        return [
            self.v_tt_weighted,
            self.v_t_h1,
            self.v_h3,
            self.theta_tt_weighted,
            self.theta_t_h1,
            self.theta_h3,
        ]

    @property
    def total(self) -> float:
        return sum(self.terms)


class EnergyReport(BaseModel):
    """Série temporelle de E et F, avec M₀ pour référence."""
    entries: list[EnergyEntry] = Field(default_factory=list)
    F: list[float] = Field(default_factory=list)
    M0: float = 1.0


class InteriorPositivityRecord(BaseModel):
    """Positivité de Θ sur les nœuds où d(x) ≥ d0."""
    d0: float
    theta_min: float
    delta: float
    violated: bool


class AprioriDriftRecord(BaseModel):
    """Dérive mesurée de Dη et J comparée aux prédictions intégrées."""
    times: list[float]
    deta_measured: list[float]
    deta_predicted: list[float]
    j_drift_measured: list[float]
    j_drift_predicted: list[float]
    holds: bool


class VacuumDriftRecord(BaseModel):
    """Écart |∇_nΘ(t) − ∇_nθ₀| et borne intégrée correspondante."""
    times: list[float]
    drift: list[float]
    bound: list[float]
    embedding_constant: float
    holds: bool


class KornStudyRow(BaseModel):
    alpha: float
    max_ratio: float
    samples: int


class IterationRecord(BaseModel):
    iteration: int
    distance: float
    ratio: float | None = None


class IterationReport(BaseModel):
    """Historique de l'itération de Picard."""
    records: list[IterationRecord] = Field(default_factory=list)
    converged: bool = False
    momentum_residual: float | None = None
    temperature_residual: float | None = None
    apriori: list[AprioriCheck] = Field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def non_contraction(self) -> bool:
        return any(r.ratio is not None and r.ratio >= 1 for r in self.records)


class ContractionRow(BaseModel):
    T: float
    ratio: float | None = None
    skipped: bool = False


class InequalityResult(BaseModel):
    """Membres d'une inégalité de Hardy ou de Korn."""
    lhs: float
    rhs: float
    ratio: float


class CheckResult(BaseModel):
    """Une vérification de la suite `verify`."""
    name: str
    passed: bool
    value: float | None = None
    threshold: float | None = None
    warning: bool = False
    detail: str = ""


class VerifyReport(BaseModel):
    checks: list[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.warning)

    @property
    def warnings(self) -> list[str]:
        return [c.name for c in self.checks if c.warning and not c.passed]


class RunReport(BaseModel):
    """Synthèse JSON d'un calcul `run`."""
    config_digest: str
    iteration: IterationReport
    M0: float
    E0: float
    sup_E: float
    sup_F: float
    compatibility: CompatibilityReport | None = None
    density: DensityNorms | None = None
    apriori_drift: AprioriDriftRecord | None = None
    vacuum_drift: VacuumDriftRecord | None = None
    positivity: list[InteriorPositivityRecord] = Field(default_factory=list)
    sound_speed_band_max: list[float] = Field(default_factory=list)


class ContractionReport(BaseModel):
    seed: int
    rows: list[ContractionRow] = Field(default_factory=list)


class RunResponse(BaseModel):
    """Réponse standard de l'API."""
    success: bool
    message: str
    run_id: str | None = None
    exit_code: int | None = None
    data: dict | None = None
