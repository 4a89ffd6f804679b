"""
Orchestrateur des commandes verify, run et contraction-study.
Coordonne configuration → données initiales → solveur → diagnostics → fichiers.
"""

import logging
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from src.config import Settings, get_settings
from src.diagnostics.monitors import (
    apriori_drift,
    entropy_field,
    eulerian_density,
    interior_positivity,
    sound_speed,
    vacuum_boundary_monitor,
    vacuum_drift,
)
from src.diagnostics.norms import energy_report
from src.exceptions import ConfigurationError, NonContraction, NonPositiveState, SolverError
from src.models import ContractionReport, RunConfig, RunReport
from src.numerics.kinematics import piola_residual
from src.pipeline.config_loader import config_digest, load_config
from src.pipeline.outputs import (
    E_TERM_COLUMNS,
    write_contraction_csv,
    write_energy_csv,
    write_iteration_csv,
    write_report,
)
from src.pipeline.snapshots import write_snapshot
from src.pipeline.verification import run_verification
from src.solver.initial_data import build_initial_data, check_compatibility, initial_time_derivatives
from src.solver.linear_solver import build_basis
from src.solver.picard import contraction_study, iterate_to_fixed_point
from src.solver.trajectory import TimeGrid, Trajectory

logger = logging.getLogger(__name__)

DEFAULT_HORIZONS = [0.02, 0.01, 0.005]
SOUND_SPEED_BAND = 0.05


@dataclass
class CommandResult:
    """Résultat d'une commande."""
    success: bool
    exit_code: int
    message: str
    files: list[str] = field(default_factory=list)
    processing_time_ms: int = 0
    data: dict | None = None


def _elapsed_ms(start: datetime) -> int:
    return int((datetime.now() - start).total_seconds() * 1000)


def step_monitors(traj: Trajectory, n: int, rho0, p, band: float) -> dict[str, float]:
    """Colonnes de moniteurs de energy.csv au pas n."""
    defm = traj.deformation(n)
    theta = traj.temperature(n)
    jac = defm.J.scalar
    row = {
        "j_min": float(jac.min()),
        "j_max": float(jac.max()),
        "piola_max": float(np.abs(piola_residual(defm).values).max()),
    }
    try:
        entropy = entropy_field(theta, eulerian_density(rho0, defm), p, band)
        row["entropy_band_min"], row["entropy_band_max"] = entropy.band_min, entropy.band_max
    except NonPositiveState:
        row["entropy_band_min"] = row["entropy_band_max"] = math.nan
    record = vacuum_boundary_monitor(theta)
    row["grad_n_theta_min"], row["grad_n_theta_max"] = record.min, record.max
    return row


def _band_maximum(values: np.ndarray, x3: np.ndarray, band: float) -> float:
    mask = x3 * (1.0 - x3) < band
    return float(values[mask].max())


class RunOrchestrator:
    """
    Orchestrateur des commandes du solveur.

    Chaque commande renvoie un CommandResult ; aucune SolverError ne
    s'échappe, son code de sortie est reporté dans le résultat.
    """

    def __init__(self, settings: Settings | None = None):
        self.settings = settings or get_settings()

    def _output_dir(self, cfg: RunConfig, out: str | Path | None) -> Path:
        directory = Path(out or cfg.outputs.directory or self.settings.output_dir)
        directory.mkdir(parents=True, exist_ok=True)
        return directory

    def _failure(self, exc: Exception, start: datetime) -> CommandResult:
        if isinstance(exc, SolverError):
            logger.error(f"❌ {type(exc).__name__} : {exc}")
            code = exc.exit_code
        else:
            logger.exception(f"❌ Erreur inattendue : {exc}")
            code = 4
        return CommandResult(
            success=False,
            exit_code=code,
            message=f"{type(exc).__name__}: {exc}",
            processing_time_ms=_elapsed_ms(start),
        )

    # -------------------------------------------------------------------------
    # verify
    # -------------------------------------------------------------------------

    def verify(self, cfg: RunConfig, out: str | Path | None = None, seed: int = 0) -> CommandResult:
        start = datetime.now()
        logger.info("🚀 Début vérification")
        try:
            report = run_verification(cfg, seed)
            files = []
            if out is not None or cfg.outputs.directory:
                files.append(str(write_report(self._output_dir(cfg, out) / "report.json", report)))
            failed = [c.name for c in report.checks if not c.passed and not c.warning]
            message = "toutes les vérifications passent" if not failed else f"échecs : {', '.join(failed)}"
            if report.warnings:
                message += f" ({len(report.warnings)} avertissement(s) de compatibilité)"
            logger.info(f"{'✅' if report.passed else '❌'} Vérification terminée en {_elapsed_ms(start)}ms")
            return CommandResult(
                success=report.passed,
                exit_code=0 if report.passed else 4,
                message=message,
                files=files,
                processing_time_ms=_elapsed_ms(start),
                data=report.model_dump(),
            )
        except Exception as exc:
            return self._failure(exc, start)

    # -------------------------------------------------------------------------
    # run
    # -------------------------------------------------------------------------

    def run(self, cfg: RunConfig, out: str | Path | None = None) -> CommandResult:
        start = datetime.now()
        logger.info(f"🚀 Début calcul T = {cfg.time.T}, {cfg.time.n_steps} pas ({cfg.time.scheme.value})")
        try:
            # Étape 1 : données initiales
            logger.info("📝 Étape 1/5 : données initiales...")
            data = build_initial_data(cfg)
            derived = initial_time_derivatives(data, cfg.physics)
            compatibility = check_compatibility(data, derived, p=cfg.physics)
            logger.info(f"   → M₀ = {derived.M0:.6g}")

            # Étape 2 : base de Galerkin
            logger.info("📐 Étape 2/5 : base de Galerkin...")
            basis = build_basis(data.grid, cfg.basis.m, cfg.basis.m3)
            tg = TimeGrid(cfg.time.T, cfg.time.n_steps, cfg.time.scheme)

            # Étape 3 : point fixe
            logger.info("🔁 Étape 3/5 : itération de Picard...")
            result = iterate_to_fixed_point(
                data,
                cfg.physics,
                basis,
                tg,
                tol=cfg.picard.tol,
                max_iter=cfg.picard.max_iter,
                derived=derived,
                deta_bound=cfg.apriori.deta_bound,
            )
            traj = result.solution

            # Étape 4 : diagnostics
            logger.info("📐 Étape 4/5 : diagnostics...")
            energy = energy_report(traj, data.rho0, derived.M0)
            rows = []
            for n, entry in enumerate(energy.entries):
                row = {"step": n, "time": entry.time, "E_total": entry.total, "F_total": energy.F[n]}
                row.update(dict(zip(E_TERM_COLUMNS, entry.terms)))
                row.update(step_monitors(traj, n, data.rho0, cfg.physics, cfg.diagnostics.entropy_band))
                rows.append(row)
            x3 = data.grid.mesh()[2]
            totals = [entry.total for entry in energy.entries]
            report = RunReport(
                config_digest=config_digest(cfg),
                iteration=result.report,
                M0=derived.M0,
                E0=totals[0],
                sup_E=max(totals),
                sup_F=max(energy.F),
                compatibility=compatibility,
                density=data.density_norms,
                apriori_drift=apriori_drift(traj),
                vacuum_drift=vacuum_drift(traj),
                positivity=[
                    interior_positivity(traj.temperature(n), data.theta0, cfg.diagnostics.positivity_d0)
                    for n in range(tg.n_steps + 1)
                ],
                sound_speed_band_max=[
                    _band_maximum(sound_speed(traj.temperature(n), cfg.physics).scalar, x3, SOUND_SPEED_BAND)
                    for n in range(tg.n_steps + 1)
                ],
            )

            # Étape 5 : écriture
            logger.info("💾 Étape 5/5 : écriture des résultats...")
            directory = self._output_dir(cfg, out)
            files = [
                write_energy_csv(directory / "energy.csv", rows),
                write_iteration_csv(directory / "iteration.csv", result.report),
                *self._write_snapshots(directory, traj, cfg.outputs.snapshot_stride),
                write_report(directory / "report.json", report),
            ]

            elapsed = _elapsed_ms(start)
            logger.info(f"✅ Calcul terminé en {elapsed}ms ({result.report.iterations} itérations de Picard)")
            return CommandResult(
                success=True,
                exit_code=0,
                message=f"point fixe atteint en {result.report.iterations} itération(s)",
                files=[str(f) for f in files],
                processing_time_ms=elapsed,
                data={"iterations": result.report.iterations, "sup_E": report.sup_E, "M0": report.M0},
            )
        except NonContraction as exc:
            logger.error(f"❌ Pas de contraction : {exc}")
            return CommandResult(
                success=False,
                exit_code=exc.exit_code,
                message=f"non-contraction : {exc}",
                processing_time_ms=_elapsed_ms(start),
            )
        except Exception as exc:
            return self._failure(exc, start)

    def _write_snapshots(self, directory: Path, traj: Trajectory, stride: int) -> list[Path]:
        """États aux pas multiples de stride et état final ; stride 0 = état final seul."""
        last = traj.n_steps
        steps = sorted({*range(0, last + 1, stride), last}) if stride > 0 else [last]
        files = []
        for n in steps:
            time = float(traj.times[n])
            snapshots_dir = directory / "snapshots"
            files.append(write_snapshot(traj.velocity(n), snapshots_dir / f"v_{n:05d}.snap", "v", time))
            files.append(write_snapshot(traj.temperature(n), snapshots_dir / f"Theta_{n:05d}.snap", "Theta", time))
            files.append(write_snapshot(traj.flow_map(n).eta, snapshots_dir / f"eta_{n:05d}.snap", "eta", time))
        return files

    # -------------------------------------------------------------------------
    # contraction-study
    # -------------------------------------------------------------------------

    def contraction_study(
        self, cfg: RunConfig, horizons: list[float], out: str | Path | None = None, seed: int = 0
    ) -> CommandResult:
        start = datetime.now()
        logger.info(f"🚀 Début étude de contraction : horizons {horizons}")
        try:
            data = build_initial_data(cfg)
            basis = build_basis(data.grid, cfg.basis.m, cfg.basis.m3)
            rows = contraction_study(
                data,
                cfg.physics,
                basis,
                horizons,
                n_steps=cfg.time.n_steps,
                scheme=cfg.time.scheme,
                seed=seed,
                deta_bound=cfg.apriori.deta_bound,
            )
            directory = self._output_dir(cfg, out)
            files = [
                write_contraction_csv(directory / "contraction.csv", rows),
                write_report(directory / "report.json", ContractionReport(seed=seed, rows=rows)),
            ]
            logger.info(f"✅ Étude terminée en {_elapsed_ms(start)}ms")
            return CommandResult(
                success=True,
                exit_code=0,
                message=f"{len(rows)} horizon(s) étudié(s)",
                files=[str(f) for f in files],
                processing_time_ms=_elapsed_ms(start),
                data={"rows": [r.model_dump() for r in rows]},
            )
        except Exception as exc:
            return self._failure(exc, start)


def get_orchestrator() -> RunOrchestrator:
    """Factory pour obtenir une instance de l'orchestrateur."""
    return RunOrchestrator()


# =============================================================================
# COMMANDES
# =============================================================================

def _resolve(config: str | Path | RunConfig) -> RunConfig:
    return config if isinstance(config, RunConfig) else load_config(config)


def _run_command(action) -> CommandResult:
    try:
        return action()
    except ConfigurationError as exc:
        logger.error(f"❌ Configuration invalide : {exc}")
        return CommandResult(success=False, exit_code=exc.exit_code, message=str(exc))


def cmd_verify(config: str | Path | RunConfig, out: str | Path | None = None, seed: int = 0) -> int:
    return _run_command(lambda: get_orchestrator().verify(_resolve(config), out, seed)).exit_code


def cmd_run(config: str | Path | RunConfig, out: str | Path | None = None) -> int:
    return _run_command(lambda: get_orchestrator().run(_resolve(config), out)).exit_code


def cmd_contraction_study(
    config: str | Path | RunConfig,
    horizons: list[float] | None = None,
    out: str | Path | None = None,
    seed: int = 0,
) -> int:
    horizons = DEFAULT_HORIZONS if horizons is None else horizons
    return _run_command(
        lambda: get_orchestrator().contraction_study(_resolve(config), horizons, out, seed)
    ).exit_code
