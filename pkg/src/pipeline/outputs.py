"""
Écriture des résultats : CSV à 17 chiffres significatifs et rapports JSON.
"""

import csv
import logging
import math
from pathlib import Path
from typing import Iterable, Mapping

from pydantic import BaseModel

from src.models import ContractionRow, IterationReport

logger = logging.getLogger(__name__)

E_TERM_COLUMNS = [
    "E_v_tt",
    "E_v_t",
    "E_v",
    "E_theta_tt",
    "E_theta_t",
    "E_theta",
]

ENERGY_COLUMNS = [
    "step",
    "time",
    "E_total",
    *E_TERM_COLUMNS,
    "F_total",
    "j_min",
    "j_max",
    "piola_max",
    "entropy_band_min",
    "entropy_band_max",
    "grad_n_theta_min",
    "grad_n_theta_max",
]

ITERATION_COLUMNS = ["iter", "vt_distance", "ratio"]
CONTRACTION_COLUMNS = ["T", "ratio"]


def format_value(value: object) -> str:
    """Flottants au format .17g (aller-retour exact en binary64), vide pour None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    return str(value)


def write_csv(path: str | Path, columns: list[str], rows: Iterable[Mapping[str, object]]) -> Path:
    """Écrit un fichier CSV complet en une fois."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        count = 0
        for row in rows:
            writer.writerow([format_value(row.get(column)) for column in columns])
            count += 1
    logger.info(f"💾 {path.name} écrit ({count} lignes)")
    return path


def write_energy_csv(path: str | Path, rows: list[Mapping[str, object]]) -> Path:
    return write_csv(path, ENERGY_COLUMNS, rows)


def write_iteration_csv(path: str | Path, report: IterationReport) -> Path:
    rows = [{"iter": r.iteration, "vt_distance": r.distance, "ratio": r.ratio} for r in report.records]
    return write_csv(path, ITERATION_COLUMNS, rows)


def write_contraction_csv(path: str | Path, rows: list[ContractionRow]) -> Path:
    return write_csv(path, CONTRACTION_COLUMNS, [{"T": r.T, "ratio": r.ratio} for r in rows])


def write_report(path: str | Path, report: BaseModel) -> Path:
    """Rapport pydantic sérialisé en JSON indenté."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"💾 Rapport écrit : {path}")
    return path
