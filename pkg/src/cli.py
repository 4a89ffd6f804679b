"""
Interface en ligne de commande : vacuum-ns verify | run | contraction-study.

Codes de sortie : 0 succès, 2 configuration, 3 non-contraction, 4 échec numérique.
"""

import argparse
import logging
import sys

from src.config import get_settings
from src.exceptions import ConfigValidationError
from src.pipeline.orchestrator import DEFAULT_HORIZONS, cmd_contraction_study, cmd_run, cmd_verify
from src.utils.logging import configure_logging

logger = logging.getLogger(__name__)


def parse_horizons(text: str) -> list[float]:
    """
    "0.02, 0.01" -> [0.02, 0.01] ; une chaîne vide donne une liste vide.

    Raises:
        ConfigValidationError: Valeur non numérique
    """
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise ConfigValidationError(f"liste d'horizons invalide « {text} »") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vacuum-ns",
        description="Solveur lagrangien spectral de Navier–Stokes compressible avec vide",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="Fichier de configuration clé = valeur")
        p.add_argument("--out", default=None, help="Répertoire de sortie")
        p.add_argument("--verbose", action="store_true", help="Journalisation DEBUG")

    verify = sub.add_parser("verify", help="Suite de vérification des invariants")
    common(verify)
    verify.add_argument("--seed", type=int, default=0, help="Graine des flots aléatoires")

    run = sub.add_parser("run", help="Itération de point fixe et diagnostics")
    common(run)

    study = sub.add_parser("contraction-study", help="Rapport de contraction selon l'horizon T")
    common(study)
    study.add_argument(
        "--horizons",
        default=",".join(str(T) for T in DEFAULT_HORIZONS),
        help="Horizons séparés par des virgules",
    )
    study.add_argument("--seed", type=int, default=0, help="Graine des perturbations")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging("DEBUG" if args.verbose else get_settings().log_level)

    if args.command == "verify":
        return cmd_verify(args.config, args.out, args.seed)
    if args.command == "run":
        return cmd_run(args.config, args.out)
    try:
        horizons = parse_horizons(args.horizons)
    except ConfigValidationError as exc:
        logger.error(f"❌ {exc}")
        return exc.exit_code
    return cmd_contraction_study(args.config, horizons, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
