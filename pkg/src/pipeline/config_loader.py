"""
Lecture des fichiers de configuration `clé = valeur` à sections pointées
et validation par le modèle RunConfig.
"""

import hashlib
import logging
import re
from pathlib import Path
from typing import Any, Mapping

from pydantic import ValidationError

from src.exceptions import ConfigurationError, ConfigValidationError, ParseError
from src.models import RunConfig

logger = logging.getLogger(__name__)

KEY_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")

# Champs propres aux sections de profil ; toute autre clé va dans `params`
PROFILE_FIELDS = {
    "initial.density": {"name", "alpha", "params"},
    "initial.temperature": {"name", "params"},
    "initial.velocity": {"name", "params"},
}


def _route_profile_key(key: str) -> str:
    """initial.density.eps -> initial.density.params.eps."""
    for section, fields in PROFILE_FIELDS.items():
        prefix = section + "."
        if key.startswith(prefix):
            rest = key[len(prefix) :]
            if rest.split(".")[0] not in fields:
                return f"{section}.params.{rest}"
    return key


def _insert(tree: dict[str, Any], key: str, value: Any, line: int) -> None:
    parts = key.split(".")
    node = tree
    for depth, part in enumerate(parts[:-1]):
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ParseError(f"'{'.'.join(parts[: depth + 1])}' est à la fois une valeur et une section", line)
        node = child
    leaf = parts[-1]
    if leaf in node:
        kind = "section" if isinstance(node[leaf], dict) else "clé"
        raise ParseError(f"{kind} '{key}' définie deux fois", line)
    node[leaf] = value


def parse_config_text(text: str) -> dict[str, Any]:
    """
    Découpe un texte `clé = valeur` en dictionnaires imbriqués.

    Les lignes vides et les commentaires (`#`) sont ignorés ; les valeurs
    restent des chaînes, converties ensuite par pydantic.

    Raises:
        ParseError: Ligne sans `=`, clé invalide, valeur vide ou doublon
    """
    tree: dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"'=' attendu dans « {raw.strip()} »", number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not KEY_PATTERN.match(key):
            raise ParseError(f"clé invalide « {key} »", number)
        if not value:
            raise ParseError(f"valeur vide pour '{key}'", number)
        _insert(tree, _route_profile_key(key), value, number)
    return tree


def _describe(exc: ValidationError) -> str:
    messages = []
    for error in exc.errors():
        location = ".".join(str(part) for part in error["loc"])
        message = error["msg"].removeprefix("Value error, ")
        messages.append(f"{location}: {message}" if location else message)
    return "; ".join(messages)


def validate_tree(tree: Mapping[str, Any]) -> RunConfig:
    """
    Raises:
        ConfigValidationError: Si un invariant du modèle n'est pas respecté
    """
    try:
        return RunConfig.model_validate(tree)
    except ValidationError as exc:
        raise ConfigValidationError(_describe(exc)) from exc


def config_from_text(text: str) -> RunConfig:
    return validate_tree(parse_config_text(text))


def config_from_mapping(mapping: Mapping[str, Any]) -> RunConfig:
    """Configuration depuis un objet JSON de clés pointées (API HTTP)."""
    tree: dict[str, Any] = {}
    for line, (key, value) in enumerate(mapping.items(), start=1):
        if not KEY_PATTERN.match(str(key)):
            raise ParseError(f"clé invalide « {key} »", line)
        _insert(tree, _route_profile_key(str(key)), value, line)
    return validate_tree(tree)


def load_config(path: str | Path) -> RunConfig:
    """
    Charge et valide un fichier de configuration.

    Args:
        path: Chemin du fichier texte

    Returns:
        RunConfig validée, valeurs par défaut complétées

    Raises:
        ConfigurationError: Fichier introuvable
        ParseError: Ligne illisible (numéro de ligne conservé)
        ConfigValidationError: Invariant violé
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"configuration illisible : {path} ({exc})") from exc
    cfg = config_from_text(text)
    logger.info(f"📝 Configuration chargée : {path}")
    return cfg


def config_digest(cfg: RunConfig) -> str:
    """Empreinte SHA-256 de la configuration normalisée."""
    return hashlib.sha256(cfg.model_dump_json().encode("utf-8")).hexdigest()
