"""
Snapshots binaires de champs : une ligne d'en-tête JSON (UTF-8, terminée
par un saut de ligne) suivie des valeurs float64 little-endian dans l'ordre
(composante, i3, i2, i1).
"""

import logging
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ValidationError, model_validator

from src.exceptions import FormatError, GridMismatch, InvalidResolution, NonFiniteState
from src.numerics.grid import Field, make_grid

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
PAYLOAD_DTYPE = np.dtype("<f8")


class SnapshotHeader(BaseModel):
    """En-tête d'un snapshot."""
    format_version: int = FORMAT_VERSION
    n1: int
    n2: int
    n3: int
    components: int
    time: float
    name: str
    payload_bytes: int

    @model_validator(mode="after")
    def payload_matches_shape(self) -> "SnapshotHeader":
        expected = PAYLOAD_DTYPE.itemsize * self.components * self.n1 * self.n2 * self.n3
        if self.payload_bytes != expected:
            raise ValueError(f"payload_bytes = {self.payload_bytes}, attendu {expected}")
        return self


def write_snapshot(field: Field, path: str | Path, name: str = "field", time: float = 0.0) -> Path:
    """Écrit un champ ; la relecture est identique bit à bit."""
    path = Path(path)
    grid = field.grid
    payload = field.values.astype(PAYLOAD_DTYPE, copy=False).tobytes(order="C")
    header = SnapshotHeader(
        n1=grid.n1,
        n2=grid.n2,
        n3=grid.n3,
        components=field.components,
        time=time,
        name=name,
        payload_bytes=len(payload),
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(header.model_dump_json().encode("utf-8") + b"\n" + payload)
    logger.debug(f"💾 Snapshot {name} écrit : {path}")
    return path


def _split(raw: bytes) -> tuple[SnapshotHeader, bytes]:
    line, sep, payload = raw.partition(b"\n")
    if not sep:
        raise FormatError("en-tête sans fin de ligne")
    try:
        header = SnapshotHeader.model_validate_json(line.decode("utf-8"))
    except (UnicodeDecodeError, ValidationError) as exc:
        raise FormatError(f"en-tête de snapshot invalide : {exc}") from exc
    if header.format_version != FORMAT_VERSION:
        raise FormatError(f"version de format {header.format_version} non supportée")
    if len(payload) != header.payload_bytes:
        raise FormatError(f"charge utile de {len(payload)} octets, en-tête annonce {header.payload_bytes}")
    return header, payload


def read_snapshot_header(path: str | Path) -> SnapshotHeader:
    return _split(Path(path).read_bytes())[0]


def read_snapshot(path: str | Path) -> Field:
    """
    Relit un snapshot.

    Raises:
        FormatError: En-tête illisible ou incohérent avec la charge utile
    """
    header, payload = _split(Path(path).read_bytes())
    try:
        grid = make_grid(header.n1, header.n2, header.n3)
    except InvalidResolution as exc:
        raise FormatError(f"grille de l'en-tête invalide : {exc}") from exc
    values = np.frombuffer(payload, dtype=PAYLOAD_DTYPE).reshape(header.components, *grid.shape)
    try:
        return Field(grid, values.astype(np.float64))
    except (GridMismatch, NonFiniteState) as exc:
        raise FormatError(f"charge utile incompatible : {exc}") from exc
