"""
Module Pipeline - configuration, orchestration et sérialisation.
"""

from src.pipeline.config_loader import config_digest, config_from_mapping, config_from_text, load_config
from src.pipeline.snapshots import SnapshotHeader, read_snapshot, write_snapshot
from src.pipeline.orchestrator import (
    CommandResult,
    RunOrchestrator,
    cmd_contraction_study,
    cmd_run,
    cmd_verify,
    get_orchestrator,
)

__all__ = [
    # Configuration
    "config_digest",
    "config_from_mapping",
    "config_from_text",
    "load_config",
    # Snapshots
    "SnapshotHeader",
    "read_snapshot",
    "write_snapshot",
    # Orchestration
    "CommandResult",
    "RunOrchestrator",
    "cmd_contraction_study",
    "cmd_run",
    "cmd_verify",
    "get_orchestrator",
]
