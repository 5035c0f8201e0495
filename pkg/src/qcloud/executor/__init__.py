"""Statevector-backed execution of patched binaries."""

from .execute import (
    RESET_MODES,
    ExecutionError,
    ExecutionReport,
    ShotResult,
    execute,
    final_statevector,
    outcome_distribution,
)
from .memory import MemoryMap, MemoryMapError, PatchedBinary, patch
from .statevector import SimulationError, simulate_statevector

__all__ = [
    "RESET_MODES",
    "ExecutionError",
    "ExecutionReport",
    "ShotResult",
    "execute",
    "final_statevector",
    "outcome_distribution",
    "MemoryMap",
    "MemoryMapError",
    "PatchedBinary",
    "patch",
    "SimulationError",
    "simulate_statevector",
]
