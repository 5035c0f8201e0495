"""Quil-subset compiler: nativization, reset lowering and binary emission."""

from .binary import (
    BinaryFormatError,
    DataMemoryLayout,
    LayoutEntry,
    ParametricBinary,
    ReadoutEntry,
    Waveform,
    deserialize,
    serialize,
)
from .compile import BODY_ENTRY, compile_count, compile_program, lower_body
from .euler import NonUnitaryError, canonical_angle, euler_decompose, euler_unitary
from .native import (
    BasicBlock,
    Branch,
    Capture,
    CountedJump,
    CZPulse,
    Delay,
    Goto,
    Halt,
    IncrementCounter,
    InitCounter,
    Pulse,
    Register,
    ResetCFG,
    ShiftPhase,
)
from .nativize import CompilationError, is_native, nativize, nativize_with_layout
from .reset import DEFAULT_RESET_ROUNDS, lower_reset

compile = compile_program  # noqa: A001

__all__ = [name for name in dir() if not name.startswith("_")]
