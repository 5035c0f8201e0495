"""Lower the ``RESET`` directive into per-qubit measure-and-flip loops."""

from __future__ import annotations

from typing import Iterable

from ..device import DeviceModel
from ..ir import Gate, Program
from .native import (
    BasicBlock,
    Branch,
    Capture,
    CountedJump,
    Delay,
    Goto,
    IncrementCounter,
    InitCounter,
    Pulse,
    Register,
    ResetCFG,
)
from .nativize import CompilationError, nativize, rx_multiple

__all__ = ["lower_reset", "DEFAULT_RESET_ROUNDS"]

DEFAULT_RESET_ROUNDS = 3


def _flip_pulses(qubit: int, device: DeviceModel) -> list[Pulse]:
    native = nativize(Program(body=(Gate("X", (), (qubit,)),)), device)
    return [Pulse(qubit, rx_multiple(g.params[0]), -1) for g in native.body]


def lower_reset(
    program: Program,
    device: DeviceModel,
    rounds: int = DEFAULT_RESET_ROUNDS,
    body_entry: str = "body",
    qubits: Iterable[int] | None = None,
) -> list[ResetCFG]:
    """Build one four-block reset CFG per qubit of ``program``.

    Qubit indices are used as given, so pass a nativized (physical) program.
    Each CFG exits to ``body_entry``; the executor runs all of them to
    completion before the body starts. The idle block waits exactly as long
    as the feedback block takes, which keeps per-shot timing independent of
    the measured bits.

    Pulse waveform indices are left at -1 for the caller to assign.
    """
    if rounds < 1:
        raise CompilationError("active reset needs at least one round")
    cfgs = []
    for q in sorted(program.qubits if qubits is None else qubits):
        prefix = f"reset_q{q}"
        header, measure, idle, feedback = (f"{prefix}_{s}" for s in ("header", "measure", "idle", "feedback"))
        counter, bit = Register(f"{prefix}_count"), Register(f"{prefix}_bit")
        pulses = _flip_pulses(q, device)
        loop = CountedJump(counter, rounds, measure, body_entry)
        blocks = (
            BasicBlock(header, (InitCounter(counter, 0),), Goto(measure)),
            BasicBlock(measure, (IncrementCounter(counter), Capture(q, bit)), Branch(bit, feedback, idle)),
            BasicBlock(idle, (Delay(q, len(pulses) * device.durations["rx_pulse"]),), loop),
            BasicBlock(feedback, tuple(pulses), loop),
        )
        cfgs.append(ResetCFG(q, header, measure, idle, feedback, rounds, counter, bit, body_entry, blocks))
    return cfgs
