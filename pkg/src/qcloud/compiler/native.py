"""Native instruction set, basic blocks and reset control-flow graphs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..ir import MemoryRef

__all__ = [
    "Register",
    "Pulse",
    "CZPulse",
    "ShiftPhase",
    "Capture",
    "Delay",
    "InitCounter",
    "IncrementCounter",
    "Goto",
    "Branch",
    "CountedJump",
    "Halt",
    "BasicBlock",
    "ResetCFG",
    "NativeInstruction",
    "Terminator",
]


@dataclass(frozen=True)
class Register:
    """Sequencer-local register (reset bits and round counters); not part of data memory."""

    name: str

    def __str__(self) -> str:
        return f"%{self.name}"


@dataclass(frozen=True)
class Pulse:
    """An RX rotation by ``k * pi/2`` played from waveform ``waveform``."""

    qubit: int
    k: int
    waveform: int


@dataclass(frozen=True)
class CZPulse:
    edge: tuple[int, int]


@dataclass(frozen=True)
class ShiftPhase:
    """Frame update equivalent to RZ(angle); ``angle`` may reference data memory."""

    qubit: int
    angle: Union[float, MemoryRef]

    @property
    def is_parametric(self) -> bool:
        return isinstance(self.angle, MemoryRef)


@dataclass(frozen=True)
class Capture:
    qubit: int
    destination: Union[MemoryRef, Register]


@dataclass(frozen=True)
class Delay:
    qubit: int
    duration: float


@dataclass(frozen=True)
class InitCounter:
    register: Register
    value: int = 0


@dataclass(frozen=True)
class IncrementCounter:
    register: Register


NativeInstruction = Union[Pulse, CZPulse, ShiftPhase, Capture, Delay, InitCounter, IncrementCounter]


@dataclass(frozen=True)
class Goto:
    target: str


@dataclass(frozen=True)
class Branch:
    """Jump to ``if_one`` when the condition bit is 1, else to ``if_zero``."""

    condition: Union[MemoryRef, Register]
    if_one: str
    if_zero: str


@dataclass(frozen=True)
class CountedJump:
    """Jump to ``repeat`` while ``counter < bound``, then to ``exit``."""

    counter: Register
    bound: int
    repeat: str
    exit: str


@dataclass(frozen=True)
class Halt:
    pass


Terminator = Union[Goto, Branch, CountedJump, Halt]


@dataclass(frozen=True)
class BasicBlock:
    id: str
    instructions: tuple[NativeInstruction, ...]
    terminator: Terminator

    def successors(self) -> tuple[str, ...]:
        t = self.terminator
        if isinstance(t, Goto):
            return (t.target,)
        if isinstance(t, Branch):
            return (t.if_one, t.if_zero)
        if isinstance(t, CountedJump):
            return (t.repeat, t.exit)
        return ()


@dataclass(frozen=True)
class ResetCFG:
    """The four-block active-reset loop of one qubit.

    ``header -> measurement``; the measurement block branches to ``feedback``
    on a reported 1 and to ``idle`` on 0; both return to ``measurement``
    until ``rounds`` measurements have been made, then exit to the body.
    """

    qubit: int
    header: str
    measurement: str
    idle: str
    feedback: str
    rounds: int
    counter: Register
    bit: Register
    exit: str
    blocks: tuple[BasicBlock, ...]
