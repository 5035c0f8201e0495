"""Parametric instrument binaries: data structures and the ``.pqb`` container.

Container layout (all integers little-endian)::

    magic   b"PQB1"
    version u16
    count   u16                       number of sections
    section tag[4] length[u32] payload, repeated

Sections appear in the fixed order INST, WAVE, DATA, RDOT, RSET, so equal
binaries always serialise to identical bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from io import BytesIO
from typing import Iterable, Union

from ..ir import MemoryDeclaration, MemoryRef
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

__all__ = [
    "LayoutEntry",
    "DataMemoryLayout",
    "Waveform",
    "ReadoutEntry",
    "ParametricBinary",
    "serialize",
    "deserialize",
    "BinaryFormatError",
    "MAGIC",
    "VERSION",
]

MAGIC = b"PQB1"
VERSION = 1

ELEMENT_BYTES = {"REAL": 8, "INTEGER": 8, "OCTET": 1}


class BinaryFormatError(ValueError):
    pass


@dataclass(frozen=True)
class LayoutEntry:
    name: str
    kind: str
    length: int
    offset: int

    @property
    def size(self) -> int:
        if self.kind == "BIT":
            return (self.length + 7) // 8
        return self.length * ELEMENT_BYTES[self.kind]


@dataclass(frozen=True)
class DataMemoryLayout:
    """Byte layout of data memory, one region per ``DECLARE`` in declaration order.

    REAL elements are little-endian float64, INTEGER int64, OCTET uint8; BIT
    regions pack eight elements per octet, least significant bit first.
    """

    entries: tuple[LayoutEntry, ...] = ()

    @classmethod
    def from_declarations(cls, declarations: Iterable[MemoryDeclaration]) -> "DataMemoryLayout":
        entries = []
        offset = 0
        for d in declarations:
            entry = LayoutEntry(d.name, d.kind, d.length, offset)
            entries.append(entry)
            offset += entry.size
        return cls(tuple(entries))

    @property
    def total_size(self) -> int:
        if not self.entries:
            return 0
        last = self.entries[-1]
        return last.offset + last.size

    def entry(self, name: str) -> LayoutEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def __contains__(self, ref: MemoryRef) -> bool:
        try:
            return 0 <= ref.index < self.entry(ref.name).length
        except KeyError:
            return False


@dataclass(frozen=True)
class Waveform:
    """Symbolic pulse descriptor; no sample data is synthesised."""

    qubit: int
    k: int
    shape: str
    duration: float

    @property
    def name(self) -> str:
        return f"rx{self.k * 90:+d}_q{self.qubit}"


@dataclass(frozen=True)
class ReadoutEntry:
    target: MemoryRef
    qubit: int


@dataclass(frozen=True)
class ParametricBinary:
    instruction_memory: tuple[BasicBlock, ...]
    waveform_memory: tuple[Waveform, ...]
    data_layout: DataMemoryLayout
    readout_layout: tuple[ReadoutEntry, ...]
    final_layout: tuple[int, ...]
    reset_cfgs: tuple[ResetCFG, ...]
    body_entry: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        ids = [b.id for b in self.instruction_memory]
        if len(set(ids)) != len(ids):
            raise BinaryFormatError("duplicate block ids")
        known = set(ids)
        if self.body_entry not in known:
            raise BinaryFormatError(f"entry block {self.body_entry!r} does not exist")
        for block in self.instruction_memory:
            for target in block.successors():
                if target not in known:
                    raise BinaryFormatError(f"block {block.id!r} jumps to unknown block {target!r}")
            for instr in block.instructions:
                if isinstance(instr, ShiftPhase) and isinstance(instr.angle, MemoryRef):
                    if instr.angle not in self.data_layout:
                        raise BinaryFormatError(f"{instr.angle} is not in the data layout")
                if isinstance(instr, Pulse) and not 0 <= instr.waveform < len(self.waveform_memory):
                    raise BinaryFormatError(f"pulse references missing waveform {instr.waveform}")

    @property
    def blocks(self) -> dict[str, BasicBlock]:
        return {b.id: b for b in self.instruction_memory}

    @property
    def parametric_slots(self) -> tuple[MemoryRef, ...]:
        refs = []
        for block in self.instruction_memory:
            for instr in block.instructions:
                if isinstance(instr, ShiftPhase) and isinstance(instr.angle, MemoryRef):
                    refs.append(instr.angle)
        return tuple(refs)

    def to_bytes(self) -> bytes:
        return serialize(self)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ParametricBinary":
        return deserialize(data)

    def to_json(self) -> dict:
        """Debug dump of every section."""
        return {
            "header": {"magic": MAGIC.decode(), "version": VERSION},
            "instruction_memory": [_block_json(b) for b in self.instruction_memory],
            "body_entry": self.body_entry,
            "waveform_memory": [
                {"name": w.name, "qubit": w.qubit, "k": w.k, "shape": w.shape, "duration": w.duration}
                for w in self.waveform_memory
            ],
            "data_layout": {
                "regions": [
                    {"name": e.name, "kind": e.kind, "length": e.length, "offset": e.offset, "size": e.size}
                    for e in self.data_layout.entries
                ],
                "total_size": self.data_layout.total_size,
            },
            "readout_layout": [
                {"bit": i, "target": str(r.target), "qubit": r.qubit} for i, r in enumerate(self.readout_layout)
            ],
            "final_layout": list(self.final_layout),
            "qubits": list(self.qubits),
            "reset_cfgs": [
                {
                    "qubit": c.qubit,
                    "header": c.header,
                    "measurement": c.measurement,
                    "idle": c.idle,
                    "feedback": c.feedback,
                    "rounds": c.rounds,
                    "exit": c.exit,
                }
                for c in self.reset_cfgs
            ],
        }


def _operand(x) -> str:
    return str(x)


def _instr_json(instr) -> dict:
    if isinstance(instr, Pulse):
        return {"op": "PULSE", "qubit": instr.qubit, "k": instr.k, "waveform": instr.waveform}
    if isinstance(instr, CZPulse):
        return {"op": "CZ", "edge": list(instr.edge)}
    if isinstance(instr, ShiftPhase):
        angle = instr.angle if isinstance(instr.angle, float) else str(instr.angle)
        return {"op": "SHIFT-PHASE", "qubit": instr.qubit, "angle": angle}
    if isinstance(instr, Capture):
        return {"op": "CAPTURE", "qubit": instr.qubit, "destination": _operand(instr.destination)}
    if isinstance(instr, Delay):
        return {"op": "DELAY", "qubit": instr.qubit, "duration": instr.duration}
    if isinstance(instr, InitCounter):
        return {"op": "INIT-COUNTER", "register": str(instr.register), "value": instr.value}
    if isinstance(instr, IncrementCounter):
        return {"op": "INCREMENT", "register": str(instr.register)}
    raise TypeError(instr)


def _block_json(block: BasicBlock) -> dict:
    t = block.terminator
    if isinstance(t, Goto):
        term = {"op": "JUMP", "target": t.target}
    elif isinstance(t, Branch):
        term = {"op": "BRANCH", "condition": _operand(t.condition), "if_one": t.if_one, "if_zero": t.if_zero}
    elif isinstance(t, CountedJump):
        term = {"op": "COUNTED-JUMP", "counter": str(t.counter), "bound": t.bound, "repeat": t.repeat, "exit": t.exit}
    else:
        term = {"op": "HALT"}
    return {"id": block.id, "instructions": [_instr_json(i) for i in block.instructions], "terminator": term}


# ---------------------------------------------------------------------------
# byte encoding

_OP_PULSE, _OP_CZ, _OP_PHASE_LIT, _OP_PHASE_REF = 0x01, 0x02, 0x03, 0x04
_OP_CAP_SLOT, _OP_CAP_REG, _OP_DELAY, _OP_INIT, _OP_INCR = 0x05, 0x06, 0x07, 0x08, 0x09
_T_GOTO, _T_BRANCH, _T_COUNTED, _T_HALT = 0x10, 0x11, 0x12, 0x13
_COND_SLOT, _COND_REG = 0x00, 0x01
_KINDS = ("BIT", "OCTET", "INTEGER", "REAL")


class _Writer:
    def __init__(self):
        self.buf = BytesIO()

    def pack(self, fmt: str, *values) -> None:
        self.buf.write(struct.pack("<" + fmt, *values))

    def str(self, text: str) -> None:
        data = text.encode("utf-8")
        self.pack("H", len(data))
        self.buf.write(data)

    def ref(self, ref: MemoryRef) -> None:
        self.str(ref.name)
        self.pack("I", ref.index)

    def cond(self, c: Union[MemoryRef, Register]) -> None:
        if isinstance(c, Register):
            self.pack("B", _COND_REG)
            self.str(c.name)
        else:
            self.pack("B", _COND_SLOT)
            self.ref(c)

    def getvalue(self) -> bytes:
        return self.buf.getvalue()


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def unpack(self, fmt: str):
        size = struct.calcsize("<" + fmt)
        if self.pos + size > len(self.data):
            raise BinaryFormatError("truncated binary")
        values = struct.unpack_from("<" + fmt, self.data, self.pos)
        self.pos += size
        return values if len(values) > 1 else values[0]

    def str(self) -> str:
        n = self.unpack("H")
        if self.pos + n > len(self.data):
            raise BinaryFormatError("truncated binary")
        text = self.data[self.pos:self.pos + n].decode("utf-8")
        self.pos += n
        return text

    def ref(self) -> MemoryRef:
        name = self.str()
        return MemoryRef(name, self.unpack("I"))

    def cond(self):
        tag = self.unpack("B")
        return Register(self.str()) if tag == _COND_REG else self.ref()

    def done(self) -> bool:
        return self.pos == len(self.data)


def _write_block(w: _Writer, block: BasicBlock) -> None:
    w.str(block.id)
    w.pack("I", len(block.instructions))
    for instr in block.instructions:
        if isinstance(instr, Pulse):
            w.pack("BHbI", _OP_PULSE, instr.qubit, instr.k, instr.waveform)
        elif isinstance(instr, CZPulse):
            w.pack("BHH", _OP_CZ, *instr.edge)
        elif isinstance(instr, ShiftPhase):
            if isinstance(instr.angle, MemoryRef):
                w.pack("BH", _OP_PHASE_REF, instr.qubit)
                w.ref(instr.angle)
            else:
                w.pack("BHd", _OP_PHASE_LIT, instr.qubit, instr.angle)
        elif isinstance(instr, Capture):
            if isinstance(instr.destination, Register):
                w.pack("BH", _OP_CAP_REG, instr.qubit)
                w.str(instr.destination.name)
            else:
                w.pack("BH", _OP_CAP_SLOT, instr.qubit)
                w.ref(instr.destination)
        elif isinstance(instr, Delay):
            w.pack("BHd", _OP_DELAY, instr.qubit, instr.duration)
        elif isinstance(instr, InitCounter):
            w.pack("B", _OP_INIT)
            w.str(instr.register.name)
            w.pack("I", instr.value)
        elif isinstance(instr, IncrementCounter):
            w.pack("B", _OP_INCR)
            w.str(instr.register.name)
        else:
            raise TypeError(instr)
    t = block.terminator
    if isinstance(t, Goto):
        w.pack("B", _T_GOTO)
        w.str(t.target)
    elif isinstance(t, Branch):
        w.pack("B", _T_BRANCH)
        w.cond(t.condition)
        w.str(t.if_one)
        w.str(t.if_zero)
    elif isinstance(t, CountedJump):
        w.pack("B", _T_COUNTED)
        w.str(t.counter.name)
        w.pack("I", t.bound)
        w.str(t.repeat)
        w.str(t.exit)
    else:
        w.pack("B", _T_HALT)


def _read_block(r: _Reader) -> BasicBlock:
    block_id = r.str()
    instrs = []
    for _ in range(r.unpack("I")):
        op = r.unpack("B")
        if op == _OP_PULSE:
            q, k, wf = r.unpack("HbI")
            instrs.append(Pulse(q, k, wf))
        elif op == _OP_CZ:
            instrs.append(CZPulse(tuple(r.unpack("HH"))))
        elif op == _OP_PHASE_REF:
            q = r.unpack("H")
            instrs.append(ShiftPhase(q, r.ref()))
        elif op == _OP_PHASE_LIT:
            q, angle = r.unpack("Hd")
            instrs.append(ShiftPhase(q, angle))
        elif op == _OP_CAP_REG:
            q = r.unpack("H")
            instrs.append(Capture(q, Register(r.str())))
        elif op == _OP_CAP_SLOT:
            q = r.unpack("H")
            instrs.append(Capture(q, r.ref()))
        elif op == _OP_DELAY:
            q, duration = r.unpack("Hd")
            instrs.append(Delay(q, duration))
        elif op == _OP_INIT:
            reg = Register(r.str())
            instrs.append(InitCounter(reg, r.unpack("I")))
        elif op == _OP_INCR:
            instrs.append(IncrementCounter(Register(r.str())))
        else:
            raise BinaryFormatError(f"unknown opcode 0x{op:02x}")
    term = r.unpack("B")
    if term == _T_GOTO:
        terminator = Goto(r.str())
    elif term == _T_BRANCH:
        cond = r.cond()
        terminator = Branch(cond, r.str(), r.str())
    elif term == _T_COUNTED:
        counter = Register(r.str())
        bound = r.unpack("I")
        terminator = CountedJump(counter, bound, r.str(), r.str())
    elif term == _T_HALT:
        terminator = Halt()
    else:
        raise BinaryFormatError(f"unknown terminator 0x{term:02x}")
    return BasicBlock(block_id, tuple(instrs), terminator)


def serialize(binary: ParametricBinary) -> bytes:
    sections = []

    w = _Writer()
    w.str(binary.body_entry)
    w.pack("I", len(binary.instruction_memory))
    for block in binary.instruction_memory:
        _write_block(w, block)
    sections.append((b"INST", w.getvalue()))

    w = _Writer()
    w.pack("I", len(binary.waveform_memory))
    for wf in binary.waveform_memory:
        w.pack("Hb", wf.qubit, wf.k)
        w.str(wf.shape)
        w.pack("d", wf.duration)
    sections.append((b"WAVE", w.getvalue()))

    w = _Writer()
    w.pack("I", len(binary.data_layout.entries))
    for e in binary.data_layout.entries:
        w.str(e.name)
        w.pack("BII", _KINDS.index(e.kind), e.length, e.offset)
    w.pack("I", binary.data_layout.total_size)
    sections.append((b"DATA", w.getvalue()))

    w = _Writer()
    w.pack("I", len(binary.readout_layout))
    for entry in binary.readout_layout:
        w.ref(entry.target)
        w.pack("H", entry.qubit)
    w.pack("I", len(binary.final_layout))
    w.pack(f"{len(binary.final_layout)}H", *binary.final_layout)
    w.pack("I", len(binary.qubits))
    w.pack(f"{len(binary.qubits)}H", *binary.qubits)
    sections.append((b"RDOT", w.getvalue()))

    w = _Writer()
    w.pack("I", len(binary.reset_cfgs))
    for cfg in binary.reset_cfgs:
        w.pack("HI", cfg.qubit, cfg.rounds)
        for name in (cfg.header, cfg.measurement, cfg.idle, cfg.feedback, cfg.exit, cfg.counter.name, cfg.bit.name):
            w.str(name)
    sections.append((b"RSET", w.getvalue()))

    out = BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<HH", VERSION, len(sections)))
    for tag, payload in sections:
        out.write(tag)
        out.write(struct.pack("<I", len(payload)))
        out.write(payload)
    return out.getvalue()


def deserialize(data: bytes) -> ParametricBinary:
    if data[:4] != MAGIC:
        raise BinaryFormatError("not a parametric binary (bad magic)")
    r = _Reader(data)
    r.pos = 4
    version, count = r.unpack("HH")
    if version != VERSION:
        raise BinaryFormatError(f"unsupported binary version {version}")
    sections: dict[bytes, bytes] = {}
    for _ in range(count):
        if r.pos + 4 > len(data):
            raise BinaryFormatError("truncated binary")
        tag = data[r.pos:r.pos + 4]
        r.pos += 4
        n = r.unpack("I")
        if r.pos + n > len(data):
            raise BinaryFormatError("truncated binary")
        sections[tag] = data[r.pos:r.pos + n]
        r.pos += n
    if r.pos != len(data):
        raise BinaryFormatError(f"{len(data) - r.pos} trailing bytes after the last section")
    missing = {b"INST", b"WAVE", b"DATA", b"RDOT", b"RSET"} - sections.keys()
    if missing:
        raise BinaryFormatError(f"missing sections {sorted(m.decode() for m in missing)}")

    s = _Reader(sections[b"INST"])
    entry = s.str()
    blocks = tuple(_read_block(s) for _ in range(s.unpack("I")))

    s = _Reader(sections[b"WAVE"])
    waves = []
    for _ in range(s.unpack("I")):
        q, k = s.unpack("Hb")
        shape = s.str()
        waves.append(Waveform(q, k, shape, s.unpack("d")))

    s = _Reader(sections[b"DATA"])
    entries = []
    for _ in range(s.unpack("I")):
        name = s.str()
        kind, length, offset = s.unpack("BII")
        entries.append(LayoutEntry(name, _KINDS[kind], length, offset))
    layout = DataMemoryLayout(tuple(entries))
    if s.unpack("I") != layout.total_size:
        raise BinaryFormatError("data layout size mismatch")

    s = _Reader(sections[b"RDOT"])
    readout = []
    for _ in range(s.unpack("I")):
        ref = s.ref()
        readout.append(ReadoutEntry(ref, s.unpack("H")))

    def ushorts() -> tuple[int, ...]:
        n = s.unpack("I")
        if n == 0:
            return ()
        values = s.unpack(f"{n}H")
        return values if isinstance(values, tuple) else (values,)

    final_layout = ushorts()
    qubits = ushorts()

    s = _Reader(sections[b"RSET"])
    cfgs = []
    for _ in range(s.unpack("I")):
        q, rounds = s.unpack("HI")
        header, measurement, idle, feedback, exit_, counter, bit = (s.str() for _ in range(7))
        by_id = {b.id: b for b in blocks}
        try:
            cfg_blocks = tuple(by_id[i] for i in (header, measurement, idle, feedback))
        except KeyError as exc:
            raise BinaryFormatError(f"reset block {exc.args[0]!r} missing from instruction memory") from None
        cfgs.append(ResetCFG(q, header, measurement, idle, feedback, rounds,
                             Register(counter), Register(bit), exit_, cfg_blocks))

    return ParametricBinary(
        instruction_memory=blocks,
        waveform_memory=tuple(waves),
        data_layout=layout,
        readout_layout=tuple(readout),
        final_layout=final_layout,
        reset_cfgs=tuple(cfgs),
        body_entry=entry,
        qubits=qubits,
    )
