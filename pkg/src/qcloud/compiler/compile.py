"""Program -> ParametricBinary."""

from __future__ import annotations

import threading
from dataclasses import replace

from ..device import DeviceModel
from ..ir import Gate, Jump, JumpUnless, JumpWhen, Label, Measure, MemoryRef, Program, Halt as IRHalt
from .binary import DataMemoryLayout, ParametricBinary, ReadoutEntry, Waveform
from .native import BasicBlock, Branch, Capture, CZPulse, Goto, Halt, Pulse, ShiftPhase
from .nativize import nativize_with_layout, rx_multiple
from .reset import DEFAULT_RESET_ROUNDS, lower_reset

__all__ = ["compile_program", "lower_body", "compile_count", "BODY_ENTRY"]

BODY_ENTRY = "body"

_count_lock = threading.Lock()
_compile_calls = 0


def compile_count() -> int:
    """Number of ``compile_program`` calls made by this process so far."""
    return _compile_calls


def _label_block(name: str) -> str:
    return f"label_{name}"


def lower_body(native: Program) -> list[BasicBlock]:
    """Split a nativized body into basic blocks; unreachable blocks are dropped."""
    blocks: list[BasicBlock] = []
    anon = 0
    current, instrs = BODY_ENTRY, []

    def fresh() -> str:
        nonlocal anon
        anon += 1
        return f"body_{anon}"

    def close(terminator) -> None:
        blocks.append(BasicBlock(current, tuple(instrs), terminator))

    for instr in native.body:
        if isinstance(instr, Gate):
            q = instr.qubits[0]
            if instr.name == "RZ":
                angle = instr.params[0]
                instrs.append(ShiftPhase(q, angle if isinstance(angle, MemoryRef) else float(angle)))
            elif instr.name == "RX":
                instrs.append(Pulse(q, rx_multiple(instr.params[0]), -1))
            elif instr.name == "CZ":
                instrs.append(CZPulse(tuple(sorted(instr.qubits))))
            else:
                raise AssertionError(f"non-native gate {instr.name} reached block lowering")
            continue
        if isinstance(instr, Measure):
            instrs.append(Capture(instr.qubit, instr.target))
            continue
        if isinstance(instr, Label):
            close(Goto(_label_block(instr.name)))
            current, instrs = _label_block(instr.name), []
        elif isinstance(instr, Jump):
            close(Goto(_label_block(instr.target)))
            current, instrs = fresh(), []
        elif isinstance(instr, (JumpWhen, JumpUnless)):
            nxt = fresh()
            taken = _label_block(instr.target)
            close(Branch(instr.condition, taken, nxt) if isinstance(instr, JumpWhen)
                  else Branch(instr.condition, nxt, taken))
            current, instrs = nxt, []
        elif isinstance(instr, IRHalt):
            close(Halt())
            current, instrs = fresh(), []
    close(Halt())

    by_id = {b.id: b for b in blocks}
    reachable, stack = set(), [BODY_ENTRY]
    while stack:
        bid = stack.pop()
        if bid in reachable:
            continue
        reachable.add(bid)
        stack.extend(by_id[bid].successors())
    return [b for b in blocks if b.id in reachable]


def _assign_waveforms(blocks: list[BasicBlock], device: DeviceModel):
    keys = sorted({(i.qubit, i.k) for b in blocks for i in b.instructions if isinstance(i, Pulse)})
    index = {key: n for n, key in enumerate(keys)}
    waves = tuple(Waveform(q, k, "drag_gaussian", device.durations["rx_pulse"]) for q, k in keys)

    def fix(block: BasicBlock) -> BasicBlock:
        instrs = tuple(replace(i, waveform=index[(i.qubit, i.k)]) if isinstance(i, Pulse) else i
                       for i in block.instructions)
        return replace(block, instructions=instrs)

    return [fix(b) for b in blocks], waves


def compile_program(program: Program, device: DeviceModel, reset_rounds: int = DEFAULT_RESET_ROUNDS) -> ParametricBinary:
    """Compile ``program`` for ``device`` into a patchable binary.

    Literal rotations are resolved now; every memory-referenced ``RZ``
    becomes a ``ShiftPhase`` reading its angle from data memory, so new
    parameter values only require :func:`qcloud.executor.patch`.
    Compilation is deterministic: equal inputs give byte-identical binaries.
    """
    global _compile_calls
    with _count_lock:
        _compile_calls += 1
    native, l2p = nativize_with_layout(program, device)
    body_blocks = lower_body(native)
    qubits = native.qubits
    cfgs = lower_reset(native, device, reset_rounds, BODY_ENTRY) if program.reset_requested else []
    reset_blocks = [b for cfg in cfgs for b in cfg.blocks]
    all_blocks, waves = _assign_waveforms(reset_blocks + body_blocks, device)
    by_id = {b.id: b for b in all_blocks}
    cfgs = [replace(c, blocks=tuple(by_id[b.id] for b in c.blocks)) for c in cfgs]

    layout = DataMemoryLayout.from_declarations(program.declarations)
    order = {d.name: n for n, d in enumerate(program.declarations)}
    targets: dict[MemoryRef, int] = {}
    for instr in native.body:
        if isinstance(instr, Measure) and instr.target not in targets:
            targets[instr.target] = instr.qubit
    readout = tuple(ReadoutEntry(ref, q) for ref, q in
                    sorted(targets.items(), key=lambda item: (order[item[0].name], item[0].index)))
    return ParametricBinary(
        instruction_memory=tuple(all_blocks),
        waveform_memory=waves,
        data_layout=layout,
        readout_layout=readout,
        final_layout=tuple(l2p),
        reset_cfgs=tuple(cfgs),
        body_entry=BODY_ENTRY,
        qubits=qubits,
    )
