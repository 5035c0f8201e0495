"""Shot execution of patched binaries on a simulated QPU.

Two interpreters share one semantics:

* a vectorised path, used when the body's control flow is fixed by patched
  data memory and no gate follows a capture on the same qubit. All shots
  are evaluated at once; reset loops are walked per qubit over shot arrays.
* a per-shot interpreter for everything else (mid-circuit feedback).

Readout feedback branches on the *reported* bit while the quantum state
collapses onto the *true* outcome.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..compiler.binary import ParametricBinary
from ..compiler.native import (
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
from ..device import DeviceModel
from ..gates import rx, rz
from ..ir import MemoryRef
from .memory import PatchedBinary, read_slot, write_slot
from .statevector import MAX_QUBITS, apply_1q, apply_diagonal_cz, basis_state, probabilities, zero_state

__all__ = [
    "ExecutionError",
    "ExecutionReport",
    "ShotResult",
    "RESET_MODES",
    "execute",
    "outcome_distribution",
    "final_statevector",
]

RESET_MODES = ("passive", "active")
_MAX_BLOCK_VISITS = 100_000


class ExecutionError(RuntimeError):
    pass


@dataclass(frozen=True)
class ShotResult:
    bits: tuple[int, ...]
    simulated_duration: float


@dataclass
class ExecutionReport:
    """Outcome of one execution.

    ``bits[s, i]`` is readout bit ``i`` (the ``i``-th entry of the binary's
    readout layout) of shot ``s``.
    """

    bits: np.ndarray
    durations: np.ndarray
    step_overhead: float
    readout_targets: tuple[str, ...]
    defaulted: tuple[str, ...] = ()
    vectorized: bool = True
    wall_clock: float = 0.0

    @property
    def simulated_total(self) -> float:
        return self.step_overhead + math.fsum(self.durations.tolist())

    @property
    def shots(self) -> list[ShotResult]:
        return [ShotResult(tuple(int(b) for b in row), float(d)) for row, d in zip(self.bits, self.durations)]

    @property
    def n_shots(self) -> int:
        return len(self.durations)

    def outcome_indices(self) -> np.ndarray:
        """Per-shot integer outcome with readout bit 0 as the least significant bit."""
        weights = 1 << np.arange(self.bits.shape[1], dtype=np.int64)
        return self.bits.astype(np.int64) @ weights

    def counts(self) -> dict[str, int]:
        """Outcome histogram keyed by bitstrings whose character ``i`` is readout bit ``i``."""
        rows, freq = np.unique(self.bits, axis=0, return_counts=True)
        return {"".join(map(str, row)): int(c) for row, c in zip(rows, freq)}

    def packed_rows(self) -> bytes:
        return np.packbits(self.bits, axis=1, bitorder="little").tobytes()

    def timing(self) -> dict:
        per_shot = self.durations.tolist()
        return {
            "shots": self.n_shots,
            "step_overhead_s": self.step_overhead,
            "per_shot_s": per_shot[0] if len(set(per_shot)) == 1 else per_shot,
            "simulated_total_s": self.simulated_total,
        }

    def to_json(self) -> dict:
        """Deterministic result document; the host wall-clock time is deliberately excluded."""
        return {
            "readout": list(self.readout_targets),
            "bitstrings": ["".join(map(str, row)) for row in self.bits.tolist()],
            "timing": self.timing(),
            "defaulted_slots": list(self.defaulted),
            "vectorized": self.vectorized,
        }


# -- lowering to local-qubit operations ----------------------------------------


@dataclass
class _Program:
    """A patched binary with resolved angles and compressed qubit indices."""

    patched: PatchedBinary
    device: DeviceModel
    local: dict[int, int]
    ops: dict[str, tuple]
    terminators: dict[str, object]
    captured_refs: frozenset
    n: int = field(init=False)

    def __post_init__(self):
        self.n = len(self.local)


def _memory_value(patched: PatchedBinary, ref: MemoryRef):
    layout = patched.binary.data_layout
    return read_slot(patched.data_memory, layout.entry(ref.name), ref.index)


def _lower(patched: PatchedBinary, device: DeviceModel) -> _Program:
    binary = patched.binary
    local = {q: i for i, q in enumerate(binary.qubits)}
    if len(local) > MAX_QUBITS:
        raise ExecutionError(f"{len(local)} qubits exceeds the simulator limit of {MAX_QUBITS}")
    d = device.durations
    ops: dict[str, tuple] = {}
    captured = set()
    for block in binary.instruction_memory:
        lowered = []
        for instr in block.instructions:
            if isinstance(instr, Pulse):
                lowered.append(("u", local[instr.qubit], rx(instr.k * math.pi / 2), d["rx_pulse"], instr.k))
            elif isinstance(instr, ShiftPhase):
                angle = _memory_value(patched, instr.angle) if instr.is_parametric else instr.angle
                lowered.append(("u", local[instr.qubit], rz(angle), 0.0, 0))
            elif isinstance(instr, CZPulse):
                lowered.append(("cz", local[instr.edge[0]], local[instr.edge[1]], d["cz"]))
            elif isinstance(instr, Capture):
                if isinstance(instr.destination, MemoryRef):
                    captured.add(instr.destination)
                lowered.append(("cap", local[instr.qubit], instr.destination, d["readout_capture"]))
            elif isinstance(instr, Delay):
                lowered.append(("delay", local[instr.qubit], instr.duration))
            elif isinstance(instr, InitCounter):
                lowered.append(("init", instr.register.name, instr.value))
            elif isinstance(instr, IncrementCounter):
                lowered.append(("inc", instr.register.name))
            else:
                raise ExecutionError(f"unsupported instruction {instr!r}")
        ops[block.id] = tuple(lowered)
    return _Program(patched, device, local, ops, {b.id: b.terminator for b in binary.instruction_memory}, frozenset(captured))


def _check_structure(binary: ParametricBinary) -> None:
    blocks = binary.blocks

    def reaches(start: str, goal) -> bool:
        seen, stack = set(), [start]
        while stack:
            bid = stack.pop()
            if bid in seen:
                continue
            seen.add(bid)
            if goal(blocks[bid]):
                return True
            stack.extend(blocks[bid].successors())
        return False

    if not reaches(binary.body_entry, lambda b: isinstance(b.terminator, Halt)):
        raise ExecutionError("malformed control flow: no HALT is reachable from the body entry")
    for cfg in binary.reset_cfgs:
        if not reaches(cfg.header, lambda b: cfg.exit in b.successors()):
            raise ExecutionError(f"malformed reset loop on qubit {cfg.qubit}: it never exits")


# -- fast-path analysis -----------------------------------------------------------


def _static_path(prog: _Program) -> list[tuple] | None:
    """Body operations along the data-memory-determined path, or None if the path is dynamic."""
    ops: list[tuple] = []
    seen = set()
    bid = prog.patched.binary.body_entry
    measured: set[int] = set()
    while True:
        if bid in seen:
            raise ExecutionError(f"malformed control flow: block {bid!r} loops without reaching HALT")
        seen.add(bid)
        for op in prog.ops[bid]:
            kind = op[0]
            if kind == "cap":
                measured.add(op[1])
            elif kind == "u" and op[1] in measured:
                return None
            elif kind == "cz" and (op[1] in measured or op[2] in measured):
                return None
            elif kind in ("init", "inc"):
                return None
            ops.append(op)
        term = prog.terminators[bid]
        if isinstance(term, Halt):
            return ops
        if isinstance(term, Goto):
            bid = term.target
        elif isinstance(term, Branch) and isinstance(term.condition, MemoryRef) and term.condition not in prog.captured_refs:
            bid = term.if_one if _memory_value(prog.patched, term.condition) else term.if_zero
        else:
            return None


def _reset_vectorizable(prog: _Program, cfg: ResetCFG) -> bool:
    for block in cfg.blocks:
        flips = 0
        for op in prog.ops[block.id]:
            if op[0] == "u":
                if op[4] % 2:
                    return False
                flips += op[4]
            elif op[0] == "cz":
                return False
            elif op[0] == "cap" and not isinstance(op[2], Register):
                return False
        if not isinstance(block.terminator, (Goto, Branch, CountedJump)):
            return False
        if isinstance(block.terminator, Branch) and not isinstance(block.terminator.condition, Register):
            return False
    return True


def _confusion(device: DeviceModel, qubits: Iterable[int]) -> np.ndarray:
    """Per-local-qubit ``[P(report 1 | 0), P(report 0 | 1)]``."""
    return np.array([device.readout_confusion[q] for q in qubits], dtype=float).reshape(-1, 2)


def _body_timeline(n: int, path: list[tuple]) -> float:
    t = np.zeros(n)
    for op in path:
        kind = op[0]
        if kind == "u":
            t[op[1]] += op[3]
        elif kind == "cz":
            start = max(t[op[1]], t[op[2]]) + op[3]
            t[op[1]] = t[op[2]] = start
        elif kind in ("cap", "delay"):
            t[op[1]] += op[3] if kind == "cap" else op[2]
    return float(t.max()) if n else 0.0


def _apply_unitary_ops(state: np.ndarray, n: int, path: list[tuple]) -> np.ndarray:
    for op in path:
        if op[0] == "u":
            state = apply_1q(state, n, op[1], op[2])
        elif op[0] == "cz":
            state = apply_diagonal_cz(state, op[1], op[2])
    return state


def _walk_reset_vectorized(prog: _Program, cfg: ResetCFG, excited: np.ndarray, rng: np.random.Generator):
    """Walk one qubit's reset loop over all shots at once. Returns (excited, elapsed)."""
    eps0, eps1 = prog.device.readout_confusion[cfg.qubit]
    latency = prog.device.durations["feedback_latency"]
    shots = excited.size
    order = [b.id for b in cfg.blocks]
    index = {bid: i for i, bid in enumerate(order)}
    exit_code = len(order)
    cur = np.full(shots, index[cfg.header])
    elapsed = np.zeros(shots)
    regs: dict[str, np.ndarray] = {}
    excited = excited.copy()
    for _ in range(_MAX_BLOCK_VISITS):
        if (cur == exit_code).all():
            return excited, elapsed
        for bid in order:
            sel = np.flatnonzero(cur == index[bid])
            if sel.size == 0:
                continue
            for op in prog.ops[bid]:
                kind = op[0]
                if kind == "u":
                    if op[4] % 4 == 2:
                        excited[sel] ^= 1
                    elapsed[sel] += op[3]
                elif kind == "delay":
                    elapsed[sel] += op[2]
                elif kind == "cap":
                    true = excited[sel]
                    flip = rng.random(sel.size) < np.where(true == 1, eps1, eps0)
                    regs.setdefault(op[2].name, np.zeros(shots, dtype=np.int64))[sel] = true ^ flip
                    elapsed[sel] += op[3]
                elif kind == "init":
                    regs.setdefault(op[1], np.zeros(shots, dtype=np.int64))[sel] = op[2]
                elif kind == "inc":
                    regs.setdefault(op[1], np.zeros(shots, dtype=np.int64))[sel] += 1
            term = prog.terminators[bid]
            code = lambda target: exit_code if target == cfg.exit else index[target]  # noqa: E731
            if isinstance(term, Goto):
                cur[sel] = code(term.target)
            elif isinstance(term, Branch):
                bit = regs.get(term.condition.name, np.zeros(shots, dtype=np.int64))[sel]
                elapsed[sel] += latency
                cur[sel] = np.where(bit == 1, code(term.if_one), code(term.if_zero))
            else:
                count = regs.get(term.counter.name, np.zeros(shots, dtype=np.int64))[sel]
                cur[sel] = np.where(count < term.bound, code(term.repeat), code(term.exit))
    raise ExecutionError(f"reset loop on qubit {cfg.qubit} did not terminate")


def _readout_columns(binary: ParametricBinary, path: list[tuple]):
    """Map each readout bit to the index of the last capture writing it (or None)."""
    captures = [op for op in path if op[0] == "cap"]
    last = {}
    for j, op in enumerate(captures):
        last[op[2]] = j
    return captures, [last.get(entry.target) for entry in binary.readout_layout]


def _run_vectorized(prog: _Program, path: list[tuple], shots: int, rng: np.random.Generator, reset_mode: str):
    binary, device = prog.patched.binary, prog.device
    n = prog.n
    ground = np.array([device.reset_ground_population[q] for q in binary.qubits])
    excited = (rng.random((shots, n)) >= ground).astype(np.int64) if n else np.zeros((shots, 0), dtype=np.int64)
    if reset_mode == "active":
        barrier = np.zeros(shots)
        for cfg in binary.reset_cfgs:
            col = prog.local[cfg.qubit]
            excited[:, col], elapsed = _walk_reset_vectorized(prog, cfg, excited[:, col], rng)
            barrier = np.maximum(barrier, elapsed)
    else:
        barrier = np.full(shots, device.passive_reset_time(binary.qubits))
    durations = barrier + _body_timeline(n, path)

    start = excited @ (1 << np.arange(n, dtype=np.int64)) if n else np.zeros(shots, dtype=np.int64)
    outcome = np.zeros(shots, dtype=np.int64)
    captures, columns = _readout_columns(binary, path)
    if captures:
        for index in np.unique(start):
            sel = np.flatnonzero(start == index)
            probs = probabilities(_apply_unitary_ops(basis_state(n, int(index)), n, path))
            outcome[sel] = rng.choice(probs.size, size=sel.size, p=probs)
    confusion = _confusion(device, binary.qubits)
    reported = np.zeros((shots, len(captures)), dtype=np.uint8)
    for j, op in enumerate(captures):
        true = (outcome >> op[1]) & 1
        flip = rng.random(shots) < np.where(true == 1, confusion[op[1], 1], confusion[op[1], 0])
        reported[:, j] = true ^ flip
    bits = np.zeros((shots, len(columns)), dtype=np.uint8)
    for i, (entry, col) in enumerate(zip(binary.readout_layout, columns)):
        bits[:, i] = reported[:, col] if col is not None else _memory_value(prog.patched, entry.target)
    return bits, durations


# -- per-shot interpreter -----------------------------------------------------------


class _Shot:
    def __init__(self, prog: _Program, rng: np.random.Generator):
        self.prog = prog
        self.rng = rng
        self.n = prog.n
        self.t = np.zeros(prog.n)
        self.regs: dict[str, int] = {}
        self.memory = bytearray(prog.patched.data_memory)
        self.written: set[MemoryRef] = set()

    def init_state(self, excited: np.ndarray) -> None:
        self.state = basis_state(self.n, int(excited @ (1 << np.arange(self.n))) if self.n else 0)

    def measure(self, q: int, physical: int) -> int:
        idx = np.arange(self.state.size)
        one = ((idx >> q) & 1).astype(bool)
        p1 = float(np.sum(np.abs(self.state[one]) ** 2))
        true = int(self.rng.random() < p1)
        keep = one if true else ~one
        self.state = np.where(keep, self.state, 0)
        self.state /= np.linalg.norm(self.state)
        eps0, eps1 = self.prog.device.readout_confusion[physical]
        flip = self.rng.random() < (eps1 if true else eps0)
        return true ^ int(flip)

    def run_block(self, bid: str, physical: tuple[int, ...]) -> None:
        for op in self.prog.ops[bid]:
            kind = op[0]
            if kind == "u":
                self.state = apply_1q(self.state, self.n, op[1], op[2])
                self.t[op[1]] += op[3]
            elif kind == "cz":
                self.state = apply_diagonal_cz(self.state, op[1], op[2])
                self.t[op[1]] = self.t[op[2]] = max(self.t[op[1]], self.t[op[2]]) + op[3]
            elif kind == "cap":
                bit = self.measure(op[1], physical[op[1]])
                dest = op[2]
                if isinstance(dest, Register):
                    self.regs[dest.name] = bit
                else:
                    layout = self.prog.patched.binary.data_layout
                    write_slot(self.memory, layout.entry(dest.name), dest.index, bit)
                    self.written.add(dest)
                self.t[op[1]] += op[3]
            elif kind == "delay":
                self.t[op[1]] += op[2]
            elif kind == "init":
                self.regs[op[1]] = op[2]
            elif kind == "inc":
                self.regs[op[1]] = self.regs.get(op[1], 0) + 1

    def condition(self, cond) -> tuple[int, bool]:
        if isinstance(cond, Register):
            return self.regs.get(cond.name, 0), True
        layout = self.prog.patched.binary.data_layout
        return read_slot(self.memory, layout.entry(cond.name), cond.index), cond in self.written

    def walk(self, entry: str, stop: set[str], qubits: list[int] | None) -> str:
        """Run blocks from ``entry`` until a Halt or a block id in ``stop``."""
        physical = self.prog.patched.binary.qubits
        latency = self.prog.device.durations["feedback_latency"]
        bid = entry
        for _ in range(_MAX_BLOCK_VISITS):
            if bid in stop:
                return bid
            self.run_block(bid, physical)
            term = self.prog.terminators[bid]
            if isinstance(term, Halt):
                return ""
            if isinstance(term, Goto):
                bid = term.target
            elif isinstance(term, Branch):
                value, dynamic = self.condition(term.condition)
                if dynamic:
                    lanes = qubits if qubits is not None else slice(None)
                    self.t[lanes] = (self.t[lanes].max() if self.n else 0.0) + latency
                bid = term.if_one if value else term.if_zero
            else:
                bid = term.repeat if self.regs.get(term.counter.name, 0) < term.bound else term.exit
        raise ExecutionError(f"shot exceeded {_MAX_BLOCK_VISITS} block visits without reaching HALT")


def _run_per_shot(prog: _Program, shots: int, rng: np.random.Generator, reset_mode: str):
    binary, device = prog.patched.binary, prog.device
    ground = np.array([device.reset_ground_population[q] for q in binary.qubits])
    bits = np.zeros((shots, len(binary.readout_layout)), dtype=np.uint8)
    durations = np.zeros(shots)
    passive = device.passive_reset_time(binary.qubits)
    layout = binary.data_layout
    for s in range(shots):
        shot = _Shot(prog, rng)
        shot.init_state((rng.random(prog.n) >= ground).astype(np.int64))
        if reset_mode == "active":
            for cfg in binary.reset_cfgs:
                shot.walk(cfg.header, {cfg.exit}, [prog.local[cfg.qubit]])
            if prog.n:
                shot.t[:] = shot.t.max()
        else:
            shot.t[:] = passive
        if shot.walk(binary.body_entry, set(), None):
            raise ExecutionError("body exited without HALT")
        bits[s] = [read_slot(shot.memory, layout.entry(e.target.name), e.target.index) for e in binary.readout_layout]
        durations[s] = float(shot.t.max()) if prog.n else passive
    return bits, durations


# -- public entry points --------------------------------------------------------


def _prepare(patched: PatchedBinary, device: DeviceModel, reset_mode: str) -> _Program:
    if reset_mode not in RESET_MODES:
        raise ExecutionError(f"reset_mode must be one of {RESET_MODES}, got {reset_mode!r}")
    binary = patched.binary
    if reset_mode == "active" and not binary.reset_cfgs and binary.qubits:
        raise ExecutionError("active reset requested but the binary was compiled without RESET")
    for q in binary.qubits:
        if q >= device.qubit_count:
            raise ExecutionError(f"binary uses qubit {q}, which this device does not have")
    _check_structure(binary)
    return _lower(patched, device)


def execute(
    patched: PatchedBinary,
    device: DeviceModel,
    shots: int,
    seed=None,
    reset_mode: str = "passive",
    force_per_shot: bool = False,
) -> ExecutionReport:
    """Run ``shots`` shots and account their simulated duration.

    Per-shot duration is the reset time plus the ASAP makespan of the body;
    ``simulated_total`` adds the per-execution step overhead once. The
    compile overhead is not included. ``seed`` is anything accepted by
    :func:`numpy.random.default_rng`.
    """
    if not isinstance(shots, (int, np.integer)) or isinstance(shots, bool) or shots < 1:
        raise ExecutionError(f"shots must be a positive integer, got {shots!r}")
    started = time.perf_counter()
    prog = _prepare(patched, device, reset_mode)
    rng = np.random.default_rng(seed)
    path = None if force_per_shot else _static_path(prog)
    if path is not None and reset_mode == "active":
        if not all(_reset_vectorizable(prog, cfg) for cfg in patched.binary.reset_cfgs):
            path = None
    if path is not None:
        bits, durations = _run_vectorized(prog, path, int(shots), rng, reset_mode)
    else:
        bits, durations = _run_per_shot(prog, int(shots), rng, reset_mode)
    return ExecutionReport(
        bits=bits,
        durations=durations,
        step_overhead=device.step_overhead,
        readout_targets=tuple(str(e.target) for e in patched.binary.readout_layout),
        defaulted=tuple(str(r) for r in patched.defaulted),
        vectorized=path is not None,
        wall_clock=time.perf_counter() - started,
    )


def _reset_transition(prog: _Program, cfg: ResetCFG) -> np.ndarray:
    """Exact ``T[b_in, b_out]`` for one qubit's reset loop by branch enumeration."""
    eps0, eps1 = prog.device.readout_confusion[cfg.qubit]
    out = np.zeros((2, 2))

    def visit(bid, excited, regs, weight, depth):
        if depth > _MAX_BLOCK_VISITS:
            raise ExecutionError(f"reset loop on qubit {cfg.qubit} did not terminate")
        if bid == cfg.exit:
            out[start, excited] += weight
            return
        regs = dict(regs)
        branches = [(excited, regs, weight)]
        for op in prog.ops[bid]:
            nxt = []
            for ex, rg, w in branches:
                if op[0] == "u" and op[4] % 4 == 2:
                    ex ^= 1
                elif op[0] == "cap":
                    p_flip = eps1 if ex else eps0
                    for reported, pw in ((ex ^ 1, p_flip), (ex, 1 - p_flip)):
                        if pw > 0:
                            nxt.append((ex, {**rg, op[2].name: reported}, w * pw))
                    continue
                elif op[0] == "init":
                    rg = {**rg, op[1]: op[2]}
                elif op[0] == "inc":
                    rg = {**rg, op[1]: rg.get(op[1], 0) + 1}
                nxt.append((ex, rg, w))
            branches = nxt
        term = prog.terminators[bid]
        for ex, rg, w in branches:
            if isinstance(term, Goto):
                visit(term.target, ex, rg, w, depth + 1)
            elif isinstance(term, Branch):
                visit(term.if_one if rg.get(term.condition.name, 0) else term.if_zero, ex, rg, w, depth + 1)
            else:
                visit(term.repeat if rg.get(term.counter.name, 0) < term.bound else term.exit, ex, rg, w, depth + 1)

    for start in (0, 1):
        visit(cfg.header, start, {}, 1.0, 0)
    return out


def outcome_distribution(patched: PatchedBinary, device: DeviceModel, reset_mode: str = "passive") -> np.ndarray:
    """Exact probability of each readout outcome, indexed with readout bit 0 least significant.

    Includes initial-population, reset-loop and readout-confusion effects.
    Only available when the vectorised path applies.
    """
    prog = _prepare(patched, device, reset_mode)
    path = _static_path(prog)
    if path is None or (reset_mode == "active" and not all(_reset_vectorizable(prog, c) for c in patched.binary.reset_cfgs)):
        raise ExecutionError("exact outcome distributions need a statically determined path")
    binary, n = patched.binary, prog.n
    per_qubit = []
    transitions = {prog.local[c.qubit]: _reset_transition(prog, c) for c in binary.reset_cfgs}
    for i, q in enumerate(binary.qubits):
        g = device.reset_ground_population[q]
        dist = np.array([g, 1 - g])
        if reset_mode == "active":
            dist = dist @ transitions[i]
        per_qubit.append(dist)
    start = np.ones(1)
    for dist in reversed(per_qubit):
        start = np.kron(start, dist)  # qubit 0 ends up least significant
    true = np.zeros(2**n)
    for index in np.flatnonzero(start > 0):
        true += start[index] * probabilities(_apply_unitary_ops(basis_state(n, int(index)), n, path))

    captures, columns = _readout_columns(binary, path)
    conf = _confusion(device, binary.qubits)
    c = len(captures)
    reported_idx = np.arange(2**c)[:, None]
    true_idx = np.arange(2**n)[None, :]
    kernel = np.ones((2**c, 2**n))
    for j, op in enumerate(captures):
        r = (reported_idx >> j) & 1
        x = (true_idx >> op[1]) & 1
        p_one = np.where(x == 1, 1 - conf[op[1], 1], conf[op[1], 0])
        kernel *= np.where(r == 1, p_one, 1 - p_one)
    reported = kernel @ true

    result = np.zeros(2 ** len(columns))
    for r_index, p in enumerate(reported):
        out = 0
        for i, (entry, col) in enumerate(zip(binary.readout_layout, columns)):
            bit = (r_index >> col) & 1 if col is not None else _memory_value(patched, entry.target)
            out |= int(bit) << i
        result[out] += p
    return result


def final_statevector(patched: PatchedBinary, device: DeviceModel, logical: bool = True) -> np.ndarray:
    """Body state from |0...0> for a capture-free, statically determined binary.

    With ``logical`` the routing permutation is undone and the vector is
    indexed by logical qubits ``0..L-1`` (untouched qubits stay in |0>);
    otherwise it is indexed by the binary's physical qubits in sorted order.
    """
    prog = _prepare(patched, device, "passive")
    path = _static_path(prog)
    if path is None or any(op[0] == "cap" for op in path):
        raise ExecutionError("final_statevector needs a measurement-free, statically determined body")
    n = prog.n
    state = _apply_unitary_ops(zero_state(n), n, path)
    if not logical:
        return state
    binary = patched.binary
    p2l = {p: l for l, p in enumerate(binary.final_layout)}
    labels = [p2l.get(p, p) for p in binary.qubits]
    width = max(labels, default=-1) + 1
    idx = np.arange(2**n)
    target = np.zeros(2**n, dtype=np.int64)
    for i, label in enumerate(labels):
        target |= ((idx >> i) & 1) << label
    out = np.zeros(2**width, dtype=complex)
    out[target] = state
    return out
