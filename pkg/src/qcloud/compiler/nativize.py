"""Lower arbitrary subset programs onto the native gateset and device topology.

Native output uses only ``RZ(theta)``, ``RX(k*pi/2)`` with ``k`` in
{-1, 1, 2}, ``CZ`` on coupled pairs, ``MEASURE`` and control flow.
"""

from __future__ import annotations

import math
from typing import Iterable

from ..device import DeviceModel, DeviceModelError
from ..ir import (
    CONTROL_FLOW,
    Gate,
    Instruction,
    Measure,
    MemoryRef,
    Program,
)
from .euler import canonical_angle

__all__ = ["nativize", "nativize_with_layout", "is_native", "CompilationError", "rx_multiple"]

HALF_PI = math.pi / 2
_ANGLE_TOL = 1e-12


class CompilationError(ValueError):
    pass


def rx_multiple(theta: float) -> int | None:
    """Return ``k`` in {0, -1, 1, 2} when ``theta`` is ``k*pi/2`` mod 2pi, else None."""
    theta = canonical_angle(theta)
    k = round(theta / HALF_PI)
    if abs(theta - k * HALF_PI) > _ANGLE_TOL:
        return None
    return {-2: 2, -1: -1, 0: 0, 1: 1, 2: 2}[k]


def _rx_k(q: int, k: int) -> list[Gate]:
    if k == 0:
        return []
    return [Gate("RX", ({1: HALF_PI, -1: -HALF_PI, 2: math.pi}[k],), (q,))]


def _rz(q: int, theta) -> Gate:
    return Gate("RZ", (theta,), (q,))


def _hadamard(q: int) -> list[Gate]:
    return [_rz(q, HALF_PI), *_rx_k(q, 1), _rz(q, HALF_PI)]


def _decompose(gate: Gate, device: DeviceModel) -> list[Gate]:
    name, qs = gate.name, gate.qubits
    if name == "RZ":
        return [gate]
    if name == "RX":
        (theta,) = gate.params
        if not isinstance(theta, MemoryRef):
            k = rx_multiple(theta)
            if k is not None:
                return _rx_k(qs[0], k)
        # RZ(-pi/2) RY(theta) RZ(pi/2) == RX(theta); the angle stays a pure frame update
        q = qs[0]
        return [_rz(q, HALF_PI), *_rx_k(q, 1), _rz(q, theta), *_rx_k(q, -1), _rz(q, -HALF_PI)]
    if name == "RY":
        (theta,) = gate.params
        q = qs[0]
        return [*_rx_k(q, 1), _rz(q, theta), *_rx_k(q, -1)]
    if name == "H":
        return _hadamard(qs[0])
    if name == "X":
        return _rx_k(qs[0], 2)
    if name == "Y":
        return [_rz(qs[0], math.pi), *_rx_k(qs[0], 2)]
    if name == "Z":
        return [_rz(qs[0], math.pi)]
    if name == "CZ":
        a, b = sorted(qs)
        if not device.are_connected(a, b):
            raise CompilationError(f"CZ {a} {b} is not on a device edge")
        return [Gate("CZ", (), (a, b))]
    if name == "CNOT":
        c, t = qs
        return [*_hadamard(t), *_decompose(Gate("CZ", (), (c, t)), device), *_hadamard(t)]
    if name == "SWAP":
        a, b = qs
        out: list[Gate] = []
        for c, t in ((a, b), (b, a), (a, b)):
            out.extend(_decompose(Gate("CNOT", (), (c, t)), device))
        return out
    raise CompilationError(f"no decomposition for gate {name}")


def _segments(body: Iterable[Instruction]):
    """Split a body into runs of straight-line instructions and single control-flow items."""
    run: list[Instruction] = []
    for instr in body:
        if isinstance(instr, CONTROL_FLOW):
            yield run
            yield instr
            run = []
        else:
            run.append(instr)
    yield run


def _route(program: Program, device: DeviceModel) -> tuple[list[Instruction], list[int]]:
    """Greedy shortest-path SWAP insertion.

    Returns the physical instruction list and the final logical-to-physical
    map. With control flow present the identity layout is restored at every
    basic-block boundary, so each block can be entered with a known layout.
    """
    n = device.qubit_count
    restore = program.has_control_flow
    l2p = list(range(n))
    p2l = list(range(n))
    out: list[Instruction] = []

    def swap(pa: int, pb: int) -> None:
        out.append(Gate("SWAP", (), (pa, pb)))
        la, lb = p2l[pa], p2l[pb]
        p2l[pa], p2l[pb] = lb, la
        l2p[la], l2p[lb] = pb, pa

    for segment in _segments(program.body):
        if not isinstance(segment, list):
            out.append(segment)
            continue
        swaps: list[tuple[int, int]] = []
        for instr in segment:
            if isinstance(instr, Measure):
                out.append(Measure(l2p[instr.qubit], instr.target))
                continue
            if len(instr.qubits) == 2:
                pa, pb = l2p[instr.qubits[0]], l2p[instr.qubits[1]]
                if not device.are_connected(pa, pb):
                    try:
                        path = device.shortest_path(pa, pb)
                    except DeviceModelError as exc:
                        raise CompilationError(f"unroutable program: {exc}") from None
                    for i in range(len(path) - 2):
                        swap(path[i], path[i + 1])
                        swaps.append((path[i], path[i + 1]))
            out.append(Gate(instr.name, instr.params, tuple(l2p[q] for q in instr.qubits)))
        if restore:
            for pa, pb in reversed(swaps):
                swap(pa, pb)
    return out, l2p


def _fold(body: list[Instruction]) -> list[Instruction]:
    """Merge runs of literal RZ on the same qubit; memory-referenced RZ is never folded."""
    out: list[Instruction | None] = []
    open_run: dict[int, int] = {}
    for instr in body:
        if isinstance(instr, Gate):
            if instr.name == "RZ" and not instr.is_parametric:
                q = instr.qubits[0]
                if q in open_run:
                    i = open_run[q]
                    out[i] = _rz(q, out[i].params[0] + instr.params[0])
                else:
                    open_run[q] = len(out)
                    out.append(instr)
                continue
            for q in instr.qubits:
                open_run.pop(q, None)
            out.append(instr)
        elif isinstance(instr, Measure):
            open_run.pop(instr.qubit, None)
            out.append(instr)
        else:
            open_run.clear()
            out.append(instr)
    folded: list[Instruction] = []
    for instr in out:
        if isinstance(instr, Gate) and instr.name == "RZ" and not instr.is_parametric:
            theta = canonical_angle(instr.params[0])
            if abs(theta) <= _ANGLE_TOL:
                continue
            instr = _rz(instr.qubits[0], theta)
        folded.append(instr)
    return folded


def nativize_with_layout(program: Program, device: DeviceModel) -> tuple[Program, tuple[int, ...]]:
    """Nativize and also return the final logical-to-physical qubit map."""
    for q in program.qubits:
        if q >= device.qubit_count:
            raise CompilationError(f"qubit {q} does not exist on a {device.qubit_count}-qubit device")
    routed, l2p = _route(program, device)
    lowered: list[Instruction] = []
    for instr in routed:
        if isinstance(instr, Gate):
            lowered.extend(_decompose(instr, device))
        else:
            lowered.append(instr)
    return program.with_body(_fold(lowered)), tuple(l2p)


def nativize(program: Program, device: DeviceModel) -> Program:
    """Rewrite ``program`` into native gates on physical qubits.

    The result is unitarily equivalent to the input up to a global phase and a
    trailing qubit permutation introduced by routing (see
    :func:`nativize_with_layout`).
    """
    return nativize_with_layout(program, device)[0]


def is_native(program: Program, device: DeviceModel) -> bool:
    for instr in program.body:
        if not isinstance(instr, Gate):
            continue
        if instr.name == "RZ":
            continue
        if instr.name == "RX":
            theta = instr.params[0]
            if isinstance(theta, MemoryRef) or rx_multiple(theta) in (None, 0):
                return False
            continue
        if instr.name == "CZ" and device.are_connected(*instr.qubits):
            continue
        return False
    return True
