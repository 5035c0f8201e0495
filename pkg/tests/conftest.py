from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import strategies as st

from qcloud import default_device
from qcloud.device import DeviceModel
from qcloud.ir import Gate, MemoryDeclaration, MemoryRef, Program

ONE_Q = ("H", "X", "Y", "Z")
ROT = ("RX", "RY", "RZ")
TWO_Q = ("CNOT", "CZ", "SWAP")


@pytest.fixture(scope="session")
def device() -> DeviceModel:
    return default_device()


@pytest.fixture(scope="session")
def clean(device) -> DeviceModel:
    return device.noiseless()


def line_device(n: int = 3) -> DeviceModel:
    base = default_device()
    return DeviceModel(
        qubit_count=n,
        topology=tuple((i, i + 1) for i in range(n - 1)),
        durations=base.durations,
        t1=(20e-6,) * n,
        readout_confusion=((0.0, 0.0),) * n,
        reset_ground_population=(1.0,) * n,
        step_overheads=base.step_overheads,
        name=f"line{n}",
    )


angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


@st.composite
def gate_lists(draw, n_qubits=3, max_gates=12, parametric=False, slots=4):
    """Random gate sequences as Gate objects; parametric rotations reference ``theta[i]``."""
    n = draw(st.integers(1, n_qubits))
    gates = []
    for _ in range(draw(st.integers(1, max_gates))):
        kind = draw(st.sampled_from(("1q", "rot", "2q") if n > 1 else ("1q", "rot")))
        if kind == "1q":
            gates.append(Gate(draw(st.sampled_from(ONE_Q)), (), (draw(st.integers(0, n - 1)),)))
        elif kind == "rot":
            q = draw(st.integers(0, n - 1))
            if parametric and draw(st.booleans()):
                arg = MemoryRef("theta", draw(st.integers(0, slots - 1)))
            else:
                arg = draw(angles)
            gates.append(Gate(draw(st.sampled_from(ROT)), (arg,), (q,)))
        else:
            a, b = draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
            gates.append(Gate(draw(st.sampled_from(TWO_Q)), (), (a, b)))
    return n, gates


def as_program(gates, parametric=False, slots=4) -> Program:
    decls = (MemoryDeclaration("theta", "REAL", slots),) if parametric else ()
    return Program(decls, tuple(gates))


def oracle_gates(gates, values=None):
    out = []
    for g in gates:
        params = tuple(values.get(p, 0.0) if isinstance(p, MemoryRef) else p for p in g.params)
        out.append((g.name, params, g.qubits))
    return out


def rng(seed=0) -> np.random.Generator:
    return np.random.default_rng(seed)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
