import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings

from conftest import as_program, gate_lists, line_device, oracle_gates
from oracles import HADAMARD, circuit_unitary, equal_up_to_phase, ry, rx
from qcloud.compiler import (
    BinaryFormatError,
    CompilationError,
    ShiftPhase,
    compile_count,
    compile_program,
    deserialize,
    euler_decompose,
    euler_unitary,
    is_native,
    lower_reset,
    nativize,
    nativize_with_layout,
    serialize,
)
from qcloud.compiler.euler import canonical_angle
from qcloud.ir import Gate, MemoryRef, parse

from test_ir import FIG2


def native_gates(program):
    return [(g.name, g.params, g.qubits) for g in program.body]


def physical_state(logical_state: np.ndarray, l2p, n_logical: int, n_phys: int) -> np.ndarray:
    out = np.zeros(2**n_phys, dtype=complex)
    for idx, amp in enumerate(logical_state):
        phys = 0
        for l in range(n_logical):
            phys |= ((idx >> l) & 1) << l2p[l]
        out[phys] = amp
    return out


def test_hadamard_lowering(device):
    native = nativize(parse("H 0"), device)
    assert [(g.name, g.params) for g in native.body] == [("RZ", (math.pi / 2,)), ("RX", (math.pi / 2,)), ("RZ", (math.pi / 2,))]
    assert equal_up_to_phase(circuit_unitary(native_gates(native), 1), HADAMARD) < 1e-12


def test_cnot_lowering(device):
    native = nativize(parse("CNOT 0 1"), device)
    assert is_native(native, device)
    assert sum(g.name == "CZ" for g in native.body) == 1
    expected = circuit_unitary([("CNOT", (), (0, 1))], 2)
    assert equal_up_to_phase(circuit_unitary(native_gates(native), 2), expected) < 1e-12


def test_routing_on_line():
    dev = line_device(3)
    program = parse("H 0\nH 1\nH 2\nCZ 0 2")
    native, l2p = nativize_with_layout(program, dev)
    assert all(dev.are_connected(*g.qubits) for g in native.body if g.name == "CZ")
    psi = circuit_unitary(oracle_gates(program.body), 3)[:, 0]
    phi = circuit_unitary(native_gates(native), 3)[:, 0]
    assert sorted(l2p) == [0, 1, 2] and tuple(l2p) != (0, 1, 2)
    assert equal_up_to_phase(phi, physical_state(psi, l2p, 3, 3)) < 1e-12


def test_disconnected_device_rejects():
    dev = line_device(3)
    from qcloud.device import DeviceModel

    split = DeviceModel(3, ((0, 1),), dev.durations, dev.t1, dev.readout_confusion, dev.reset_ground_population,
                        dev.step_overheads)
    with pytest.raises(CompilationError):
        nativize(parse("CZ 0 2"), split)
    with pytest.raises(CompilationError):
        nativize(parse("H 5"), split)


@settings(max_examples=150, deadline=None)
@given(gate_lists(n_qubits=3, max_gates=12))
def test_nativize_matches_unitary_oracle(case):
    n, gates = case
    dev = line_device(3)
    program = as_program(gates)
    native, l2p = nativize_with_layout(program, dev)
    assert is_native(native, dev)
    psi = circuit_unitary(oracle_gates(gates), n)[:, 0]
    phi = circuit_unitary(native_gates(native), 3)[:, 0]
    assert equal_up_to_phase(phi, physical_state(psi, l2p, n, 3)) < 1e-9


@settings(max_examples=100, deadline=None)
@given(gate_lists(n_qubits=3, max_gates=12))
def test_nativize_idempotent(case):
    _, gates = case
    dev = line_device(3)
    once = nativize(as_program(gates), dev)
    assert nativize(once, dev) == once


def test_parametric_rz_not_folded(device):
    program = parse("DECLARE t REAL[1]\nRZ(pi/4) 0\nRZ(t[0]) 0\nRZ(pi/4) 0")
    body = nativize(program, device).body
    assert [g.params[0] for g in body] == [math.pi / 4, MemoryRef("t", 0), math.pi / 4]
    merged = nativize(parse("RZ(pi/4) 0\nRZ(pi/4) 0\nRZ(2*pi) 0"), device).body
    assert [g.params[0] for g in merged] == [pytest.approx(math.pi / 2)]


# -- euler ------------------------------------------------------------------------


def test_euler_examples():
    assert euler_decompose(ry(-math.pi / 2)) == pytest.approx((0.0, -math.pi / 2, 0.0), abs=1e-12)
    assert euler_decompose(rx(math.pi / 2)) == pytest.approx((math.pi / 2, math.pi / 2, -math.pi / 2), abs=1e-12)


def test_euler_reconstructs(rng_seed=7):
    rng = np.random.default_rng(rng_seed)
    for _ in range(200):
        a, b, c = rng.uniform(-math.pi, math.pi, 3)
        u = euler_unitary(a, b, c)
        angles = euler_decompose(u)
        assert all(-math.pi < x <= math.pi for x in angles)
        assert equal_up_to_phase(euler_unitary(*angles), u) < 1e-10


def test_canonical_angle_ties():
    assert canonical_angle(-math.pi) == math.pi
    assert canonical_angle(3 * math.pi) == pytest.approx(math.pi)
    assert canonical_angle(0.5 + 4 * math.pi) == pytest.approx(0.5)


# -- reset CFG ----------------------------------------------------------------------


def reference_reset_template() -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_edges_from([("h", "M"), ("M", "X"), ("M", "I"), ("X", "M"), ("I", "M"), ("X", "exit"), ("I", "exit")])
    return g


def cfg_graph(cfg) -> nx.DiGraph:
    g = nx.DiGraph()
    for block in cfg.blocks:
        for succ in block.successors():
            g.add_edge(block.id, succ)
    return g


def test_reset_cfg_single_qubit(device):
    (cfg,) = lower_reset(parse("RESET\nH 0"), device, rounds=3)
    assert cfg.rounds == 3 and len(cfg.blocks) == 4
    assert {b.id for b in cfg.blocks} == {cfg.header, cfg.measurement, cfg.idle, cfg.feedback}
    assert nx.is_isomorphic(cfg_graph(cfg), reference_reset_template())


def test_reset_cfgs_precede_body(device):
    binary = compile_program(parse("RESET\nH 0\nCNOT 0 1"), device)
    assert [c.qubit for c in binary.reset_cfgs] == [0, 1]
    for cfg in binary.reset_cfgs:
        assert nx.is_isomorphic(cfg_graph(cfg), reference_reset_template())
        assert cfg.exit == binary.body_entry
    ids = [b.id for b in binary.instruction_memory]
    assert ids.index(binary.body_entry) == 8


def test_reset_rounds_validated(device):
    with pytest.raises(CompilationError):
        compile_program(parse("RESET\nH 0"), device, reset_rounds=0)


# -- binaries -------------------------------------------------------------------------


def test_fig2_layout(device):
    binary = compile_program(parse(FIG2), device)
    regions = {e.name: e for e in binary.data_layout.entries}
    assert regions["beta"].size == 8 and regions["gamma"].size == 8
    assert regions["ro"].kind == "BIT" and regions["ro"].length == 2
    slots = binary.parametric_slots
    assert len(slots) >= 2 and {MemoryRef("beta", 0), MemoryRef("gamma", 0)} <= set(slots)
    assert [str(e.target) for e in binary.readout_layout] == ["ro[0]", "ro[1]"]


def test_compile_is_deterministic(device):
    a = serialize(compile_program(parse(FIG2), device))
    b = serialize(compile_program(parse(FIG2), device))
    assert a == b and a[:4] == b"PQB1"
    assert deserialize(a) == compile_program(parse(FIG2), device)


@settings(max_examples=60, deadline=None)
@given(gate_lists(n_qubits=3, max_gates=10, parametric=True))
def test_serialize_round_trip(case):
    _, gates = case
    binary = compile_program(as_program(gates, parametric=True).with_body(gates), line_device(3))
    assert deserialize(serialize(binary)) == binary


def test_reset_binary_round_trip(device):
    binary = compile_program(parse("DECLARE ro BIT[1]\nRESET\nX 0\nMEASURE 0 ro[0]"), device)
    assert deserialize(binary.to_bytes()) == binary
    dump = binary.to_json()
    assert {"instruction_memory", "waveform_memory", "data_layout", "readout_layout", "reset_cfgs"} <= set(dump)


def test_corrupt_binaries_rejected(device):
    data = serialize(compile_program(parse(FIG2), device))
    for bad in (b"XXXX" + data[4:], data[:-3], data + b"\0"):
        with pytest.raises(BinaryFormatError):
            deserialize(bad)


def test_compile_counter(device):
    before = compile_count()
    compile_program(parse("H 0"), device)
    compile_program(parse("H 0"), device)
    assert compile_count() - before == 2


def test_shift_phase_references_memory(device):
    binary = compile_program(parse("DECLARE t REAL[1]\nRX(t[0]) 0"), device)
    shifts = [i for b in binary.instruction_memory for i in b.instructions if isinstance(i, ShiftPhase)]
    assert any(i.is_parametric for i in shifts)
