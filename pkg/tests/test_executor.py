import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import as_program, gate_lists, oracle_gates
from oracles import HADAMARD, circuit_unitary, equal_up_to_phase, reported_one, reset_branch_tree, three_sigma
from qcloud.benchmark import generate_rpg, literal_program
from qcloud.compiler import BasicBlock, Goto, compile_program
from qcloud.executor import (
    ExecutionError,
    MemoryMap,
    MemoryMapError,
    execute,
    final_statevector,
    outcome_distribution,
    patch,
    simulate_statevector,
)
from qcloud.executor.statevector import SimulationError
from qcloud.ir import MemoryRef, parse

from test_ir import FIG2

BELL = "H 0\nCNOT 0 1"


def single_qubit_device(device, eps=(0.0, 0.0), ground=1.0):
    return device.with_readout(eps).with_ground_population(ground)


# -- patching ------------------------------------------------------------------------


def test_patch_fig2_values(device):
    binary = compile_program(parse(FIG2), device)
    patched = patch(binary, {"beta": [math.pi / 4], "gamma": [math.pi / 2]})
    assert patched.read(MemoryRef("beta", 0)) == math.pi / 4
    assert patched.read(MemoryRef("gamma", 0)) == math.pi / 2
    assert len(patched.data_memory) == binary.data_layout.total_size
    assert patched.binary is binary


def test_patch_empty_layout(device):
    patched = patch(compile_program(parse("H 0"), device), MemoryMap())
    assert patched.data_memory == b""


def test_patch_errors(device):
    binary = compile_program(parse(FIG2), device)
    with pytest.raises(MemoryMapError):
        patch(binary, {"beta": [0.1, 0.2]})
    with pytest.raises(MemoryMapError):
        patch(binary, {"delta": [0.1]})
    with pytest.raises(MemoryMapError):
        patch(binary, {"ro": [0.5]})
    with pytest.raises(MemoryMapError):
        patch(binary, {"beta": ["a"]})
    with pytest.raises(MemoryMapError):
        patch(binary, {"beta": [math.inf]})


def test_defaulted_slots(device):
    binary = compile_program(parse(FIG2), device)
    patched = patch(binary, {"beta": [0.3]})
    assert patched.defaulted == (MemoryRef("gamma", 0),)
    assert patched.read(MemoryRef("gamma", 0)) == 0.0


def test_memory_map_json_round_trip():
    mm = MemoryMap.from_json('{"theta": [0.5, 1.5], "flag": 1}')
    assert MemoryMap.from_json(__import__("json").dumps(mm.to_dict())) == mm


# -- statevector ------------------------------------------------------------------------


def test_statevector_examples():
    assert np.allclose(simulate_statevector(parse("H 0")), [1 / math.sqrt(2)] * 2)
    bell = simulate_statevector(parse(BELL))
    assert np.allclose(bell, np.array([1, 0, 0, 1]) / math.sqrt(2))


def test_statevector_rejects_measurement():
    with pytest.raises(SimulationError):
        simulate_statevector(parse("DECLARE ro BIT[1]\nMEASURE 0 ro[0]"))
    with pytest.raises(SimulationError):
        simulate_statevector(parse("DECLARE t REAL[1]\nRZ(t[0]) 0"))


@settings(max_examples=150, deadline=None)
@given(gate_lists(n_qubits=3, max_gates=20))
def test_statevector_matches_oracle_and_norm(case):
    n, gates = case
    state = simulate_statevector(as_program(gates), n)
    assert abs(np.linalg.norm(state) - 1) < 1e-10
    assert np.max(np.abs(state - circuit_unitary(oracle_gates(gates), n)[:, 0])) < 1e-10


# -- execution --------------------------------------------------------------------------


def test_deterministic_flip(device):
    dev = device.noiseless()
    report = execute(patch(compile_program(parse("DECLARE ro BIT[1]\nX 0\nMEASURE 0 ro[0]"), dev)), dev, 500, seed=1)
    assert report.bits.shape == (500, 1) and report.bits.all()
    assert all(len(s.bits) == 1 for s in report.shots)


def test_same_seed_same_bits(device):
    binary = compile_program(parse("DECLARE ro BIT[2]\nH 0\nCNOT 0 1\nMEASURE 0 ro[0]\nMEASURE 1 ro[1]"), device)
    a = execute(patch(binary), device, 1000, seed=5)
    b = execute(patch(binary), device, 1000, seed=5)
    assert np.array_equal(a.bits, b.bits) and a.to_json() == b.to_json()


def test_confusion_frequency(device):
    dev = single_qubit_device(device, (0.07, 0.0))
    shots = 100_000
    report = execute(patch(compile_program(parse("DECLARE ro BIT[1]\nMEASURE 0 ro[0]"), dev)), dev, shots, seed=11)
    assert abs(report.bits.mean() - 0.07) < three_sigma(0.07, shots)


def test_perfect_single_round_reset(device):
    dev = single_qubit_device(device, (0.0, 0.0), ground=0.5)
    binary = compile_program(parse("DECLARE ro BIT[1]\nRESET\nMEASURE 0 ro[0]"), dev, reset_rounds=1)
    assert not execute(patch(binary), dev, 2000, seed=2, reset_mode="active").bits.any()
    passive = execute(patch(binary), dev, 2000, seed=2, reset_mode="passive").bits.mean()
    assert abs(passive - 0.5) < three_sigma(0.5, 2000)


@pytest.mark.parametrize("rounds", [1, 2, 3, 4])
def test_reset_residual_matches_branch_tree(device, rounds):
    eps, p0, shots = 0.05, 0.5, 100_000
    dev = single_qubit_device(device, (eps, eps), ground=1 - p0)
    binary = compile_program(parse("DECLARE ro BIT[1]\nRESET\nMEASURE 0 ro[0]"), dev, reset_rounds=rounds)
    expected = reported_one(reset_branch_tree(p0, eps, eps, rounds), eps, eps)
    freq = execute(patch(binary), dev, shots, seed=rounds, reset_mode="active").bits.mean()
    assert abs(freq - expected) < three_sigma(expected, shots)
    exact = outcome_distribution(patch(binary), dev, "active")[1]
    assert exact == pytest.approx(expected, abs=1e-12)


def test_reset_residual_converges_geometrically():
    # deviation from the readout floor shrinks by (eps1 - eps0) per round
    eps0, eps1, p0 = 0.02, 0.10, 0.5
    floor = eps0 / (1 - eps1 + eps0)
    deviations = [reset_branch_tree(p0, eps0, eps1, r) - floor for r in range(1, 6)]
    ratios = np.array(deviations[1:]) / np.array(deviations[:-1])
    assert np.allclose(ratios, eps1 - eps0)
    # symmetric error reaches the floor after a single round
    assert reset_branch_tree(0.5, 0.02, 0.02, 1) == pytest.approx(reset_branch_tree(0.5, 0.02, 0.02, 3))


def test_per_shot_interpreter_agrees_with_reset_oracle(device):
    eps, p0, shots = 0.05, 0.5, 20_000
    dev = single_qubit_device(device, (eps, eps), ground=1 - p0)
    binary = compile_program(parse("DECLARE ro BIT[1]\nRESET\nMEASURE 0 ro[0]"), dev)
    report = execute(patch(binary), dev, shots, seed=9, reset_mode="active", force_per_shot=True)
    assert not report.vectorized
    expected = reported_one(reset_branch_tree(p0, eps, eps, 3), eps, eps)
    assert abs(report.bits.mean() - expected) < three_sigma(expected, shots)


def test_fast_and_per_shot_paths_agree(device):
    program, spec = generate_rpg(3, seed=4, parametric=True)
    binary = compile_program(program, device)
    patched = patch(binary, spec.memory())
    shots = 20_000
    exact = outcome_distribution(patched, device)
    for force in (False, True):
        report = execute(patched, device, shots, seed=3, force_per_shot=force)
        assert report.vectorized is not force
        freq = np.bincount(report.outcome_indices(), minlength=exact.size) / shots
        assert np.all(np.abs(freq - exact) < [three_sigma(p, shots) + 1e-9 for p in exact])
        assert np.allclose(report.durations, report.durations[0])


def test_reset_timing(device):
    binary = compile_program(parse("DECLARE ro BIT[1]\nRESET\nMEASURE 0 ro[0]"), device)
    passive = execute(patch(binary), device, 10, seed=0, reset_mode="passive").durations[0]
    active = execute(patch(binary), device, 10, seed=0, reset_mode="active").durations[0]
    capture = device.durations["readout_capture"]
    assert passive - capture == pytest.approx(100e-6, rel=1e-12)
    assert 9e-6 <= active - capture <= 12e-6
    assert active - capture == pytest.approx(3 * (2e-6 + 1e-6 + 60e-9), rel=1e-12)


def test_timing_additivity(device):
    binary = compile_program(parse("DECLARE ro BIT[2]\nH 0\nCNOT 0 1\nMEASURE 0 ro[0]\nMEASURE 1 ro[1]"), device)
    one = execute(patch(binary), device, 1, seed=0)
    for n in (2, 10, 1000):
        many = execute(patch(binary), device, n, seed=0)
        assert many.simulated_total - one.simulated_total == pytest.approx((n - 1) * one.durations[0], rel=1e-12)
    assert one.step_overhead == pytest.approx(0.023)


def test_asap_body_duration(device):
    dev = device.noiseless()
    binary = compile_program(parse("DECLARE ro BIT[2]\nX 0\nX 0\nX 1\nMEASURE 0 ro[0]\nMEASURE 1 ro[1]"), dev)
    d = execute(patch(binary), dev, 1, seed=0).durations[0]
    rx = dev.durations["rx_pulse"]
    # X is one pi pulse; qubit 0 carries two in series, qubit 1 one in parallel
    assert d == pytest.approx(dev.passive_reset_time([0, 1]) + 2 * rx + dev.durations["readout_capture"], rel=1e-12)


def test_patch_equals_recompile_bitstreams(device):
    program, spec = generate_rpg(3, seed=12, parametric=True)
    binary = compile_program(program, device)
    literal = compile_program(literal_program(program, spec.memory()), device)
    a = execute(patch(binary, spec.memory()), device, 5000, seed=99)
    b = execute(patch(literal), device, 5000, seed=99)
    assert np.array_equal(a.bits, b.bits)


def test_final_statevector_logical(device):
    binary = compile_program(parse("H 0\nCNOT 0 3"), device)
    state = final_statevector(patch(binary), device)
    expected = circuit_unitary([("H", (), (0,)), ("CNOT", (), (0, 3))], 4)[:, 0]
    assert equal_up_to_phase(state, expected) < 1e-10


def test_execution_errors(device):
    binary = compile_program(parse("DECLARE ro BIT[1]\nMEASURE 0 ro[0]"), device)
    with pytest.raises(ExecutionError):
        execute(patch(binary), device, 0)
    with pytest.raises(ExecutionError):
        execute(patch(binary), device, 10, reset_mode="active")
    with pytest.raises(ExecutionError):
        execute(patch(binary), device, 10, reset_mode="sometimes")


def test_malformed_cfg_rejected(device):
    binary = compile_program(parse("DECLARE ro BIT[1]\nMEASURE 0 ro[0]"), device)
    looping = dataclasses.replace(binary, instruction_memory=(BasicBlock("body", (), Goto("body")),))
    with pytest.raises(ExecutionError):
        execute(patch(looping), device, 1)


def test_mid_circuit_feedback(device):
    dev = device.noiseless()
    source = """DECLARE ro BIT[2]
X 0
MEASURE 0 ro[0]
JUMP-UNLESS @skip ro[0]
X 1
LABEL @skip
MEASURE 1 ro[1]"""
    report = execute(patch(compile_program(parse(source), dev)), dev, 200, seed=0)
    assert not report.vectorized
    assert report.bits.all()


def test_report_json(device):
    binary = compile_program(parse("DECLARE ro BIT[2]\nX 1\nMEASURE 0 ro[0]\nMEASURE 1 ro[1]"), device.noiseless())
    report = execute(patch(binary), device.noiseless(), 3, seed=0)
    doc = report.to_json()
    assert doc["readout"] == ["ro[0]", "ro[1]"] and doc["bitstrings"] == ["01"] * 3
    assert report.counts() == {"01": 3}
    assert list(report.outcome_indices()) == [2, 2, 2]
    assert report.packed_rows() == bytes([2, 2, 2])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_outcome_distribution_normalized(seed):
    program, spec = generate_rpg(3, seed=seed)
    dev = __import__("qcloud").default_device()
    dist = outcome_distribution(patch(compile_program(program, dev), spec.memory()), dev)
    assert dist.sum() == pytest.approx(1.0, abs=1e-12) and (dist >= -1e-15).all()
