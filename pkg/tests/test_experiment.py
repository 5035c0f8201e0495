import json
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import PAULI, circuit_unitary, embed, equal_up_to_phase, symmetrized_lambda, symmetrized_z
from qcloud.compiler import compile_count
from qcloud.executor import simulate_statevector
from qcloud.experiment import (
    BELL_PROGRAM,
    H2_ANSATZ,
    Experiment,
    ExperimentError,
    ExperimentSetting,
    ExperimentSpec,
    LinearInversionTomography,
    PauliObservable,
    ReadoutCalibration,
    basis_change_suffix,
    bell_tomography,
    build_experiment_program,
    calibrate,
    h2_hamiltonian,
    load_h2_coefficients,
    pauli_expectations,
    pauli_label_observable,
    run_experiment,
    state_fidelity,
    tomography_linear_inversion,
    two_qubit_pauli_labels,
)
from qcloud.experiment.readout import symmetrized_error
from qcloud.ir import MemoryRef, parse


def oracle_pauli(label: str) -> np.ndarray:
    """Matrix of a qubit-0-leftmost label, built without the library."""
    full = np.eye(1, dtype=complex)
    for p in reversed(label):
        full = np.kron(full, PAULI[p])
    return full


def one_qubit(device, eps):
    return device.with_readout(eps)


# -- Pauli observables and basis changes --------------------------------------------


def test_observable_parsing():
    obs = PauliObservable.parse("X0*Y1")
    assert obs.support == (0, 1) and str(obs) == "X0*Y1"
    assert np.allclose(obs.matrix(2), oracle_pauli("XY"))
    with pytest.raises(ValueError):
        PauliObservable.parse("Q0")
    with pytest.raises(ValueError):
        PauliObservable({})


def test_basis_suffix_x():
    _, values = basis_change_suffix(PauliObservable.parse("X0"))
    assert [values[MemoryRef(f"measurement_{s}", 0)] for s in ("alpha", "beta", "gamma")] == pytest.approx(
        [0.0, -math.pi / 2, 0.0], abs=1e-12)


def test_basis_suffix_yx():
    _, values = basis_change_suffix(PauliObservable.parse("Y0*X1"))
    get = lambda j: [values[MemoryRef(f"measurement_{s}", j)] for s in ("alpha", "beta", "gamma")]
    assert get(0) == pytest.approx([math.pi / 2, math.pi / 2, -math.pi / 2], abs=1e-12)
    assert get(1) == pytest.approx([0.0, -math.pi / 2, 0.0], abs=1e-12)


@pytest.mark.parametrize("label", ["X", "Y", "Z"])
def test_basis_suffix_rotates_onto_z(label):
    gates, values = basis_change_suffix(PauliObservable({0: label}), qubits=[0])
    bound = [(g.name, tuple(values.get(p, p) for p in g.params), g.qubits) for g in gates]
    u = circuit_unitary(bound, 1)
    assert np.allclose(u.conj().T @ PAULI["Z"] @ u, PAULI[label], atol=1e-12)


# -- symmetrisation and calibration ------------------------------------------------------


def test_symmetrization_oracle_closed_form():
    assert symmetrized_z(0.02, 0.10) == pytest.approx(1 - 2 * symmetrized_error(0.02, 0.10))
    assert symmetrized_z(0.02, 0.10) == pytest.approx(0.88)


def test_symmetrized_and_corrected_z(device):
    dev = one_qubit(device, (0.02, 0.10))
    spec = ExperimentSpec(parse("RZ(0.0) 0"), (ExperimentSetting.parse("Z0"),), shots=100_000)
    (est,) = run_experiment(spec, dev, seed=21)
    assert abs(est.symmetrized_mean - 0.88) < 3 * est.symmetrized_se
    assert abs(est.corrected_mean - 1.0) < 3 * est.corrected_se
    assert est.patterns == 2 and est.shots == 100_000


def test_lambda_single_qubit(device):
    dev = one_qubit(device, (0.06, 0.06))
    cal = calibrate(ExperimentSetting.parse("Z0"), dev, shots=100_000, seed=3)
    assert abs(cal.lambda_ - 0.88) < 3 * cal.lambda_se_


def test_lambda_product_channel(device):
    eps = [(0.02, 0.10), (0.05, 0.03)]
    dev = device.with_readout(eps + [(0.0, 0.0)] * (device.qubit_count - 2))
    expected = symmetrized_lambda(eps)
    assert expected == pytest.approx((1 - 2 * 0.06) * (1 - 2 * 0.04))
    cal = calibrate(ExperimentSetting.parse("Z0*Z1"), dev, shots=100_000, seed=8)
    assert abs(cal.lambda_ - expected) < 3 * cal.lambda_se_
    exact = calibrate(ExperimentSetting.parse("Z0*Z1"), dev, shots=None)
    assert exact.lambda_ == pytest.approx(expected, abs=1e-12)


def test_two_qubit_flip_patterns(device):
    spec = ExperimentSpec(parse("H 0\nCNOT 0 1"), (ExperimentSetting.parse("Z0*Z1"),), shots=4000)
    exp = Experiment(spec, device, seed=0)
    acq = exp._acquire({}, {0: "Z", 1: "Z"}, (0, 1), False, 0)
    assert acq.patterns == [0, 1, 2, 3]
    assert [b.shape[0] for b in acq.bits] == [1000] * 4


def test_unbiased_and_root_n(device):
    dev = one_qubit(device, (0.05, 0.05))
    spec_for = lambda shots: ExperimentSpec(parse("RX(pi/3) 0"), (ExperimentSetting.parse("Z0"),), shots=shots)
    truth = math.cos(math.pi / 3)
    ses = []
    for shots in (1_000, 10_000, 100_000):
        (est,) = run_experiment(spec_for(shots), dev, seed=shots)
        assert abs(est.corrected_mean - truth) < 3 * est.corrected_se
        ses.append(est.corrected_se)
    ratios = np.array(ses[:-1]) / np.array(ses[1:])
    assert np.allclose(ratios, math.sqrt(10), rtol=0.1)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.3), st.floats(0.0, 0.3), st.floats(-math.pi, math.pi))
def test_correction_inflates_error(device, eps0, eps1, angle):
    dev = one_qubit(device, (eps0, eps1))
    spec = ExperimentSpec(parse(f"RX({angle!r}) 0"), (ExperimentSetting.parse("Z0"),), shots=2000)
    (est,) = run_experiment(spec, dev, seed=1)
    if "lambda_zero" not in est.flags and abs(est.calibration) < 1:
        assert est.corrected_se >= est.symmetrized_se


def test_lambda_zero_flagged(device):
    dev = one_qubit(device, (0.5, 0.5))
    spec = ExperimentSpec(parse("RZ(0.0) 0"), (ExperimentSetting.parse("Z0"),), shots=None)
    (est,) = run_experiment(spec, dev)
    assert "lambda_zero" in est.flags
    with pytest.raises(ZeroDivisionError):
        calibrate(ExperimentSetting.parse("Z0"), dev, shots=None)


def test_readout_calibration_estimator():
    cal = ReadoutCalibration().fit(np.r_[np.ones(94), -np.ones(6)])
    assert cal.lambda_ == pytest.approx(0.88)
    corrected = cal.transform([[0.44, 0.0]])
    assert corrected[0, 0] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        ReadoutCalibration().fit([0.3])


# -- framework structure -----------------------------------------------------------------


def test_one_compile_per_experiment(device):
    spec = ExperimentSpec(parse(BELL_PROGRAM), tuple(ExperimentSetting(pauli_label_observable(l))
                                                    for l in two_qubit_pauli_labels()), shots=200)
    before = compile_count()
    run_experiment(spec, device, seed=0)
    assert compile_count() - before == 1


def test_experiment_program_layout():
    spec = ExperimentSpec(parse("DECLARE t REAL[1]\nRX(t[0]) 0\nCNOT 0 1"), (ExperimentSetting.parse("X0*Y1"),))
    program = build_experiment_program(spec)
    names = [d.name for d in program.declarations]
    assert names == ["t", "measurement_alpha", "measurement_beta", "measurement_gamma", "symmetrization",
                     "calibration", "ro"]
    assert str(program).splitlines()[7] == "JUMP-WHEN @experiment_readout calibration[0]"


def test_spec_validation():
    with pytest.raises(ExperimentError):
        ExperimentSpec(parse("H 0"), (ExperimentSetting.parse("Z1"),))
    with pytest.raises(ExperimentError):
        ExperimentSpec(parse("H 0"), (), shots=10)
    with pytest.raises(ExperimentError):
        ExperimentSpec(parse("H 0"), (ExperimentSetting.parse("Z0"),), shots=0)
    with pytest.raises(ExperimentError):
        ExperimentSetting.parse("Z0*Z1", ["X0"])
    clash = ExperimentSpec(parse("DECLARE ro BIT[1]\nH 0"), (ExperimentSetting.parse("Z0"),))
    with pytest.raises(ExperimentError):
        build_experiment_program(clash)


def test_spec_json_round_trip():
    spec = ExperimentSpec(parse("DECLARE t REAL[1]\nRX(t[0]) 0\nH 1"),
                          (ExperimentSetting.parse("Z0*Z1", ["Z0"]), ExperimentSetting.parse("X1")),
                          shots=500, reset_mode="active")
    again = ExperimentSpec.from_json(spec.to_json())
    assert again == spec
    assert json.loads(spec.to_json())["settings"][1] == {"observable": "X1", "derived": []}


def test_sweep_shares_calibration(device):
    spec = ExperimentSpec(parse("DECLARE t REAL[1]\nRX(t[0]) 0"), (ExperimentSetting.parse("Z0"),), shots=1000)
    exp = Experiment(spec, device, seed=4)
    results = exp.sweep([{"t": [0.0]}, {"t": [math.pi]}], seed=4)
    assert results[0][0].calibration == results[1][0].calibration
    assert results[0][0].corrected_mean > 0.9 and results[1][0].corrected_mean < -0.9


def test_active_reset_experiment(device):
    spec = ExperimentSpec(parse("X 0"), (ExperimentSetting.parse("Z0"),), shots=None, reset_mode="active")
    (est,) = run_experiment(spec, device.with_ground_population(0.6))
    assert est.corrected_mean < -0.95


# -- tomography ---------------------------------------------------------------------------


BELL_EXACT = {"XX": 1.0, "YY": -1.0, "ZZ": 1.0}


def test_tomography_exact_bell():
    values = {lab: BELL_EXACT.get(lab, 0.0) for lab in two_qubit_pauli_labels()}
    rho = tomography_linear_inversion(values)
    phi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert np.allclose(rho, np.outer(phi, phi.conj()), atol=1e-15)
    assert state_fidelity(phi, rho) == pytest.approx(1.0)


def random_density(seed: int, n: int = 2) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_tomography_inverts_pauli_expansion(seed):
    rho = random_density(seed)
    expectations = {lab: float(np.real(np.trace(oracle_pauli(lab) @ rho))) for lab in two_qubit_pauli_labels()}
    estimate = LinearInversionTomography(2).fit(expectations)
    assert np.allclose(estimate.density_matrix_, rho, atol=1e-12)
    again = pauli_expectations(estimate.density_matrix_)
    assert all(again[lab] == pytest.approx(v, abs=1e-12) for lab, v in expectations.items())


def test_fidelity_mixed_states():
    rho, sigma = random_density(1), random_density(2)
    assert state_fidelity(rho, rho) == pytest.approx(1.0, abs=1e-8)
    assert 0 <= state_fidelity(rho, sigma) <= 1


def test_bell_pipeline_matches_statevector(device):
    result = bell_tomography(device.noiseless(), shots=4000, seed=5)
    state = simulate_statevector(parse(BELL_PROGRAM))
    for lab, est in result.estimates.items():
        truth = float(np.real(np.vdot(state, oracle_pauli(lab) @ state)))
        assert abs(est.corrected_mean - truth) <= max(3 * est.corrected_se, 1e-12)
    assert result.compiles == 1


# -- VQE ------------------------------------------------------------------------------------


def test_ansatz_reference_state():
    state = simulate_statevector(parse(H2_ANSATZ).bind({MemoryRef("theta", 0): 0.0}))
    assert equal_up_to_phase(state, np.eye(4)[2]) < 1e-12  # |01>: qubit 1 excited, index 2


@pytest.mark.parametrize("theta", [0.3, -1.1, 2.0])
def test_ansatz_is_xy_exponential(theta):
    state = simulate_statevector(parse(H2_ANSATZ).bind({MemoryRef("theta", 0): 2 * theta}))
    generator = oracle_pauli("XY")
    expected = scipy.linalg.expm(-1j * theta * generator) @ np.eye(4)[2]
    assert equal_up_to_phase(state, expected) < 1e-12


def test_hamiltonian_terms():
    g = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
    h = g[0] * np.eye(4) + g[1] * oracle_pauli("ZI") + g[2] * oracle_pauli("IZ") + g[3] * oracle_pauli("ZZ") \
        + g[4] * oracle_pauli("YY") + g[5] * oracle_pauli("XX")
    assert np.allclose(h2_hamiltonian(g), h)


def test_coefficient_file(tmp_path):
    rows = load_h2_coefficients()
    assert len(rows) >= 5 and any(abs(r.bond_length - 0.75) < 1e-12 for r in rows)
    bad = tmp_path / "bad.csv"
    bad.write_text("R,g0\n0.7,1\n")
    with pytest.raises(ValueError):
        load_h2_coefficients(bad)
    good = tmp_path / "good.csv"
    good.write_text("# comment\nR_angstrom,g0,g1,g2,g3,g4,g5\n0.7,1,0,0,0,0,0\n")
    assert load_h2_coefficients(good)[0].g == (1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
