"""Pauli-setting experiments, readout mitigation, tomography and variational drivers."""

from .framework import (
    Experiment,
    ExperimentError,
    ExperimentSetting,
    ExperimentSpec,
    ExpectationEstimate,
    basis_angles,
    basis_change_suffix,
    build_experiment_program,
    calibrate,
    run_experiment,
    symmetrize_and_estimate,
)
from .drivers import (
    BELL_PROGRAM,
    H2_ANSATZ,
    H2Coefficients,
    QAOAResult,
    TomographyResult,
    VQECurve,
    bell_tomography,
    h2_hamiltonian,
    load_h2_coefficients,
    maxcut_qaoa,
    vqe_h2,
)
from .pauli import PauliObservable, expectation, pauli_matrix, two_qubit_pauli_labels
from .readout import ReadoutCalibration, symmetrized_error
from .tomography import (
    LinearInversionTomography,
    pauli_expectations,
    pauli_label_observable,
    state_fidelity,
    tomography_linear_inversion,
)

__all__ = [name for name in dir() if not name.startswith("_")]
