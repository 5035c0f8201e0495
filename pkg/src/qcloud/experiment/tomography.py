"""Linear-inversion state tomography and state fidelities."""

from __future__ import annotations

from itertools import product
from typing import Mapping

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator

from .pauli import PauliObservable, pauli_matrix

__all__ = [
    "LinearInversionTomography",
    "tomography_linear_inversion",
    "pauli_label_observable",
    "pauli_expectations",
    "state_fidelity",
]


def pauli_label_observable(label: str) -> PauliObservable:
    """``"XI"`` -> X on qubit 0 (labels are written qubit-0-leftmost)."""
    return PauliObservable({q: p for q, p in enumerate(label) if p != "I"})


def _labels(n: int) -> list[str]:
    return ["".join(p) for p in product("IXYZ", repeat=n)]


def _matrix(label: str) -> np.ndarray:
    return pauli_matrix({q: p for q, p in enumerate(label) if p != "I"}, len(label))


class LinearInversionTomography(BaseEstimator):
    """``rho = 2**-n * sum_P <P> P`` over all n-qubit Pauli strings, with ``<I...I> = 1``.

    ``fit`` takes a mapping from labels such as ``"XY"`` (or observable
    strings such as ``"X0*Y1"``) to expectation values and requires every
    non-identity label. The estimate is Hermitian with unit trace but is
    not projected onto positive matrices; ``min_eigenvalue_`` reports how
    far from physical it is.
    """

    def __init__(self, n_qubits: int = 2):
        self.n_qubits = n_qubits

    def fit(self, X: Mapping[str, float], y=None):
        n = self.n_qubits
        if n < 1:
            raise ValueError("n_qubits must be positive")
        values = {}
        for key, value in dict(X).items():
            label = key if set(key) <= set("IXYZ") and len(key) == n else _label_from_observable(key, n)
            values[label] = float(value)
        labels = _labels(n)
        missing = [lab for lab in labels[1:] if lab not in values]
        if missing:
            raise ValueError(f"missing Pauli expectations: {missing}")
        values[labels[0]] = 1.0
        rho = sum(values[lab] * _matrix(lab) for lab in labels) / 2**n
        rho = 0.5 * (rho + rho.conj().T)
        self.density_matrix_ = rho
        self.eigenvalues_ = np.linalg.eigvalsh(rho)
        self.min_eigenvalue_ = float(self.eigenvalues_[0])
        self.is_physical_ = self.min_eigenvalue_ >= -1e-12
        return self

    def fidelity(self, target) -> float:
        return state_fidelity(target, self.density_matrix_)


def _label_from_observable(text: str, n: int) -> str:
    obs = PauliObservable.parse(text)
    label = ["I"] * n
    for q, p in obs.terms:
        if q >= n:
            raise ValueError(f"{text} acts outside {n} qubits")
        label[q] = p
    return "".join(label)


def tomography_linear_inversion(expectations: Mapping[str, float], n_qubits: int = 2) -> np.ndarray:
    return LinearInversionTomography(n_qubits).fit(expectations).density_matrix_


def pauli_expectations(rho: np.ndarray) -> dict[str, float]:
    n = int(np.log2(rho.shape[0]))
    return {lab: float(np.real(np.trace(rho @ _matrix(lab)))) for lab in _labels(n)[1:]}


def state_fidelity(target, rho: np.ndarray) -> float:
    """Uhlmann fidelity; ``target`` may be a statevector or a density matrix."""
    target = np.asarray(target, dtype=complex)
    if target.ndim == 1:
        return float(np.real(np.vdot(target, rho @ target)))
    root = scipy.linalg.sqrtm(target)
    return float(np.real(np.trace(scipy.linalg.sqrtm(root @ rho @ root))) ** 2)
