"""Unitary matrices for the gate set.

Two-qubit matrices act on ``(first, second)`` with the first listed qubit
as the *least* significant index bit, matching the simulator convention.
"""

from __future__ import annotations

import numpy as np

__all__ = ["rx", "ry", "rz", "gate_matrix", "PAULI", "H", "CNOT", "CZ", "SWAP"]

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

# index = b_first + 2 * b_second
CNOT = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


_FIXED = {"H": H, "X": X, "Y": Y, "Z": Z, "CNOT": CNOT, "CZ": CZ, "SWAP": SWAP}
_ROTATIONS = {"RX": rx, "RY": ry, "RZ": rz}


def gate_matrix(name: str, params=()) -> np.ndarray:
    if name in _ROTATIONS:
        (theta,) = params
        return _ROTATIONS[name](float(theta))
    return _FIXED[name]
