"""Dense statevector kernels.

Qubit ``q`` is bit ``q`` of the basis-state index (qubit 0 least
significant). Kets are written qubit-0-leftmost, so ``|01>`` (q0=0, q1=1)
is index 2.
"""

from __future__ import annotations

import numpy as np

from ..gates import gate_matrix
from ..ir import Gate, Program

__all__ = [
    "zero_state",
    "basis_state",
    "apply_1q",
    "apply_2q",
    "apply_diagonal_cz",
    "probabilities",
    "simulate_statevector",
    "SimulationError",
    "MAX_QUBITS",
]

MAX_QUBITS = 20


class SimulationError(ValueError):
    pass


def zero_state(n: int) -> np.ndarray:
    return basis_state(n, 0)


def basis_state(n: int, index: int) -> np.ndarray:
    state = np.zeros(2**n, dtype=complex)
    state[index] = 1.0
    return state


def apply_1q(state: np.ndarray, n: int, q: int, u: np.ndarray) -> np.ndarray:
    # view the index as (high, bit q, low) and contract the middle axis
    psi = state.reshape(2 ** (n - q - 1), 2, 2**q)
    return np.einsum("ab,ibj->iaj", u, psi).reshape(-1)


def apply_2q(state: np.ndarray, n: int, qa: int, qb: int, u: np.ndarray) -> np.ndarray:
    """Apply a 4x4 ``u`` indexed ``bit_a + 2*bit_b``."""
    psi = state.reshape((2,) * n)
    ax_a, ax_b = n - 1 - qa, n - 1 - qb
    u4 = u.reshape(2, 2, 2, 2)  # out_b, out_a, in_b, in_a
    out = np.tensordot(u4, psi, axes=([2, 3], [ax_b, ax_a]))
    out = np.moveaxis(out, [0, 1], [ax_b, ax_a])
    return out.reshape(-1)


def apply_diagonal_cz(state: np.ndarray, qa: int, qb: int) -> np.ndarray:
    idx = np.arange(state.size)
    mask = ((idx >> qa) & 1) & ((idx >> qb) & 1)
    return np.where(mask.astype(bool), -state, state)


def probabilities(state: np.ndarray) -> np.ndarray:
    p = np.abs(state) ** 2
    return p / p.sum()


def simulate_statevector(program: Program, n_qubits: int | None = None) -> np.ndarray:
    """Exact final state of a measurement-free, literal-argument program started in |0...0>."""
    n = n_qubits if n_qubits is not None else max(program.qubits, default=-1) + 1
    if n > MAX_QUBITS:
        raise SimulationError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit simulator limit")
    state = zero_state(n)
    for instr in program.body:
        if not isinstance(instr, Gate):
            raise SimulationError(f"{type(instr).__name__} is not supported by the statevector oracle")
        if instr.is_parametric:
            raise SimulationError(f"gate {instr.name} has unbound parameter {instr.params[0]}; bind it first")
        if any(q >= n for q in instr.qubits):
            raise SimulationError(f"gate {instr.name} acts outside the {n}-qubit register")
        u = gate_matrix(instr.name, instr.params)
        if len(instr.qubits) == 1:
            state = apply_1q(state, n, instr.qubits[0], u)
        else:
            state = apply_2q(state, n, *instr.qubits, u)
    return state
