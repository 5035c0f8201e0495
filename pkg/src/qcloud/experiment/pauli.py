"""Pauli-string observables and the bit-order convention.

Strings such as ``"X0*Y1"`` name a qubit per factor. Operator matrices use
the simulator convention: qubit 0 is the least significant index bit, so
the matrix of ``A0*B1`` is ``kron(B, A)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce
from itertools import product
from typing import Mapping

import numpy as np

from ..gates import PAULI

__all__ = ["PauliObservable", "pauli_matrix", "expectation", "parity", "two_qubit_pauli_labels"]

_FACTOR = re.compile(r"^\s*([XYZ])\s*(\d+)\s*$")


@dataclass(frozen=True)
class PauliObservable:
    """Tensor product of single-qubit Paulis with a real coefficient."""

    terms: tuple[tuple[int, str], ...]
    coefficient: float = 1.0

    def __init__(self, terms: Mapping[int, str] | tuple, coefficient: float = 1.0):
        items = terms.items() if isinstance(terms, Mapping) else terms
        cleaned = {}
        for q, p in items:
            if p not in ("X", "Y", "Z"):
                raise ValueError(f"unknown Pauli {p!r}")
            q = int(q)
            if q < 0 or q in cleaned:
                raise ValueError(f"invalid or repeated qubit {q}")
            cleaned[q] = p
        if not cleaned:
            raise ValueError("an observable needs a non-empty support")
        object.__setattr__(self, "terms", tuple(sorted(cleaned.items())))
        object.__setattr__(self, "coefficient", float(coefficient))

    @classmethod
    def parse(cls, text: str, coefficient: float = 1.0) -> "PauliObservable":
        factors = []
        for part in text.split("*"):
            match = _FACTOR.match(part)
            if not match:
                raise ValueError(f"cannot parse Pauli factor {part!r} in {text!r}")
            factors.append((int(match.group(2)), match.group(1)))
        return cls(tuple(factors), coefficient)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.terms)

    @property
    def bases(self) -> dict[int, str]:
        return dict(self.terms)

    def matrix(self, n_qubits: int | None = None) -> np.ndarray:
        n = max(self.support) + 1 if n_qubits is None else n_qubits
        return self.coefficient * pauli_matrix({q: p for q, p in self.terms}, n)

    def __str__(self) -> str:
        return "*".join(f"{p}{q}" for q, p in self.terms)


def pauli_matrix(bases: Mapping[int, str], n: int) -> np.ndarray:
    factors = [PAULI[bases.get(q, "I")] for q in reversed(range(n))]
    return reduce(np.kron, factors, np.eye(1, dtype=complex))


def expectation(state: np.ndarray, observable: PauliObservable) -> float:
    n = int(np.log2(state.size))
    return float(np.real(np.vdot(state, observable.matrix(n) @ state)))


def parity(bits: np.ndarray) -> np.ndarray:
    """``(-1)**(sum of bits)`` per row."""
    return 1 - 2 * (np.asarray(bits, dtype=np.int64).sum(axis=-1) % 2)


def two_qubit_pauli_labels() -> list[str]:
    """The 15 non-identity labels ``"AB"`` (qubit 0 is ``A``), in I,X,Y,Z order."""
    return ["".join(p) for p in product("IXYZ", repeat=2) if p != ("I", "I")]
