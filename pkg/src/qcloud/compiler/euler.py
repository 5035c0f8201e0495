"""Euler-angle decomposition onto the RZ / RX(+-pi/2) template."""

from __future__ import annotations

import math

import numpy as np

from ..gates import rx, rz

__all__ = ["euler_decompose", "euler_unitary", "canonical_angle", "NonUnitaryError"]

_TIE = 1e-9


class NonUnitaryError(ValueError):
    pass


def canonical_angle(theta: float) -> float:
    """Reduce to (-pi, pi]; -pi maps to +pi."""
    y = math.remainder(float(theta), 2 * math.pi)
    if y <= -math.pi:
        y = math.pi
    return y + 0.0


def euler_unitary(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """``RZ(gamma) RX(-pi/2) RZ(beta) RX(pi/2) RZ(alpha)`` as a matrix product."""
    return rz(gamma) @ rx(-math.pi / 2) @ rz(beta) @ rx(math.pi / 2) @ rz(alpha)


def euler_decompose(u) -> tuple[float, float, float]:
    """Angles ``(alpha, beta, gamma)`` with ``euler_unitary(...)`` equal to ``u`` up to phase.

    The middle factor ``RX(-pi/2) RZ(beta) RX(pi/2)`` is ``RY(beta)``, so this is a
    ZYZ decomposition. Of the two equivalent solutions ``(a, b, g)`` and
    ``(a + pi, -b, g + pi)`` the one with the smaller ``|alpha| + |gamma|`` is
    returned, preferring ``beta >= 0`` on ties. All angles lie in (-pi, pi].
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise NonUnitaryError(f"expected a 2x2 matrix, got shape {u.shape}")
    if np.max(np.abs(u.conj().T @ u - np.eye(2))) > 1e-10:
        raise NonUnitaryError("matrix is not unitary")
    v = u / np.sqrt(np.linalg.det(u))
    c, s = abs(v[0, 0]), abs(v[1, 0])
    beta = 2.0 * math.atan2(s, c)
    if s < 1e-12:
        alpha, gamma = 0.0, -2.0 * np.angle(v[0, 0])
    elif c < 1e-12:
        alpha, gamma = 0.0, 2.0 * np.angle(v[1, 0])
    else:
        plus = -2.0 * np.angle(v[0, 0])
        minus = 2.0 * np.angle(v[1, 0])
        gamma, alpha = (plus + minus) / 2, (plus - minus) / 2

    first = tuple(canonical_angle(x) for x in (alpha, beta, gamma))
    second = tuple(canonical_angle(x) for x in (alpha + math.pi, -beta, gamma + math.pi))

    def cost(angles):
        return abs(angles[0]) + abs(angles[2])

    if abs(cost(first) - cost(second)) <= _TIE:
        return first if first[1] >= second[1] else second
    return min(first, second, key=cost)
