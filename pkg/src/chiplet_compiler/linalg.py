"""Gate matrices, Euler decomposition and a small statevector simulator.

Two-qubit matrices use the first listed qubit as the most significant bit.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .circuit import Gate, GateKind

_SQ = 1 / math.sqrt(2)

I2 = np.eye(2, dtype=complex)
X_M = np.array([[0, 1], [1, 0]], dtype=complex)
SX_M = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])
H_M = _SQ * np.array([[1, 1], [1, -1]], dtype=complex)
CX_M = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CZ_M = np.diag([1, 1, 1, -1]).astype(complex)
SWAP_M = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.diag([cmath.exp(-0.5j * theta), cmath.exp(0.5j * theta)])


def ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rzz(theta: float) -> np.ndarray:
    a, b = cmath.exp(-0.5j * theta), cmath.exp(0.5j * theta)
    return np.diag([a, b, b, a])


def gate_matrix(g: Gate) -> np.ndarray:
    k = g.kind
    if k == GateKind.X:
        return X_M
    if k == GateKind.SX:
        return SX_M
    if k == GateKind.H:
        return H_M
    if k == GateKind.RZ:
        return rz(g.param)
    if k == GateKind.RY:
        return ry(g.param)
    if k == GateKind.CX:
        return CX_M
    if k == GateKind.CZ:
        return CZ_M
    if k == GateKind.SWAP:
        return SWAP_M
    if k == GateKind.RZZ:
        return rzz(g.param)
    if k == GateKind.BARRIER:
        return I2
    raise ValueError(f"{k.value} has no unitary")


def circuit_unitary(gates, qubits: list[int]) -> np.ndarray:
    """Dense unitary of ``gates`` over ``qubits`` (first listed = most significant)."""
    pos = {q: i for i, q in enumerate(qubits)}
    n = len(qubits)
    u = np.eye(2 ** n, dtype=complex).reshape([2] * n + [2 ** n])
    for g in gates:
        u = _apply(u, gate_matrix(g), [pos[q] for q in g.qubits], n)
    return u.reshape(2 ** n, 2 ** n)


def single_qubit_unitary(gates) -> np.ndarray:
    """Product of single-qubit gate matrices in time order."""
    m = I2
    for g in gates:
        m = gate_matrix(g) @ m
    return m


def _apply(state: np.ndarray, m: np.ndarray, axes: list[int], n: int) -> np.ndarray:
    k = len(axes)
    m = m.reshape([2] * (2 * k))
    out = np.tensordot(m, state, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-10) -> bool:
    overlap = np.vdot(a, b)
    if abs(overlap) < 1e-12:
        return False
    phase = overlap / abs(overlap)
    return bool(np.max(np.abs(a * phase - b)) <= tol)


def zyz_angles(u: np.ndarray) -> tuple[float, float, float]:
    """(phi, theta, lam) with u ~ Rz(phi) Ry(theta) Rz(lam) up to global phase."""
    v = u / cmath.sqrt(np.linalg.det(u))
    theta = 2 * math.atan2(abs(v[1, 0]), abs(v[1, 1]))
    s = cmath.phase(v[1, 1]) if abs(v[1, 1]) > 1e-12 else 0.0
    d = cmath.phase(v[1, 0]) if abs(v[1, 0]) > 1e-12 else 0.0
    return s + d, theta, s - d


def statevector(gates, qubits: list[int]) -> np.ndarray:
    """Final state of ``gates`` from |0...0> over ``qubits``; returned as an n-axis tensor."""
    n = len(qubits)
    pos = {q: i for i, q in enumerate(qubits)}
    psi = np.zeros([2] * n, dtype=complex)
    psi[(0,) * n] = 1.0
    for g in gates:
        if g.kind == GateKind.BARRIER:
            continue
        psi = _apply(psi, gate_matrix(g), [pos[q] for q in g.qubits], n)
    return psi
