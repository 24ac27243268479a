"""Deterministic benchmark circuit generators.

VQE angles come from ``SplitMix64`` (version 1): state advances by the golden
gamma, output is the standard splitmix64 finalizer, and a uniform double in
[0, 1) takes the top 53 bits. Angle = 2*pi*u. Any language can reproduce the
stream from the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .circuit import CX, H, Barrier, Circuit, Measure, Reset, Ry, Rz, X

MASK64 = (1 << 64) - 1
TFIM_ZZ_ANGLE = -1.0
TFIM_X_ANGLE = 1.0
FAMILIES = ("ghz", "bitcode", "phasecode", "vqe", "hamiltonian")


class SplitMix64:
    VERSION = 1

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53


@dataclass(frozen=True)
class BenchSpec:
    family: str
    n: int
    seed: int = 0
    rounds: int = 2
    layers: int = 2
    steps: int = 1

    def build(self) -> Circuit:
        fam = self.family.lower()
        if fam == "ghz":
            return ghz(self.n)
        if fam == "bitcode":
            return bit_code(self.n, self.rounds)
        if fam == "phasecode":
            return phase_code(self.n, self.rounds)
        if fam == "vqe":
            return vqe(self.n, self.seed, self.layers)
        if fam in ("hamiltonian", "hamiltoniansim", "tfim"):
            return tfim_sim(self.n, self.steps)
        raise ValueError(f"unknown benchmark family {self.family!r}")


def ghz(n: int) -> Circuit:
    if n < 1:
        raise ValueError("n must be >= 1")
    gates = [H(0)] + [CX(i, i + 1) for i in range(n - 1)]
    return Circuit(n, gates, f"ghz_{n}")


def _code_layout(n: int) -> tuple[list[int], list[tuple[int, list[int]]]]:
    """Data qubits on even indices; each ancilla checks its data neighbours."""
    if n < 3:
        raise ValueError("error-correction codes need n >= 3")
    data = list(range(0, n, 2))
    checks = [(a, [d for d in (a - 1, a + 1) if d < n]) for a in range(1, n, 2)]
    return data, checks


def bit_code(n: int, rounds: int = 2) -> Circuit:
    data, checks = _code_layout(n)
    gates = [X(d) for d in data[::2]]
    for _ in range(rounds):
        for a, ds in checks:
            gates += [CX(d, a) for d in ds]
        for a, _ in checks:
            gates += [Measure(a), Reset(a)]
        gates += [Barrier(q) for q in range(n)]
    gates += [Measure(d) for d in data]
    return Circuit(n, gates, f"bitcode_{n}")


def phase_code(n: int, rounds: int = 2) -> Circuit:
    data, checks = _code_layout(n)
    gates = [X(d) for d in data[::2]] + [H(d) for d in data]
    for _ in range(rounds):
        for a, ds in checks:
            gates.append(H(a))
            gates += [CX(d, a) for d in ds]
            gates.append(H(a))
        for a, _ in checks:
            gates += [Measure(a), Reset(a)]
        gates += [Barrier(q) for q in range(n)]
    gates += [H(d) for d in data] + [Measure(d) for d in data]
    return Circuit(n, gates, f"phasecode_{n}")


def vqe(n: int, seed: int, layers: int = 2) -> Circuit:
    if n < 2:
        raise ValueError("vqe needs n >= 2")
    rng = SplitMix64(seed)
    # qubit-major draw order: theta[q][layer]
    theta = [[2 * math.pi * rng.uniform() for _ in range(layers + 1)] for _ in range(n)]
    gates = []
    for layer in range(layers):
        gates += [Ry(theta[q][layer], q) for q in range(n)]
        gates += [CX(i, i + 1) for i in range(n - 1)]
    gates += [Ry(theta[q][layers], q) for q in range(n)]
    return Circuit(n, gates, f"vqe_{n}_s{seed}")


def tfim_sim(n: int, steps: int = 1) -> Circuit:
    if n < 2:
        raise ValueError("tfim needs n >= 2")
    gates = []
    for _ in range(steps):
        for i in range(n - 1):
            gates += [CX(i, i + 1), Rz(TFIM_ZZ_ANGLE, i + 1), CX(i, i + 1)]
        for q in range(n):
            gates += [H(q), Rz(TFIM_X_ANGLE, q), H(q)]
    return Circuit(n, gates, f"hamiltonian_{n}")
