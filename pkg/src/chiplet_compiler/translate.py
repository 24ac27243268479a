"""Basis translation to {X, SX, Rz, CZ} (+ inter-chiplet SWAP) and peephole optimization."""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np

from .circuit import ANGLE_TOL, Circuit, Gate, GateKind
from .linalg import equal_up_to_phase, single_qubit_unitary, zyz_angles

PI = math.pi
G = GateKind


@dataclass(frozen=True)
class BasisSet:
    """Two disjoint gate sets: one for intra-chiplet links/qubits, one for inter links."""

    single: frozenset = frozenset({G.X, G.SX, G.RZ})
    intra_two: frozenset = frozenset({G.CZ})
    inter: frozenset = frozenset({G.SWAP})
    passthrough: frozenset = frozenset({G.MEASURE, G.RESET, G.BARRIER})
    inter_links: frozenset = field(default_factory=frozenset)

    def is_inter(self, g: Gate) -> bool:
        return frozenset(g.qubits) in self.inter_links


def normalize_angle(theta: float) -> float:
    t = math.remainder(theta, 2 * PI)
    return PI if abs(t + PI) <= ANGLE_TOL else t


def _is_zero_angle(theta: float) -> bool:
    return abs(math.remainder(theta, 2 * PI)) <= ANGLE_TOL


def _h(q):
    return [Gate(G.RZ, (q,), PI / 2), Gate(G.SX, (q,)), Gate(G.RZ, (q,), PI / 2)]


def _cx(a, b):
    return _h(b) + [Gate(G.CZ, (a, b))] + _h(b)


def _euler(u: np.ndarray, q: int) -> list[Gate]:
    """Generic Rz-SX-Rz-SX-Rz form (time order)."""
    phi, theta, lam = zyz_angles(u)
    return [Gate(G.RZ, (q,), lam), Gate(G.SX, (q,)), Gate(G.RZ, (q,), theta + PI),
            Gate(G.SX, (q,)), Gate(G.RZ, (q,), phi + PI)]


def translate_gate(g: Gate, basis: BasisSet) -> list[Gate]:
    k = g.kind
    if k in basis.single or k in basis.intra_two or k in basis.passthrough:
        return [g]
    a = g.qubits[0]
    if k == G.H:
        return _h(a)
    if k == G.RY:
        return [x for x in _euler(single_qubit_unitary([g]), a) if not _drop(x)]
    b = g.qubits[1] if g.is_two_qubit else None
    if k == G.CX:
        return _cx(a, b)
    if k == G.SWAP:
        if basis.is_inter(g):
            return [g]
        return _cx(a, b) + _cx(b, a) + _cx(a, b)
    if k == G.RZZ:
        return _cx(a, b) + [Gate(G.RZ, (b,), g.param)] + _cx(a, b)
    raise ValueError(f"no translation rule for {k.value}")


def _drop(g: Gate) -> bool:
    return g.kind == G.RZ and _is_zero_angle(g.param)


def translate_basis(c: Circuit, basis: BasisSet | None = None) -> Circuit:
    basis = basis or BasisSet()
    out = []
    for g in c.gates:
        out.extend(translate_gate(g, basis))
    return c.with_gates(out)


# --- optimization ---------------------------------------------------------

_RUN_KINDS = frozenset({G.X, G.SX, G.RZ})
_SELF_INVERSE_1Q = frozenset({G.X})
_SELF_INVERSE_2Q = frozenset({G.CZ, G.SWAP, G.CX})


def resynthesize(u: np.ndarray, q: int) -> list[Gate]:
    """Shortest {X, SX, Rz} sequence equal to ``u`` up to global phase."""
    phi, theta, lam = zyz_angles(u)
    candidates = [
        [],
        [Gate(G.RZ, (q,), phi + lam)],
        [Gate(G.X, (q,))],
        [Gate(G.SX, (q,))],
        [Gate(G.RZ, (q,), lam - PI / 2), Gate(G.SX, (q,)), Gate(G.RZ, (q,), phi + PI / 2)],
        [Gate(G.RZ, (q,), lam + PI), Gate(G.X, (q,)), Gate(G.RZ, (q,), phi)],
        _euler(u, q),
    ]
    best = None
    for cand in candidates:
        seq = [g if g.kind != G.RZ else Gate(G.RZ, (q,), normalize_angle(g.param))
               for g in cand if not _drop(g)]
        if best is not None and len(seq) >= len(best):
            continue
        if equal_up_to_phase(single_qubit_unitary(seq), u, 1e-9):
            best = seq
    if best is None:  # numerically unreachable; keep the generic form
        best = [g for g in _euler(u, q) if not _drop(g)]
    return best


@lru_cache(maxsize=1 << 16)
def _resynth_run(run: tuple) -> tuple:
    seq = resynthesize(single_qubit_unitary(Gate(k, (0,), p) for k, p in run), 0)
    return tuple((g.kind, g.param) for g in seq)


def _protected(g: Gate, pinned: frozenset) -> bool:
    return g.kind == G.BARRIER or (g.kind == G.SWAP and frozenset(g.qubits) in pinned)


def _cancel_pass(gates: list[Gate], pinned: frozenset) -> tuple[list[Gate], bool]:
    alive: list[Gate | None] = list(gates)
    last: dict[int, int] = {}
    changed = False
    for j, g in enumerate(gates):
        if g.kind == G.RZ and _is_zero_angle(g.param):
            alive[j] = None
            changed = True
            continue
        prev = {last.get(q) for q in g.qubits}
        if len(prev) == 1 and None not in prev and not _protected(g, pinned):
            i = prev.pop()
            f = alive[i]
            if f is not None and f.qubits == g.qubits or (
                    f is not None and f.kind in (G.CZ, G.SWAP) and set(f.qubits) == set(g.qubits)):
                if f.kind == g.kind and not _protected(f, pinned):
                    if f.kind in _SELF_INVERSE_1Q or f.kind in _SELF_INVERSE_2Q:
                        alive[i] = alive[j] = None
                        for q in g.qubits:
                            last.pop(q, None)
                        changed = True
                        continue
                    if f.kind == G.RZ:
                        alive[i] = None
                        merged = normalize_angle(f.param + g.param)
                        changed = True
                        if _is_zero_angle(merged):
                            alive[j] = None
                            last.pop(g.qubits[0], None)
                            continue
                        alive[j] = Gate(G.RZ, g.qubits, merged)
        for q in g.qubits:
            last[q] = j
    return [g for g in alive if g is not None], changed


def _resynth_pass(gates: list[Gate]) -> tuple[list[Gate], bool]:
    runs: dict[int, list[int]] = {}
    finished: list[list[int]] = []
    for j, g in enumerate(gates):
        if g.kind in _RUN_KINDS:
            runs.setdefault(g.qubits[0], []).append(j)
        else:
            for q in g.qubits:
                if q in runs:
                    finished.append(runs.pop(q))
    finished.extend(runs.values())

    replace: dict[int, list[Gate]] = {}
    drop: set[int] = set()
    for run in finished:
        if len(run) < 2:
            continue
        q = gates[run[0]].qubits[0]
        seq = [Gate(k, (q,), p) for k, p in _resynth_run(tuple((gates[i].kind, gates[i].param)
                                                                for i in run))]
        if len(seq) < len(run):
            replace[run[0]] = seq
            drop.update(run[1:])
    if not replace:
        return gates, False
    out = []
    for j, g in enumerate(gates):
        if j in replace:
            out.extend(replace[j])
        elif j not in drop:
            out.append(g)
    return out, True


def optimize(c: Circuit, pinned=frozenset()) -> Circuit:
    """Fixpoint of cancellation, Rz merging and single-qubit run resynthesis.

    SWAPs on ``pinned`` pairs and all Barriers are never touched; Measure,
    Reset and Barrier end single-qubit runs.
    """
    pinned = frozenset(frozenset(p) for p in pinned)
    gates = list(c.gates)
    while True:
        gates, a = _cancel_pass(gates, pinned)
        gates, b = _resynth_pass(gates)
        if not (a or b):
            return c.with_gates(gates)
