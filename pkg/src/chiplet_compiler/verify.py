"""Correctness oracles for compiled circuits.

``permutation_equiv`` works at any size in two stages:

* routing: replay ``cc.routed`` from the initial layout, folding every SWAP
  into a running permutation; the residual gates, relabelled to logical
  qubits, must reproduce the original per-qubit sequences and the final
  layout.
* lowering: ``cc.circuit`` must equal ``translate_basis(cc.routed)`` up to the
  rewrites the optimizer performs, i.e. single-qubit runs compared as 2x2
  matrices up to phase and adjacent CZ pairs cancelled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import ANGLE_TOL, Circuit, Gate, GateKind
from .compiled import CompiledCircuit
from .device import Backend
from .linalg import equal_up_to_phase, gate_matrix, statevector
from .translate import BasisSet, translate_basis

G = GateKind
DEVICE_1Q = frozenset({G.X, G.SX, G.RZ, G.MEASURE, G.RESET, G.BARRIER})
_UNITARY_1Q = frozenset({G.X, G.SX, G.RZ})


class Unsupported(ValueError):
    pass


@dataclass(frozen=True)
class EquivResult:
    ok: bool
    reason: str = ""

    def __bool__(self):
        return self.ok


def validate_compiled(cc: CompiledCircuit, b: Backend) -> list[str]:
    diags = []
    if cc.circuit.num_qubits > b.num_qubits:
        diags.append(f"circuit has {cc.circuit.num_qubits} qubits, backend {b.num_qubits}")
    for name, lay in (("initial", cc.initial_layout), ("final", cc.final_layout)):
        phys = lay.physical
        if len(set(phys)) != len(phys):
            diags.append(f"{name} layout not injective")
        if any(not 0 <= p < b.num_qubits for p in phys):
            diags.append(f"{name} layout leaves the device")
    for i, g in enumerate(cc.circuit.gates):
        if g.is_two_qubit:
            ln = b.link(*g.qubits)
            if ln is None:
                diags.append(f"gate {i} {g!r}: qubits not linked")
            elif g.kind not in ln.kinds:
                diags.append(f"gate {i} {g!r}: {g.kind.value} not allowed on {ln.scope} link")
        elif g.kind not in DEVICE_1Q:
            diags.append(f"gate {i} {g!r}: not a device instruction")
    return diags


# --- stage A: SWAP folding -------------------------------------------------

def _fold(gates, start: dict[int, int]):
    """Replay ``gates`` with SWAPs folded. ``start`` maps wire -> content label.

    Returns (per-content residual sequences, wire -> content at the end).
    """
    at = dict(start)
    seqs: dict[int, list] = {}
    for g in gates:
        if g.kind == G.SWAP:
            a, b = g.qubits
            at[a], at[b] = at.get(b), at.get(a)
            continue
        labels = tuple(at.get(q) for q in g.qubits)
        if None in labels:
            return None, f"{g!r} acts on a wire holding no logical qubit"
        for i, lab in enumerate(labels):
            seqs.setdefault(lab, []).append((g.kind, g.param, labels, i))
    return seqs, at


def _same_item(x, y) -> bool:
    if x[0] != y[0] or x[2] != y[2] or x[3] != y[3]:
        return False
    if x[1] is None or y[1] is None:
        return x[1] is None and y[1] is None
    return abs(x[1] - y[1]) <= ANGLE_TOL


def routing_equiv(original: Circuit, cc: CompiledCircuit) -> EquivResult:
    n = original.num_qubits
    if len(cc.initial_layout) != n or len(cc.final_layout) != n:
        return EquivResult(False, "layout size differs from circuit width")
    want, orig_end = _fold(original.gates, {q: q for q in range(n)})
    got, phys_end = _fold(cc.routed.gates, {p: l for l, p in enumerate(cc.initial_layout.physical)})
    if got is None:
        return EquivResult(False, phys_end)
    for lab in sorted(set(want) | set(got)):
        w, g = want.get(lab, []), got.get(lab, [])
        for i, (x, y) in enumerate(zip(w, g)):
            if not _same_item(x, y):
                return EquivResult(False, f"logical {lab}, gate {i}: expected {x[0].value}, got {y[0].value}")
        if len(w) != len(g):
            return EquivResult(False, f"logical {lab}: expected {len(w)} gates, got {len(g)}")
    for w in range(n):
        if phys_end.get(cc.final_layout[w]) != orig_end[w]:
            return EquivResult(False, f"final layout disagrees for logical {w}")
    return EquivResult(True)


# --- stage B: lowering -----------------------------------------------------

class _U:
    """A merged single-qubit run."""

    __slots__ = ("q", "m")

    def __init__(self, q, m):
        self.q, self.m = q, m

    @property
    def qubits(self):
        return (self.q,)


def _canon_pass(items):
    out, last = [], {}
    changed = False
    for g in items:
        if isinstance(g, _U) or g.kind in _UNITARY_1Q:
            q = g.qubits[0]
            m = g.m if isinstance(g, _U) else gate_matrix(g)
            j = last.get(q)
            if j is not None and isinstance(out[j], _U):
                out[j] = _U(q, m @ out[j].m)
                changed = True
            else:
                last[q] = len(out)
                out.append(_U(q, m))
            continue
        prev = {last.get(q) for q in g.qubits}
        if g.kind == G.CZ and len(prev) == 1 and None not in prev:
            j = prev.pop()
            f = out[j]
            if f is not None and not isinstance(f, _U) and f.kind == G.CZ \
                    and set(f.qubits) == set(g.qubits):
                out[j] = None
                for q in g.qubits:
                    last.pop(q, None)
                changed = True
                continue
        for q in g.qubits:
            last[q] = len(out)
        out.append(g)
    result = []
    for g in out:
        if g is None:
            continue
        if isinstance(g, _U) and equal_up_to_phase(g.m, np.eye(2), 1e-8):
            changed = True
            continue
        result.append(g)
    return result, changed


def _canonical(gates):
    items = list(gates)
    changed = True
    while changed:
        items, changed = _canon_pass(items)
    per_q: dict[int, list] = {}
    for g in items:
        for q in g.qubits:
            per_q.setdefault(q, []).append(g)
    return per_q


def lowering_equiv(cc: CompiledCircuit) -> EquivResult:
    pinned = frozenset(frozenset(g.qubits) for g in cc.circuit.gates if g.kind == G.SWAP)
    ref = translate_basis(cc.routed, BasisSet(inter_links=pinned))
    want, got = _canonical(ref.gates), _canonical(cc.circuit.gates)
    for q in sorted(set(want) | set(got)):
        w, g = want.get(q, []), got.get(q, [])
        if len(w) != len(g):
            return EquivResult(False, f"physical {q}: {len(w)} items expected, {len(g)} found")
        for i, (x, y) in enumerate(zip(w, g)):
            if isinstance(x, _U) != isinstance(y, _U):
                return EquivResult(False, f"physical {q}, item {i}: structure differs")
            if isinstance(x, _U):
                if not equal_up_to_phase(x.m, y.m, 1e-8):
                    return EquivResult(False, f"physical {q}, item {i}: single-qubit run differs")
            elif x.kind != y.kind or set(x.qubits) != set(y.qubits) or \
                    (x.kind in (G.MEASURE, G.RESET, G.BARRIER) and x.qubits != y.qubits):
                return EquivResult(False, f"physical {q}, item {i}: {x!r} vs {y!r}")
    return EquivResult(True)


def permutation_equiv(original: Circuit, cc: CompiledCircuit) -> EquivResult:
    r = routing_equiv(original, cc)
    if not r:
        return EquivResult(False, "routing: " + r.reason)
    r = lowering_equiv(cc)
    if not r:
        return EquivResult(False, "lowering: " + r.reason)
    return r


# --- statevector -----------------------------------------------------------

def statevector_equiv(original: Circuit, cc: CompiledCircuit, max_active: int = 14) -> float:
    """|<psi_orig | P^dagger psi_cc>|^2 with P the net output permutation."""
    for c in (original, cc.circuit):
        if any(g.kind in (G.MEASURE, G.RESET) for g in c.gates):
            raise Unsupported("statevector check needs a unitary circuit")
    n = original.num_qubits
    final = list(cc.final_layout.physical)
    active = sorted({q for g in cc.circuit.gates if g.kind != G.BARRIER for q in g.qubits} | set(final))
    if len(active) > max_active or n > max_active:
        raise Unsupported(f"{len(active)} active qubits exceeds the limit of {max_active}")
    psi_orig = statevector(original.gates, list(range(n))).reshape(-1)
    psi = statevector(cc.circuit.gates, active)
    axes = [active.index(p) for p in final]
    rest = [i for i in range(len(active)) if i not in axes]
    psi = np.transpose(psi, axes + rest).reshape(2 ** n, -1)[:, 0]  # other qubits must be |0>
    return float(abs(np.vdot(psi_orig, psi)) ** 2)


def active_qubits(cc: CompiledCircuit) -> int:
    return len({q for g in cc.circuit.gates if g.kind != G.BARRIER for q in g.qubits}
               | set(cc.final_layout.physical))
