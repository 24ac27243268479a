"""Figures of merit for compiled circuits and suite aggregation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .circuit import Circuit, Gate, GateKind, depth, gate_count
from .compiled import CompiledCircuit
from .device import INTER, Backend


def gate_spec(g: Gate, b: Backend) -> tuple[float, float]:
    """(duration ns, error) of ``g`` on ``b``."""
    if g.is_two_qubit:
        ln = b.link(*g.qubits)
        if ln is None:
            raise ValueError(f"{g!r} is not on a backend link")
        return ln.gate_spec(g.kind)
    spec = b.instruction(g.kind)
    return spec.duration, spec.error


def _circuit(cc) -> Circuit:
    return cc.circuit if isinstance(cc, CompiledCircuit) else cc


def schedule(cc, b: Backend) -> dict[int, tuple[float, float]]:
    """ASAP schedule; returns qubit -> (first start, last finish) over non-Barrier gates."""
    free: dict[int, float] = {}
    span: dict[int, tuple[float, float]] = {}
    for g in _circuit(cc).gates:
        if g.kind == GateKind.BARRIER:
            continue
        dur, _ = gate_spec(g, b)
        start = max((free.get(q, 0.0) for q in g.qubits), default=0.0)
        for q in g.qubits:
            free[q] = start + dur
            first = span[q][0] if q in span else start
            span[q] = (first, start + dur)
    return span


def exec_time(cc, b: Backend) -> float:
    span = schedule(cc, b)
    return max((end for _, end in span.values()), default=0.0)


def esp(cc, b: Backend, decoherence: bool = False) -> float:
    """Geometric mean over touched qubits of the per-qubit gate success product."""
    logs: dict[int, float] = {}
    for g in _circuit(cc).gates:
        if g.kind == GateKind.BARRIER:
            continue
        _, err = gate_spec(g, b)
        for q in g.qubits:
            logs[q] = logs.get(q, 0.0) + math.log1p(-err)
    if not logs:
        return 1.0
    if decoherence:
        qs = b.qubit_spec
        for q, (start, end) in schedule(cc, b).items():
            t = (end - start) * 1e-9
            logs[q] -= t / qs.t1 + t / qs.t2
    return math.exp(sum(logs.values()) / len(logs))


def inter_chiplet_gates(cc, b: Backend) -> int:
    count = 0
    for g in _circuit(cc).gates:
        if g.is_two_qubit:
            ln = b.link(*g.qubits)
            count += ln is not None and ln.scope == INTER
    return count


def geomean_ratio(pairs) -> float:
    pairs = list(pairs)
    if not pairs:
        raise ValueError("empty suite")
    total = 0.0
    for new, base in pairs:
        if base <= 0:
            raise ValueError("baseline metric must be positive")
        if new <= 0:
            raise ValueError("geometric mean needs positive values")
        total += math.log(new / base)
    return math.exp(total / len(pairs))


@dataclass(frozen=True)
class MetricsReport:
    esp: float
    exec_time_ns: float
    inter_chiplet_gates: int
    depth: int
    gate_count: int
    stratify_time_s: float | None = None
    elaborate_time_s: float | None = None
    solve_time_s: float | None = None

    def to_json(self) -> dict:
        return asdict(self)


def measure(cc: CompiledCircuit, b: Backend, stratify_time_s=None, elaborate_time_s=None,
            solve_time_s=None, decoherence: bool = False) -> MetricsReport:
    c = cc.circuit
    return MetricsReport(esp(c, b, decoherence), exec_time(c, b), inter_chiplet_gates(c, b),
                         depth(c), gate_count(c), stratify_time_s, elaborate_time_s, solve_time_s)
