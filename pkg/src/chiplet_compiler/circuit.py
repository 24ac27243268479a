"""Framework-free quantum circuit IR.

Circuits are immutable: every pass builds a new ``Circuit``. Gates act on
integer qubit indices, which are logical before layout and physical after.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum

ANGLE_TOL = 1e-10


class GateKind(str, Enum):
    X = "X"
    SX = "SX"
    RZ = "Rz"
    H = "H"
    CX = "CX"
    CZ = "CZ"
    SWAP = "SWAP"
    RY = "Ry"
    RZZ = "Rzz"
    MEASURE = "Measure"
    RESET = "Reset"
    BARRIER = "Barrier"

    @property
    def arity(self) -> int:
        return 2 if self in TWO_QUBIT_KINDS else 1

    @property
    def parametric(self) -> bool:
        return self in PARAM_KINDS


TWO_QUBIT_KINDS = frozenset({GateKind.CX, GateKind.CZ, GateKind.SWAP, GateKind.RZZ})
PARAM_KINDS = frozenset({GateKind.RZ, GateKind.RY, GateKind.RZZ})
NON_UNITARY_KINDS = frozenset({GateKind.MEASURE, GateKind.RESET})


@dataclass(frozen=True)
class Gate:
    """One gate occurrence.

    ``tag`` is internal provenance (used to mark inter-chiplet hand-off points
    during elaboration); it is not part of gate identity for equivalence checks.
    """

    kind: GateKind
    qubits: tuple[int, ...]
    param: float | None = None
    tag: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.kind, GateKind):
            object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != self.kind.arity:
            raise ValueError(f"{self.kind.value} takes {self.kind.arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"duplicate qubit in {self.kind.value}{self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.qubits}")
        if self.kind.parametric:
            if self.param is None:
                raise ValueError(f"{self.kind.value} requires an angle")
            object.__setattr__(self, "param", float(self.param))
        elif self.param is not None:
            raise ValueError(f"{self.kind.value} takes no angle")

    @property
    def is_two_qubit(self) -> bool:
        return len(self.qubits) == 2

    def on(self, *qubits: int) -> Gate:
        """Same gate on different qubits (tag preserved)."""
        return Gate(self.kind, qubits, self.param, self.tag)

    def same_op(self, other: Gate, tol: float = ANGLE_TOL) -> bool:
        if self.kind != other.kind or self.qubits != other.qubits:
            return False
        if self.param is None:
            return other.param is None
        return other.param is not None and abs(self.param - other.param) <= tol

    def to_json(self) -> dict:
        d = {"kind": self.kind.value, "qubits": list(self.qubits)}
        if self.param is not None:
            d["param"] = self.param
        return d

    @classmethod
    def from_json(cls, d: dict) -> Gate:
        return cls(GateKind(d["kind"]), tuple(d["qubits"]), d.get("param"))

    def __repr__(self):
        p = f"({self.param:.4g})" if self.param is not None else ""
        return f"{self.kind.value}{p}{list(self.qubits)}"


# Convenience constructors used by generators and tests.
def X(q): return Gate(GateKind.X, (q,))
def SX(q): return Gate(GateKind.SX, (q,))
def H(q): return Gate(GateKind.H, (q,))
def Rz(theta, q): return Gate(GateKind.RZ, (q,), theta)
def Ry(theta, q): return Gate(GateKind.RY, (q,), theta)
def CX(a, b): return Gate(GateKind.CX, (a, b))
def CZ(a, b): return Gate(GateKind.CZ, (a, b))
def SWAP(a, b): return Gate(GateKind.SWAP, (a, b))
def Rzz(theta, a, b): return Gate(GateKind.RZZ, (a, b), theta)
def Measure(q): return Gate(GateKind.MEASURE, (q,))
def Reset(q): return Gate(GateKind.RESET, (q,))
def Barrier(q): return Gate(GateKind.BARRIER, (q,))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...] = ()
    name: str = "circuit"

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.num_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        for g in self.gates:
            if max(g.qubits) >= self.num_qubits:
                raise ValueError(f"{g!r} exceeds qubit count {self.num_qubits}")

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def with_gates(self, gates, name: str | None = None) -> Circuit:
        return Circuit(self.num_qubits, tuple(gates), self.name if name is None else name)

    def two_qubit_gates(self) -> list[Gate]:
        return [g for g in self.gates if g.is_two_qubit]

    def active_qubits(self) -> set[int]:
        return {q for g in self.gates for q in g.qubits if g.kind != GateKind.BARRIER}

    def per_qubit(self) -> dict[int, list[int]]:
        """Gate indices touching each qubit, in program order."""
        seq = defaultdict(list)
        for i, g in enumerate(self.gates):
            for q in g.qubits:
                seq[q].append(i)
        return dict(seq)

    def to_json(self) -> dict:
        return {"name": self.name, "num_qubits": self.num_qubits,
                "gates": [g.to_json() for g in self.gates]}

    @classmethod
    def from_json(cls, d: dict) -> Circuit:
        return cls(int(d["num_qubits"]), tuple(Gate.from_json(g) for g in d["gates"]), d.get("name", "circuit"))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass(frozen=True)
class DependencyGraph:
    """Gate-level DAG: edge i->j iff gate j is the next gate after i on a shared qubit."""

    num_nodes: int
    edges: tuple[tuple[int, int], ...]
    preds: tuple[tuple[int, ...], ...]
    succs: tuple[tuple[int, ...], ...]

    def topological_order(self) -> list[int]:
        indeg = [len(p) for p in self.preds]
        ready = [i for i in range(self.num_nodes) if indeg[i] == 0]
        order = []
        while ready:
            i = ready.pop()
            order.append(i)
            for j in self.succs[i]:
                indeg[j] -= 1
                if indeg[j] == 0:
                    ready.append(j)
        return order


def build_dependency_graph(c: Circuit) -> DependencyGraph:
    last: dict[int, int] = {}
    preds = [[] for _ in c.gates]
    succs = [[] for _ in c.gates]
    edges = []
    for j, g in enumerate(c.gates):
        for q in g.qubits:
            i = last.get(q)
            if i is not None and i not in preds[j]:
                preds[j].append(i)
                succs[i].append(j)
                edges.append((i, j))
            last[q] = j
    return DependencyGraph(len(c.gates), tuple(edges),
                           tuple(map(tuple, preds)), tuple(map(tuple, succs)))


def interaction_graph(c: Circuit) -> dict[tuple[int, int], int]:
    """Weighted qubit-interaction graph keyed by sorted pairs."""
    weights: dict[tuple[int, int], int] = defaultdict(int)
    for g in c.gates:
        if g.is_two_qubit:
            a, b = sorted(g.qubits)
            weights[(a, b)] += 1
    return dict(weights)


def depth(c: Circuit) -> int:
    level = [0] * c.num_qubits
    for g in c.gates:
        d = max(level[q] for q in g.qubits) + (g.kind != GateKind.BARRIER)
        for q in g.qubits:
            level[q] = d
    return max(level, default=0)


def gate_count(c: Circuit) -> int:
    return sum(1 for g in c.gates if g.kind != GateKind.BARRIER)
