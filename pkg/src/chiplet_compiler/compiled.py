"""Layouts and compiled-circuit artifacts shared by both pipelines."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .circuit import Circuit

BASELINE = "baseline"
SEQC = "seqc"


@dataclass(frozen=True)
class Layout:
    """Injective logical -> physical map; ``physical[i]`` hosts logical ``i``."""

    physical: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "physical", tuple(int(p) for p in self.physical))
        if len(set(self.physical)) != len(self.physical):
            raise ValueError("layout is not injective")

    @classmethod
    def from_dict(cls, l2p: dict[int, int], num_logical: int) -> Layout:
        return cls(tuple(l2p[i] for i in range(num_logical)))

    def __getitem__(self, logical: int) -> int:
        return self.physical[logical]

    def __len__(self):
        return len(self.physical)

    def inverse(self) -> dict[int, int]:
        return {p: l for l, p in enumerate(self.physical)}

    def as_dict(self) -> dict[int, int]:
        return dict(enumerate(self.physical))

    def apply_swap(self, a: int, b: int) -> Layout:
        inv = self.inverse()
        phys = list(self.physical)
        if a in inv:
            phys[inv[a]] = b
        if b in inv:
            phys[inv[b]] = a
        return Layout(tuple(phys))


@dataclass(frozen=True)
class CompiledCircuit:
    """Physical circuit plus provenance.

    ``routed`` is the physical circuit right after routing (and peephole
    correction), before basis translation and optimization; SWAPs are explicit
    there, which is what permutation tracking folds.
    """

    circuit: Circuit
    routed: Circuit
    initial_layout: Layout
    final_layout: Layout
    backend_id: str
    pipeline: str
    seed: int

    def to_json(self) -> dict:
        return {
            "circuit": self.circuit.to_json(),
            "routed": self.routed.to_json(),
            "initial_layout": list(self.initial_layout.physical),
            "final_layout": list(self.final_layout.physical),
            "backend_id": self.backend_id,
            "pipeline": self.pipeline,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, d: dict) -> CompiledCircuit:
        return cls(Circuit.from_json(d["circuit"]), Circuit.from_json(d["routed"]),
                   Layout(tuple(d["initial_layout"])), Layout(tuple(d["final_layout"])),
                   d["backend_id"], d["pipeline"], int(d["seed"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)
