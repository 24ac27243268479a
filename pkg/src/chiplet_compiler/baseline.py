"""Chiplet-ignorant baseline: whole-device SABRE, then peephole legalization.

The router treats every link (intra or inter) as able to host any two-qubit
gate. Afterwards each non-SWAP gate that landed on an inter-chiplet link is
rewritten into the 4-SWAP pattern: move the halo occupant aside with an intra
SWAP, pull the other operand across with an inter SWAP, run the gate on the
intra edge, then undo both SWAPs.
"""

from __future__ import annotations

from dataclasses import replace

from .circuit import Circuit, Gate, GateKind
from .compiled import BASELINE, CompiledCircuit, Layout
from .device import HOPS, INTER, Backend, distance_matrix
from .routing import SabreConfig, route, sabre_layout_search
from .translate import BasisSet, optimize, translate_basis


def _all_edges(b: Backend):
    return [(ln.a, ln.b) for ln in b.links]


def sabre_layout(c: Circuit, b: Backend, dist=None, trials: int = 4, seed: int = 0,
                 cfg: SabreConfig = SabreConfig()) -> Layout:
    if c.num_qubits > b.num_qubits:
        raise ValueError(f"{c.num_qubits}-qubit circuit does not fit {b.num_qubits}-qubit backend")
    dist = distance_matrix(b, HOPS) if dist is None else dist
    l2p = sabre_layout_search(c.gates, b.num_qubits, _all_edges(b), dist,
                              range(c.num_qubits), range(b.num_qubits), trials, seed, cfg)
    return Layout.from_dict(l2p, c.num_qubits)


def sabre_route(c: Circuit, b: Backend, dist, init: Layout, seed: int = 0,
                cfg: SabreConfig = SabreConfig()) -> tuple[Circuit, Layout]:
    res = route(c.gates, b.num_qubits, _all_edges(b), dist, init.as_dict(), seed, cfg)
    routed = Circuit(b.num_qubits, res.gates, c.name)
    return routed, Layout.from_dict(res.final_layout, c.num_qubits)


def _peephole_site(g: Gate, b: Backend, occupied: set[int]) -> tuple[int, int, int]:
    """(stay, moved, nbr): ``moved`` halo is vacated towards intra neighbour ``nbr``."""
    options = []
    for moved, stay in (g.qubits[::-1], g.qubits):
        for nbr in b.intra_neighbors(moved):
            options.append((nbr in occupied, nbr, moved, stay))
    if not options:
        raise ValueError(f"malformed backend: halo qubits {g.qubits} have no intra neighbour")
    _, nbr, moved, stay = min(options)
    return stay, moved, nbr


def peephole_correct(cc: CompiledCircuit, b: Backend) -> CompiledCircuit:
    """Legalize non-SWAP two-qubit gates on inter links (adds exactly 4 SWAPs each)."""
    occupied = set(cc.initial_layout.physical)
    out = []
    for g in cc.routed.gates:
        if g.is_two_qubit:
            ln = b.link(*g.qubits)
            if ln is None:
                raise ValueError(f"{g!r} is not on a backend link; route first")
            if ln.scope == INTER and g.kind != GateKind.SWAP:
                stay, moved, nbr = _peephole_site(g, b, occupied)
                remap = {stay: moved, moved: nbr}
                out += [Gate(GateKind.SWAP, (moved, nbr)), Gate(GateKind.SWAP, (stay, moved)),
                        g.on(*(remap[q] for q in g.qubits)),
                        Gate(GateKind.SWAP, (stay, moved)), Gate(GateKind.SWAP, (moved, nbr))]
                continue
            if g.kind == GateKind.SWAP:
                x, y = g.qubits
                if (x in occupied) != (y in occupied):
                    occupied ^= {x, y}
        out.append(g)
    return replace(cc, routed=cc.routed.with_gates(out), circuit=cc.routed.with_gates(out))


def baseline_compile(c: Circuit, b: Backend, seed: int = 0, trials: int | None = None,
                     cfg: SabreConfig = SabreConfig()) -> CompiledCircuit:
    dist = distance_matrix(b, HOPS)
    init = sabre_layout(c, b, dist, trials or cfg.layout_trials, seed, cfg)
    routed, final = sabre_route(c, b, dist, init, seed, cfg)
    cc = CompiledCircuit(routed, routed, init, final, b.id, BASELINE, seed)
    cc = peephole_correct(cc, b)
    inter = b.inter_pairs()
    lowered = optimize(translate_basis(cc.routed, BasisSet(inter_links=inter)), pinned=inter)
    return replace(cc, circuit=lowered)
