"""Elaboration: per-chiplet layout, pinned inter-chiplet SWAPs, anchored routing, lowering, stitching.

Idle slots are modelled as filler qubits (ids ``n + k * Q + i``) so every
chiplet is always full; a boundary event whose side is an idle slot picks
whichever filler is cheapest to bring to the halo.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Gate, GateKind
from .compiled import SEQC, CompiledCircuit, Layout
from .device import FIDELITY, INTRA, Backend, distance_matrix
from .parallel import run_tasks
from .routing import Anchor, SabreConfig, route, sabre_layout_search
from .stratify import BoundaryEvent, StratifiedCircuit, derive_seed, stratify
from .translate import optimize, translate_basis


@dataclass(frozen=True)
class PinnedInterSwap:
    event: int
    link: tuple[int, int]  # (halo on chiplet a, halo on chiplet b)
    a_out: int  # resolved occupant ids (fillers included)
    b_out: int
    immutable: bool = True


@dataclass(frozen=True)
class ChipletProgram:
    """One chiplet's view: initial occupants and its ordered gates/events."""

    chiplet: int
    occupants: tuple[int, ...]
    items: tuple  # Gate | BoundaryEvent


def _check_backend(strat: StratifiedCircuit, b: Backend):
    if strat.qubits_per_chiplet != b.qubits_per_chiplet:
        raise ValueError("stratification chiplet size differs from backend")
    if strat.num_chiplets > len(b.chiplets):
        raise ValueError("stratification needs more chiplets than the backend has")


def chiplet_programs(strat: StratifiedCircuit) -> list[ChipletProgram]:
    n, q = strat.circuit.num_qubits, strat.qubits_per_chiplet
    out = []
    for k, items in enumerate(strat.programs):
        res = strat.initial_residents(k)
        fillers = [n + k * q + i for i in range(q - len(res))]
        out.append(ChipletProgram(k, tuple(res + fillers), tuple(items)))
    return out


def layout_view(prog: ChipletProgram) -> list[Gate]:
    """Two-qubit gates among initial occupants that have not yet left the chiplet."""
    present = set(prog.occupants)
    view = []
    for x in prog.items:
        if isinstance(x, BoundaryEvent):
            present.discard(x.outgoing(prog.chiplet))
        elif x.is_two_qubit and all(q in present for q in x.qubits):
            view.append(x)
    return view


def _layout_task(view, occupants, slots, edges, dist, trials, seed, cfg):
    return sabre_layout_search(view, len(dist), edges, dist, occupants, slots, trials, seed, cfg)


def chiplet_layout(prog: ChipletProgram, b: Backend, dist=None, trials: int = 4, seed: int = 0,
                   cfg: SabreConfig = SabreConfig()) -> dict[int, int]:
    chip = b.chiplets[prog.chiplet]
    if len(prog.occupants) > len(chip.qubits):
        raise ValueError(f"chiplet {prog.chiplet} is overfull")
    dist = _intra_distance(b) if dist is None else dist
    return _layout_task(layout_view(prog), prog.occupants, chip.qubits,
                        b.intra_edges(prog.chiplet), dist, trials, seed, cfg)


def _intra_distance(b: Backend) -> np.ndarray:
    return distance_matrix(b, FIDELITY, links=[ln for ln in b.links if ln.scope == INTRA])


def place_inter_swaps(strat: StratifiedCircuit, layouts: list[dict[int, int]], b: Backend,
                      dist=None) -> list[PinnedInterSwap]:
    """Greedy serial pinning of boundary events onto concrete inter links."""
    dist = _intra_distance(b) if dist is None else dist
    pos: dict[int, int] = {}
    for lay in layouts:
        pos.update(lay)
    at = {p: q for q, p in pos.items()}
    members = [set(lay) for lay in layouts]
    n = strat.circuit.num_qubits
    by_pair: dict[tuple[int, int], list] = {}
    for ln in b.inter_links():
        ca, cb = b.chiplet_of[ln.a], b.chiplet_of[ln.b]
        by_pair.setdefault((ca, cb), []).append((ln.a, ln.b))
        by_pair.setdefault((cb, ca), []).append((ln.b, ln.a))

    def side_cost(chip, who, h):
        if who is not None:
            return dist[pos[who], h], who
        fillers = sorted(q for q in members[chip] if q >= n)
        if not fillers:
            raise ValueError(f"chiplet {chip} has no idle slot to send")
        return min((dist[pos[f], h], f) for f in fillers)

    pins = []
    for e in strat.events:
        links = by_pair.get((e.a, e.b))
        if not links:
            raise ValueError(f"event {e.id}: no inter link between chiplets {e.a} and {e.b}")
        best = None
        for idx, (ha, hb) in enumerate(links):
            ca, qa = side_cost(e.a, e.a_out, ha)
            cb, qb = side_cost(e.b, e.b_out, hb)
            key = (round(float(ca + cb), 12), idx)
            if best is None or key < best[0]:
                best = (key, ha, hb, qa, qb)
        _, ha, hb, qa, qb = best
        for q, h in ((qa, ha), (qb, hb)):
            # operand walks to its halo; whoever sat there takes its old slot
            other = at[h]
            pos[q], pos[other] = h, pos[q]
            at[pos[q]], at[pos[other]] = q, other
        pos[qa], pos[qb] = hb, ha
        at[ha], at[hb] = qb, qa
        members[e.a].discard(qa)
        members[e.b].discard(qb)
        members[e.a].add(qb)
        members[e.b].add(qa)
        pins.append(PinnedInterSwap(e.id, (ha, hb), qa, qb))
    return pins


def anchored_ops(prog: ChipletProgram, pins: dict[int, PinnedInterSwap]) -> list:
    ops = []
    for x in prog.items:
        if isinstance(x, BoundaryEvent):
            p = pins[x.id]
            if prog.chiplet == x.a:
                ops.append(Anchor(p.a_out, p.link[0], p.b_out, x.id))
            else:
                ops.append(Anchor(p.b_out, p.link[1], p.a_out, x.id))
        else:
            ops.append(x)
    return ops


def _route_task(ops, layout, num_phys, edges, dist, seed, cfg):
    res = route(ops, num_phys, edges, dist, layout, seed, cfg)
    routed = Circuit(num_phys, res.gates)
    lowered = optimize(translate_basis(routed))
    return res.gates, list(lowered.gates), res.final_layout


def route_chiplet(prog: ChipletProgram, layout: dict[int, int], pins: dict[int, PinnedInterSwap],
                  b: Backend, dist=None, seed: int = 0, cfg: SabreConfig = SabreConfig()):
    """Route one chiplet over its intra links; anchors become tagged Barrier markers."""
    dist = _intra_distance(b) if dist is None else dist
    res = route(anchored_ops(prog, pins), b.num_qubits, b.intra_edges(prog.chiplet), dist,
                layout, seed, cfg)
    return Circuit(b.num_qubits, res.gates), res.final_layout


def stitch(programs: list[list[Gate]], pins: list[PinnedInterSwap], num_qubits: int,
           name: str = "") -> Circuit:
    """Merge per-chiplet gate lists; each matched pair of event markers becomes one SWAP."""
    ptr = [0] * len(programs)
    out: list[Gate] = []

    def drain(k):
        prog = programs[k]
        while ptr[k] < len(prog):
            g = prog[ptr[k]]
            if g.kind == GateKind.BARRIER and g.tag is not None:
                return g.tag
            out.append(g)
            ptr[k] += 1
        return None

    heads = [drain(k) for k in range(len(programs))]
    for pin in sorted(pins, key=lambda p: p.event):
        ha, hb = pin.link
        sides = [k for k, h in enumerate(heads) if h == pin.event]
        if len(sides) != 2:
            raise ValueError(f"event {pin.event}: markers found on chiplets {sides}, expected 2")
        marked = {programs[k][ptr[k]].qubits[0] for k in sides}
        if marked != {ha, hb}:
            raise ValueError(f"event {pin.event}: markers on {sorted(marked)}, pinned to {pin.link}")
        out.append(Gate(GateKind.SWAP, (ha, hb)))
        for k in sides:
            ptr[k] += 1
            heads[k] = drain(k)
    leftover = [k for k, h in enumerate(heads) if h is not None]
    if leftover:
        raise ValueError(f"unmatched event markers remain on chiplets {leftover}")
    return Circuit(num_qubits, out, name)


def elaborate(strat: StratifiedCircuit, b: Backend, workers: int = 1, seed: int = 0,
              layout_trials: int = 4, cfg: SabreConfig = SabreConfig()) -> CompiledCircuit:
    _check_backend(strat, b)
    dist = _intra_distance(b)
    progs = chiplet_programs(strat)
    n = strat.circuit.num_qubits

    layout_tasks = [(_layout_task, (layout_view(p), p.occupants, b.chiplets[p.chiplet].qubits,
                                    b.intra_edges(p.chiplet), dist, layout_trials,
                                    derive_seed(seed, p.chiplet), cfg)) for p in progs]
    layouts = run_tasks(layout_tasks, workers)

    pins = place_inter_swaps(strat, layouts, b, dist)
    pin_map = {p.event: p for p in pins}

    route_tasks = [(_route_task, (anchored_ops(p, pin_map), layouts[p.chiplet], b.num_qubits,
                                  b.intra_edges(p.chiplet), dist,
                                  derive_seed(seed, p.chiplet, 1), cfg)) for p in progs]
    results = run_tasks(route_tasks, workers)

    name = strat.circuit.name
    routed = stitch([r[0] for r in results], pins, b.num_qubits, name)
    lowered = stitch([r[1] for r in results], pins, b.num_qubits, name)
    # markers fenced each chiplet's optimizer, so pinned SWAPs cannot have been touched

    init, final = {}, {}
    for lay in layouts:
        init.update({q: p for q, p in lay.items() if q < n})
    for r in results:
        final.update({q: p for q, p in r[2].items() if q < n})
    return CompiledCircuit(lowered, routed, Layout.from_dict(init, n), Layout.from_dict(final, n),
                           b.id, SEQC, seed)


def seqc_compile(c: Circuit, b: Backend, seed: int = 0, workers: int = 1, **kw) -> CompiledCircuit:
    strat = stratify(c, b, seed=seed, workers=workers, **kw)
    return elaborate(strat, b, workers, seed)
