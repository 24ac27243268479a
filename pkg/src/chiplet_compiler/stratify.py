"""Stratification: qubit-to-subcircuit annealing, then chiplet allocation and inter-chiplet routing."""

from __future__ import annotations

import json
import math
import os
import random
from collections import deque
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .circuit import Circuit, Gate, interaction_graph
from .device import Backend, chiplet_graph
from .parallel import run_tasks


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts]).generate_state(1)[0])


# --- qubit-to-subcircuit mapping ------------------------------------------

@dataclass(frozen=True)
class AnnealingConfig:
    t0: float = 200.0
    cooling: float = 0.005
    move_divisor: float = 50.0
    trials_per_core: int = 5
    min_temperature: float = 0.1
    cores: int | None = None
    polish: bool = True

    def __post_init__(self):
        if self.t0 <= 0 or not 0 < self.cooling < 1:
            raise ValueError("need t0 > 0 and 0 < cooling < 1")
        if self.min_temperature <= 0:
            raise ValueError("min_temperature must be positive")

    def moves(self, temperature: float) -> int:
        return max(1, round(temperature / self.move_divisor))

    @property
    def trials(self) -> int:
        return self.trials_per_core * (self.cores or os.cpu_count() or 1)


@dataclass(frozen=True)
class Partition:
    assignment: tuple[int, ...]
    num_subcircuits: int
    capacity: int

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(int(s) for s in self.assignment))
        if any(not 0 <= s < self.num_subcircuits for s in self.assignment):
            raise ValueError("subcircuit id out of range")
        sizes = np.bincount(self.assignment, minlength=self.num_subcircuits)
        if sizes.max(initial=0) > self.capacity:
            raise ValueError("partition violates subcircuit capacity")

    def members(self, s: int) -> list[int]:
        return [q for q, k in enumerate(self.assignment) if k == s]

    def to_json(self) -> dict:
        return {"assignment": list(self.assignment), "num_subcircuits": self.num_subcircuits,
                "capacity": self.capacity}

    @classmethod
    def from_json(cls, d: dict) -> Partition:
        return cls(tuple(d["assignment"]), d["num_subcircuits"], d["capacity"])


def partition_cost(c: Circuit, p: Partition) -> int:
    return sum(1 for g in c.gates if g.is_two_qubit
               and p.assignment[g.qubits[0]] != p.assignment[g.qubits[1]])


def _neighbors(c: Circuit, slots: int) -> list[list[tuple[int, int]]]:
    nbrs = [[] for _ in range(slots)]
    for (a, b), w in interaction_graph(c).items():
        nbrs[a].append((b, w))
        nbrs[b].append((a, w))
    return nbrs


def _swap_delta(nbrs, sub, u, v) -> int:
    su, sv = sub[u], sub[v]
    d = 0
    for w, wt in nbrs[u]:
        if w != v:
            d += wt * ((sub[w] != sv) - (sub[w] != su))
    for w, wt in nbrs[v]:
        if w != u:
            d += wt * ((sub[w] != su) - (sub[w] != sv))
    return d


def _exchange(sub, members, where, u, v):
    su, sv = sub[u], sub[v]
    iu, iv = where[u], where[v]
    members[su][iu], members[sv][iv] = v, u
    where[u], where[v] = iv, iu
    sub[u], sub[v] = sv, su


def _kl_pair(nbrs, sub, members, where, s1: int, s2: int) -> int:
    """One Kernighan-Lin pass between two subcircuits; keeps the best prefix. Returns its delta."""
    locked = set()
    applied, running, best_total, best_len = [], 0, 0, 0
    for _ in range(min(len(members[s1]), len(members[s2]))):
        best = None
        for u in members[s1]:
            if u in locked:
                continue
            for v in members[s2]:
                if v in locked or (not nbrs[u] and not nbrs[v]):
                    continue
                d = _swap_delta(nbrs, sub, u, v)
                if best is None or d < best[0]:
                    best = (d, u, v)
        if best is None:
            break
        d, u, v = best
        _exchange(sub, members, where, u, v)
        locked.update((u, v))
        applied.append((u, v))
        running += d
        if running < best_total:
            best_total, best_len = running, len(applied)
    for u, v in reversed(applied[best_len:]):
        _exchange(sub, members, where, u, v)
    return best_total


def _polish(nbrs, sub, members, where, n) -> int:
    """Kernighan-Lin refinement over every subcircuit pair until no pass improves. Returns total delta."""
    total = 0
    improved = True
    while improved:
        improved = False
        for s1 in range(len(members)):
            for s2 in range(s1 + 1, len(members)):
                d = _kl_pair(nbrs, sub, members, where, s1, s2)
                if d < 0:
                    total += d
                    improved = True
    return total


def _anneal_trial(nbrs, n: int, num_sub: int, capacity: int, cfg: AnnealingConfig,
                  seed: int) -> tuple[int, list[int], int]:
    """One annealing run. Returns (best cost, best assignment, initial cost)."""
    rng = random.Random(seed)
    slots = num_sub * capacity
    order = list(range(slots))  # ids >= n are idle fillers
    rng.shuffle(order)
    members = [order[k * capacity:(k + 1) * capacity] for k in range(num_sub)]
    sub = [0] * slots
    where = [0] * slots

    def load(members):
        for k, mem in enumerate(members):
            for i, q in enumerate(mem):
                sub[q], where[q] = k, i

    load(members)
    cost = sum(w for a in range(n) for b, w in nbrs[a] if a < b and sub[a] != sub[b])
    initial = best_cost = cost
    best = sub[:n]
    if num_sub < 2:
        return cost, best, initial

    t = cfg.t0
    while t >= cfg.min_temperature:
        for _ in range(cfg.moves(t)):
            s1 = rng.randrange(num_sub)
            s2 = rng.randrange(num_sub - 1)
            s2 += s2 >= s1
            u = members[s1][rng.randrange(capacity)]
            v = members[s2][rng.randrange(capacity)]
            d = _swap_delta(nbrs, sub, u, v)
            if d <= 0 or rng.random() < math.exp(-d / t):
                _exchange(sub, members, where, u, v)
                cost += d
                if cost < best_cost:
                    best_cost, best = cost, sub[:n]
        t *= 1 - cfg.cooling

    if cfg.polish:
        # restart descent from the best-seen state, fillers re-packed
        members = [[] for _ in range(num_sub)]
        for q in range(n):
            members[best[q]].append(q)
        fillers = iter(range(n, slots))
        for mem in members:
            mem.extend(next(fillers) for _ in range(capacity - len(mem)))
        load(members)
        best_cost += _polish(nbrs, sub, members, where, n)
        best = sub[:n]
    return best_cost, best, initial


def anneal_partition(c: Circuit, num_subcircuits: int, capacity: int,
                     cfg: AnnealingConfig = AnnealingConfig(), seed: int = 0,
                     trials: int | None = None, workers: int = 1) -> Partition:
    """Best-of-trials simulated annealing; ties go to the lowest trial index."""
    if num_subcircuits < 1 or capacity < 1:
        raise ValueError("need at least one subcircuit of positive capacity")
    if num_subcircuits * capacity < c.num_qubits:
        raise ValueError(f"{num_subcircuits} x {capacity} slots cannot hold {c.num_qubits} qubits")
    trials = trials or cfg.trials
    nbrs = _neighbors(c, num_subcircuits * capacity)
    tasks = [(_anneal_trial, (nbrs, c.num_qubits, num_subcircuits, capacity, cfg,
                              derive_seed(seed, t))) for t in range(trials)]
    results = run_tasks(tasks, workers)
    _, best, _ = min(results, key=lambda r: r[0])  # min() keeps the first of equals
    return Partition(tuple(best), num_subcircuits, capacity)


# --- chiplet allocation ----------------------------------------------------

class Tier(IntEnum):
    SYMBIOTIC = 0
    COMMENSALISTIC = 1
    NEUTRAL = 2
    PARASITIC = 3


@dataclass(frozen=True)
class SwapClass:
    tier: Tier
    net_gain: int
    improved: int
    harmed: int


def classify_swap(moves: dict[int, int], front_gates, loc, chiplet_dist) -> SwapClass:
    """Classify a chiplet-level exchange by its effect on front-layer gates.

    ``moves`` maps each relocated logical qubit to its new chiplet, ``loc``
    gives current chiplets, and ``front_gates`` are operand pairs. Distances
    are chiplet-graph hops; 0 means the gate can run.
    """
    improved = harmed = gain = 0
    for a, b in front_gates:
        if a not in moves and b not in moves:
            continue
        before = chiplet_dist[loc[a], loc[b]]
        after = chiplet_dist[moves.get(a, loc[a]), moves.get(b, loc[b])]
        gain += before - after
        improved += after < before
        harmed += after > before
    if harmed:
        tier = Tier.PARASITIC
    elif improved >= 2:
        tier = Tier.SYMBIOTIC
    elif improved == 1:
        tier = Tier.COMMENSALISTIC
    else:
        tier = Tier.NEUTRAL
    return SwapClass(tier, int(gain), improved, harmed)


@dataclass(frozen=True)
class BoundaryEvent:
    """Inter-chiplet exchange between chiplets ``a`` and ``b``.

    ``a_out`` leaves ``a`` for ``b`` and ``b_out`` goes the other way; ``None``
    stands for an idle slot.
    """

    id: int
    a: int
    b: int
    a_out: int | None
    b_out: int | None
    forced: bool = False

    def partner(self, chiplet: int) -> int:
        return self.b if chiplet == self.a else self.a

    def outgoing(self, chiplet: int) -> int | None:
        return self.a_out if chiplet == self.a else self.b_out

    def incoming(self, chiplet: int) -> int | None:
        return self.b_out if chiplet == self.a else self.a_out

    def to_json(self) -> dict:
        return {"id": self.id, "a": self.a, "b": self.b, "a_out": self.a_out,
                "b_out": self.b_out, "forced": self.forced}

    @classmethod
    def from_json(cls, d: dict) -> BoundaryEvent:
        return cls(d["id"], d["a"], d["b"], d["a_out"], d["b_out"], d.get("forced", False))


@dataclass(frozen=True)
class ChipletAllocation:
    sub_to_chiplet: tuple[int, ...]
    initial_chiplet: tuple[int, ...]  # logical qubit -> chiplet before any event
    routed: tuple  # Gate (logical) or BoundaryEvent, in execution order
    gate_chiplet: tuple  # executing chiplet per routed item (None for events)
    trial: int = 0

    @property
    def events(self) -> list[BoundaryEvent]:
        return [x for x in self.routed if isinstance(x, BoundaryEvent)]


def _allocate_trial(c: Circuit, assignment, num_sub: int, num_chiplets: int, capacity: int,
                    nbr_chiplets, cdist, seed: int, lookahead: int = 20):
    rng = random.Random(seed)
    placement = list(range(num_chiplets))
    rng.shuffle(placement)
    sub_to_chip = tuple(placement[:num_sub])
    n = c.num_qubits
    loc = [sub_to_chip[assignment[q]] for q in range(n)]
    residents = [set() for _ in range(num_chiplets)]
    for q in range(n):
        residents[loc[q]].add(q)
    initial = tuple(loc)

    gates = c.gates
    succs = [[] for _ in gates]
    indeg = [0] * len(gates)
    last = {}
    for j, g in enumerate(gates):
        for q in g.qubits:
            i = last.get(q)
            if i is not None and j not in succs[i]:
                succs[i].append(j)
                indeg[j] += 1
            last[q] = j
    front = {i for i in range(len(gates)) if indeg[i] == 0}
    routed, gate_chip = [], []
    num_events = 0
    stall_limit = 3 * num_chiplets
    idle_selections = 0

    def execute(i):
        g = gates[i]
        routed.append(g)
        gate_chip.append(loc[g.qubits[0]])
        front.discard(i)
        for j in succs[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                front.add(j)

    def exchange(x, target, y, forced=False):
        nonlocal num_events
        src = loc[x]
        residents[src].discard(x)
        residents[target].add(x)
        loc[x] = target
        if y is not None:
            residents[target].discard(y)
            residents[src].add(y)
            loc[y] = src
        routed.append(BoundaryEvent(num_events, src, target, x, y, forced))
        gate_chip.append(None)
        num_events += 1

    def extended(blocked):
        ext, seen = [], set(front)
        dq = deque(blocked)
        while dq and len(ext) < lookahead:
            i = dq.popleft()
            for j in succs[i]:
                if j not in seen:
                    seen.add(j)
                    if gates[j].is_two_qubit:
                        ext.append(gates[j].qubits)
                    dq.append(j)
        return ext[:lookahead]

    def lookahead_cost(moves, ext):
        return int(sum(cdist[moves.get(a, loc[a]), moves.get(b, loc[b])] for a, b in ext))

    def run_ready():
        progressed = True
        while progressed:
            progressed = False
            for i in sorted(front):
                g = gates[i]
                if not g.is_two_qubit or loc[g.qubits[0]] == loc[g.qubits[1]]:
                    execute(i)
                    progressed = True

    def force(i, ext):
        # walk one operand along a shortest chiplet path until the gate can run
        a, b = gates[i].qubits
        while loc[a] != loc[b]:
            here = loc[a]
            step = min(nbr_chiplets[here], key=lambda k: (cdist[k, loc[b]], k))
            pool = [(lookahead_cost({y: here, a: step}, ext), y) for y in sorted(residents[step])
                    if y != b]
            if len(residents[step]) < capacity:
                pool.append((lookahead_cost({a: step}, ext), -1))
            y = min(pool)[1]
            exchange(a, step, None if y < 0 else y, forced=True)

    while True:
        run_ready()
        if not front:
            break
        blocked = sorted(front)
        fgates = [gates[i].qubits for i in blocked]
        ext = extended(blocked)

        if idle_selections >= stall_limit:
            force(blocked[0], ext)
            idle_selections = 0
            continue

        best_key = best_move = None
        index = 0
        for pair in fgates:
            for x in pair:
                here = loc[x]
                for k in nbr_chiplets[here]:
                    options = sorted(residents[k])
                    if len(residents[k]) < capacity:
                        options.append(None)
                    for y in options:
                        moves = {x: k} if y is None else {x: k, y: here}
                        cls = classify_swap(moves, fgates, loc, cdist)
                        key = (cls.tier, -cls.net_gain)
                        if best_key is None or key <= best_key[:2]:
                            key += (lookahead_cost(moves, ext), index)
                            if best_key is None or key < best_key:
                                best_key, best_move = key, (x, k, y)
                        index += 1
        x, k, y = best_move
        exchange(x, k, y)
        if best_key[0] in (Tier.SYMBIOTIC, Tier.COMMENSALISTIC):
            idle_selections = 0
        else:
            idle_selections += 1

    return num_events, sub_to_chip, initial, tuple(routed), tuple(gate_chip)


def allocate_on_graph(c: Circuit, p: Partition, neighbors: list[list[int]], capacity: int,
                      trials: int = 4, seed: int = 0, workers: int = 1) -> ChipletAllocation:
    """Allocation over an abstract chiplet graph given as adjacency lists."""
    num_chiplets = len(neighbors)
    if p.num_subcircuits > num_chiplets:
        raise ValueError(f"{p.num_subcircuits} subcircuits exceed {num_chiplets} chiplets")
    if p.capacity > capacity:
        raise ValueError("subcircuit capacity exceeds chiplet size")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cdist = _hops(neighbors)
    tasks = [(_allocate_trial, (c, p.assignment, p.num_subcircuits, num_chiplets, capacity,
                                neighbors, cdist, derive_seed(seed, 1 << 20, t)))
             for t in range(trials)]
    results = run_tasks(tasks, workers)
    t = min(range(trials), key=lambda i: (results[i][0], i))
    _, sub_to_chip, initial, routed, gate_chip = results[t]
    return ChipletAllocation(sub_to_chip, initial, routed, gate_chip, t)


def _hops(neighbors) -> np.ndarray:
    n = len(neighbors)
    d = np.full((n, n), -1, dtype=int)
    for s in range(n):
        d[s, s] = 0
        dq = deque([s])
        while dq:
            u = dq.popleft()
            for v in neighbors[u]:
                if d[s, v] < 0:
                    d[s, v] = d[s, u] + 1
                    dq.append(v)
    if (d < 0).any():
        raise ValueError("chiplet graph is disconnected")
    return d


def allocate_chiplets(c: Circuit, p: Partition, b: Backend, trials: int = 4, seed: int = 0,
                      workers: int = 1) -> ChipletAllocation:
    """Random subcircuit placements, each routed at chiplet level; fewest events wins."""
    cg = chiplet_graph(b)
    nbrs = [cg.neighbors(k) for k in range(cg.num_chiplets)]
    return allocate_on_graph(c, p, nbrs, b.qubits_per_chiplet, trials, seed, workers)


# --- stratified circuit ----------------------------------------------------

@dataclass(frozen=True)
class StratifiedCircuit:
    """Partition + allocation + per-chiplet programs.

    ``programs[k]`` lists, in order, the logical gates chiplet ``k`` runs and
    the boundary events it takes part in (the same event object appears in
    both partner programs).
    """

    circuit: Circuit
    grid: tuple[int, int]
    qubits_per_chiplet: int
    partition: Partition
    allocation: ChipletAllocation

    @property
    def num_chiplets(self) -> int:
        return self.grid[0] * self.grid[1]

    @property
    def events(self) -> list[BoundaryEvent]:
        return self.allocation.events

    @property
    def programs(self) -> list[list]:
        progs = [[] for _ in range(self.num_chiplets)]
        for item, k in zip(self.allocation.routed, self.allocation.gate_chiplet):
            if isinstance(item, BoundaryEvent):
                progs[item.a].append(item)
                progs[item.b].append(item)
            else:
                progs[k].append(item)
        return progs

    def initial_residents(self, k: int) -> list[int]:
        return [q for q, c in enumerate(self.allocation.initial_chiplet) if c == k]

    def check_consistency(self) -> list[str]:
        """Replays the routed order against chiplet occupancy; returns problems found."""
        problems = []
        events = self.events
        if [e.id for e in events] != list(range(len(events))):
            problems.append("event ids are not a dense 0..E-1 sequence")
        loc = list(self.allocation.initial_chiplet)
        for item, k in zip(self.allocation.routed, self.allocation.gate_chiplet):
            if isinstance(item, BoundaryEvent):
                for q, dst in ((item.a_out, item.b), (item.b_out, item.a)):
                    if q is not None:
                        src = item.partner(dst)
                        if loc[q] != src:
                            problems.append(f"event {item.id}: qubit {q} not on chiplet {src}")
                        loc[q] = dst
            elif any(loc[q] != k for q in item.qubits):
                problems.append(f"gate {item!r} runs on chiplet {k} but operands are elsewhere")
            for c in range(self.num_chiplets):
                if loc.count(c) > self.qubits_per_chiplet:
                    problems.append(f"chiplet {c} over capacity")
        return problems

    def to_json(self) -> dict:
        progs = [[{"event": x.id} if isinstance(x, BoundaryEvent) else {"gate": x.to_json()}
                  for x in prog] for prog in self.programs]
        order = [{"event": x.id} if isinstance(x, BoundaryEvent) else {"chiplet": k}
                 for x, k in zip(self.allocation.routed, self.allocation.gate_chiplet)]
        return {
            "circuit": self.circuit.to_json(),
            "grid": list(self.grid),
            "qubits_per_chiplet": self.qubits_per_chiplet,
            "partition": self.partition.to_json(),
            "sub_to_chiplet": list(self.allocation.sub_to_chiplet),
            "initial_chiplet": list(self.allocation.initial_chiplet),
            "trial": self.allocation.trial,
            "events": [e.to_json() for e in self.events],
            "programs": progs,
            "order": order,
        }

    @classmethod
    def from_json(cls, d: dict) -> StratifiedCircuit:
        events = [BoundaryEvent.from_json(e) for e in d["events"]]
        queues = [deque(Gate.from_json(x["gate"]) for x in prog if "gate" in x)
                  for prog in d["programs"]]
        routed, gate_chip = [], []
        for x in d["order"]:
            if "event" in x:
                routed.append(events[x["event"]])
                gate_chip.append(None)
            else:
                routed.append(queues[x["chiplet"]].popleft())
                gate_chip.append(x["chiplet"])
        alloc = ChipletAllocation(tuple(d["sub_to_chiplet"]), tuple(d["initial_chiplet"]),
                                  tuple(routed), tuple(gate_chip), d.get("trial", 0))
        return cls(Circuit.from_json(d["circuit"]), tuple(d["grid"]), d["qubits_per_chiplet"],
                   Partition.from_json(d["partition"]), alloc)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def stratify(c: Circuit, b: Backend, cfg: AnnealingConfig = AnnealingConfig(), trials: int = 4,
             seed: int = 0, workers: int = 1) -> StratifiedCircuit:
    """Anneal ``ceil(n / chiplet size)`` subcircuits, then allocate them to chiplets."""
    q = b.qubits_per_chiplet
    if c.num_qubits > b.num_qubits:
        raise ValueError(f"{c.num_qubits}-qubit circuit does not fit {b.num_qubits}-qubit backend")
    num_sub = max(1, math.ceil(c.num_qubits / q))
    part = anneal_partition(c, num_sub, q, cfg, seed, workers=workers)
    alloc = allocate_chiplets(c, part, b, trials, seed, workers)
    return StratifiedCircuit(c, tuple(b.grid), q, part, alloc)
