"""Chiplet backends: heavy-hex grid-of-chiplets generator, distances, chiplet graph.

The global lattice is a brick-wall hexagonal lattice with one extra qubit on
every edge (heavy-hex). Lattice vertices sit at integer points ``(x, y)``;
every vertex has a right-going horizontal edge and, when ``x + y`` is even,
an up-going vertical edge. A vertex owns the edge qubits of the edges it
starts, so a 2 x 2 block of vertices owns exactly 10 qubits. A chiplet of
``10 * m`` qubits is ``m`` such blocks stacked vertically; chiplets tile the
lattice along grid lines, and lattice edges that cross a tile boundary
become inter-chiplet links.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .circuit import GateKind

INTRA = "Intra"
INTER = "Inter"
HOPS = "Hops"
FIDELITY = "Fidelity"

# Device calibration (uniform across qubits and links).
T1_S = 20e-6
T2_S = 30e-6
FREQ_HZ = 6e9
INTER_SWAP_NS = 702.4
INTER_SWAP_ERROR = 0.1023
CZ_NS = 34.0
CZ_ERROR = 0.00605
DEFAULT_PENALTY = 4.0
TILE_QUBITS = 10


@dataclass(frozen=True)
class PhysicalQubitSpec:
    t1: float = T1_S
    t2: float = T2_S
    frequency: float = FREQ_HZ

    def __post_init__(self):
        if min(self.t1, self.t2, self.frequency) <= 0:
            raise ValueError("qubit properties must be positive")
        if self.t2 > 2 * self.t1:
            raise ValueError("T2 cannot exceed 2*T1")


@dataclass(frozen=True)
class InstructionSpec:
    kind: GateKind
    duration: float  # ns
    error: float

    def __post_init__(self):
        if self.duration < 0 or not 0 <= self.error < 1:
            raise ValueError(f"bad instruction spec {self}")


def default_instructions() -> dict[GateKind, InstructionSpec]:
    return {
        GateKind.X: InstructionSpec(GateKind.X, 25.0, 0.00109),
        GateKind.SX: InstructionSpec(GateKind.SX, 25.0, 0.00109),
        GateKind.RZ: InstructionSpec(GateKind.RZ, 0.0, 0.0),
        GateKind.MEASURE: InstructionSpec(GateKind.MEASURE, 500.0, 0.00196),
        GateKind.RESET: InstructionSpec(GateKind.RESET, 500.0, 0.00186),
        GateKind.BARRIER: InstructionSpec(GateKind.BARRIER, 0.0, 0.0),
    }


@dataclass(frozen=True)
class Link:
    a: int
    b: int
    scope: str
    kinds: frozenset
    duration: float
    error: float
    # Native intra SWAP (three CZ-based CX) costs, used when a SWAP sits on an intra link.
    swap_duration: float = 0.0
    swap_error: float = 0.0

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("self-loop link")
        if self.scope == INTER and self.kinds != frozenset({GateKind.SWAP}):
            raise ValueError("inter-chiplet links carry SWAP only")
        if self.scope == INTRA and GateKind.CZ not in self.kinds:
            raise ValueError("intra-chiplet links must support CZ")

    @property
    def pair(self) -> frozenset:
        return frozenset((self.a, self.b))

    def gate_spec(self, kind: GateKind) -> tuple[float, float]:
        """(duration ns, error) of ``kind`` executed on this link."""
        if kind not in self.kinds:
            raise ValueError(f"{kind.value} not allowed on {self.scope} link ({self.a},{self.b})")
        if kind == GateKind.SWAP and self.scope == INTRA:
            return self.swap_duration, self.swap_error
        return self.duration, self.error


@dataclass(frozen=True)
class Chiplet:
    id: int
    qubits: tuple[int, ...]
    halo: tuple[int, ...]
    grid_pos: tuple[int, int]


@dataclass
class Backend:
    grid: tuple[int, int]
    qubits_per_chiplet: int
    chiplets: list[Chiplet]
    links: list[Link]
    qubit_spec: PhysicalQubitSpec = field(default_factory=PhysicalQubitSpec)
    instructions: dict = field(default_factory=default_instructions)
    inter_penalty: float = DEFAULT_PENALTY
    name: str = ""

    def __post_init__(self):
        self.num_qubits = sum(len(ch.qubits) for ch in self.chiplets)
        self.chiplet_of = [0] * self.num_qubits
        for ch in self.chiplets:
            for q in ch.qubits:
                self.chiplet_of[q] = ch.id
        self._link = {ln.pair: ln for ln in self.links}
        self.adjacency: list[list[int]] = [[] for _ in range(self.num_qubits)]
        for ln in self.links:
            self.adjacency[ln.a].append(ln.b)
            self.adjacency[ln.b].append(ln.a)
        for nbrs in self.adjacency:
            nbrs.sort()
        self._dist_cache: dict[str, np.ndarray] = {}
        if not self.name:
            r, c = self.grid
            self.name = f"heavyhex-{r}x{c}-q{self.qubits_per_chiplet}-p{self.inter_penalty:g}"

    @property
    def id(self) -> str:
        return self.name

    def link(self, a: int, b: int) -> Link | None:
        return self._link.get(frozenset((a, b)))

    def intra_neighbors(self, q: int) -> list[int]:
        return [p for p in self.adjacency[q] if self.chiplet_of[p] == self.chiplet_of[q]]

    def inter_links(self) -> list[Link]:
        return [ln for ln in self.links if ln.scope == INTER]

    def inter_pairs(self) -> frozenset:
        return frozenset(ln.pair for ln in self.links if ln.scope == INTER)

    def intra_edges(self, chiplet: int) -> list[tuple[int, int]]:
        return [(ln.a, ln.b) for ln in self.links
                if ln.scope == INTRA and self.chiplet_of[ln.a] == chiplet]

    def instruction(self, kind: GateKind) -> InstructionSpec:
        try:
            return self.instructions[kind]
        except KeyError:
            raise ValueError(f"{kind.value} is not a native single-qubit instruction") from None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "grid": list(self.grid),
            "qubits_per_chiplet": self.qubits_per_chiplet,
            "inter_penalty": self.inter_penalty,
            "chiplets": [{"id": ch.id, "qubits": list(ch.qubits), "halo": list(ch.halo),
                          "grid_pos": list(ch.grid_pos)} for ch in self.chiplets],
            "links": [{"a": ln.a, "b": ln.b, "scope": ln.scope,
                       "kinds": sorted(k.value for k in ln.kinds),
                       "duration_ns": ln.duration, "error": ln.error,
                       "swap_duration_ns": ln.swap_duration, "swap_error": ln.swap_error}
                      for ln in self.links],
            "qubit_spec": {"t1_s": self.qubit_spec.t1, "t2_s": self.qubit_spec.t2,
                           "freq_hz": self.qubit_spec.frequency},
            "instructions": {k.value: {"duration_ns": s.duration, "error": s.error}
                             for k, s in self.instructions.items()},
        }

    @classmethod
    def from_json(cls, d: dict) -> Backend:
        chiplets = [Chiplet(c["id"], tuple(c["qubits"]), tuple(c["halo"]), tuple(c["grid_pos"]))
                    for c in d["chiplets"]]
        links = [Link(ln["a"], ln["b"], ln["scope"], frozenset(GateKind(k) for k in ln["kinds"]),
                      ln["duration_ns"], ln["error"], ln.get("swap_duration_ns", 0.0),
                      ln.get("swap_error", 0.0)) for ln in d["links"]]
        qs = d["qubit_spec"]
        instr = {GateKind(k): InstructionSpec(GateKind(k), v["duration_ns"], v["error"])
                 for k, v in d["instructions"].items()}
        return cls(tuple(d["grid"]), d["qubits_per_chiplet"], chiplets, links,
                   PhysicalQubitSpec(qs["t1_s"], qs["t2_s"], qs["freq_hz"]), instr,
                   d.get("inter_penalty", DEFAULT_PENALTY), d.get("name", ""))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def most_square_grid(c: int) -> tuple[int, int]:
    if c < 1:
        raise ValueError("chiplet count must be >= 1")
    rows = max(r for r in range(1, math.isqrt(c) + 1) if c % r == 0)
    return rows, c // rows


def _tile_layout(cells: int) -> list[tuple]:
    """Local qubit order of one tile: lattice nodes keyed relative to the tile origin."""
    order = []
    for y in range(2 * cells):
        for x in (0, 1):
            order.append(("v", x, y))
            order.append(("h", x, y))
            if (x + y) % 2 == 0:
                order.append(("u", x, y))
    return order


def generate_backend(num_chiplets: int, qubits_per_chiplet: int = TILE_QUBITS,
                     inter_penalty: float = DEFAULT_PENALTY) -> Backend:
    if num_chiplets < 1:
        raise ValueError("num_chiplets must be >= 1")
    if qubits_per_chiplet < TILE_QUBITS or qubits_per_chiplet % TILE_QUBITS:
        raise ValueError("chiplet size must be a positive multiple of 10")
    cells = qubits_per_chiplet // TILE_QUBITS
    rows, cols = most_square_grid(num_chiplets)
    width, height = 2 * cols, 2 * cells * rows
    tile = _tile_layout(cells)

    index: dict[tuple, int] = {}
    for r in range(rows):
        for c in range(cols):
            base = (r * cols + c) * qubits_per_chiplet
            for i, (kind, x, y) in enumerate(tile):
                index[(kind, x + 2 * c, y + 2 * cells * r)] = base + i

    edges = []
    for x in range(width):
        for y in range(height):
            v = index[("v", x, y)]
            edges.append((v, index[("h", x, y)]))
            if x + 1 < width:
                edges.append((index[("h", x, y)], index[("v", x + 1, y)]))
            if (x + y) % 2 == 0:
                edges.append((v, index[("u", x, y)]))
                if y + 1 < height:
                    edges.append((index[("u", x, y)], index[("v", x, y + 1)]))

    intra_swap_ns = INTER_SWAP_NS / DEFAULT_PENALTY
    intra_swap_err = 1 - (1 - CZ_ERROR) ** 3
    intra_kinds = frozenset({GateKind.CZ, GateKind.SWAP})
    links = []
    for a, b in sorted((min(e), max(e)) for e in edges):
        if a // qubits_per_chiplet == b // qubits_per_chiplet:
            links.append(Link(a, b, INTRA, intra_kinds, CZ_NS, CZ_ERROR, intra_swap_ns, intra_swap_err))
        else:
            links.append(Link(a, b, INTER, frozenset({GateKind.SWAP}),
                              inter_penalty * intra_swap_ns, INTER_SWAP_ERROR))

    halo: dict[int, set] = {i: set() for i in range(num_chiplets)}
    for ln in links:
        if ln.scope == INTER:
            halo[ln.a // qubits_per_chiplet].add(ln.a)
            halo[ln.b // qubits_per_chiplet].add(ln.b)
    chiplets = [Chiplet(i, tuple(range(i * qubits_per_chiplet, (i + 1) * qubits_per_chiplet)),
                        tuple(sorted(halo[i])), divmod(i, cols)) for i in range(num_chiplets)]
    return Backend((rows, cols), qubits_per_chiplet, chiplets, links, inter_penalty=inter_penalty)


def link_weight(ln: Link, weighting: str) -> float:
    if weighting == HOPS:
        return 1.0
    if weighting == FIDELITY:
        return -math.log1p(-ln.error)
    raise ValueError(f"unknown weighting {weighting!r}")


def distance_matrix(b: Backend, weighting: str = HOPS, links=None) -> np.ndarray:
    """All-pairs shortest-path costs over ``links`` (default: every link)."""
    if links is None:
        cached = b._dist_cache.get(weighting)
        if cached is not None:
            return cached
    use = b.links if links is None else links
    n = b.num_qubits
    rows = [ln.a for ln in use] + [ln.b for ln in use]
    cols = [ln.b for ln in use] + [ln.a for ln in use]
    w = [link_weight(ln, weighting) for ln in use] * 2
    graph = csr_matrix((w, (rows, cols)), shape=(n, n))
    d = shortest_path(graph, method="D", directed=False)
    if links is None:
        if np.isinf(d).any():
            raise ValueError("backend is disconnected")
        d.setflags(write=False)
        b._dist_cache[weighting] = d
    return d


@dataclass(frozen=True)
class ChipletGraph:
    num_chiplets: int
    links: dict  # (i, j) with i < j -> list[Link]

    def neighbors(self, c: int) -> list[int]:
        out = [j for (i, j) in self.links if i == c] + [i for (i, j) in self.links if j == c]
        return sorted(out)

    def edges(self) -> list[tuple[int, int]]:
        return sorted(self.links)

    def hop_distances(self) -> np.ndarray:
        n = self.num_chiplets
        adj = [[] for _ in range(n)]
        for i, j in self.links:
            adj[i].append(j)
            adj[j].append(i)
        d = np.full((n, n), -1, dtype=int)
        for s in range(n):
            d[s, s] = 0
            dq = deque([s])
            while dq:
                u = dq.popleft()
                for v in adj[u]:
                    if d[s, v] < 0:
                        d[s, v] = d[s, u] + 1
                        dq.append(v)
        if (d < 0).any():
            raise ValueError("chiplet graph is disconnected")
        return d


def chiplet_graph(b: Backend) -> ChipletGraph:
    links: dict[tuple[int, int], list[Link]] = {}
    for ln in b.inter_links():
        i, j = sorted((b.chiplet_of[ln.a], b.chiplet_of[ln.b]))
        links.setdefault((i, j), []).append(ln)
    return ChipletGraph(len(b.chiplets), links)
