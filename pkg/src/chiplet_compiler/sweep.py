"""Benchmark sweeps: compile every (family, chiplets, pipeline, seed), verify, persist, tabulate."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from itertools import product
from pathlib import Path

from .baseline import baseline_compile
from .bench import FAMILIES, BenchSpec
from .circuit import Circuit
from .compiled import BASELINE, SEQC, CompiledCircuit
from .device import Backend, generate_backend
from .elaborate import elaborate
from .metrics import MetricsReport, measure
from .parallel import run_tasks
from .stratify import AnnealingConfig, stratify
from .verify import permutation_equiv, validate_compiled

CSV_COLUMNS = ["family", "n", "chiplets", "pipeline", "seed", "esp", "exec_ns", "inter_gates",
               "depth", "gates", "strat_s", "elab_s", "solve_s"]
TIMING_COLUMNS = ("strat_s", "elab_s", "solve_s")
PIPELINES = (SEQC, BASELINE)


class VerificationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    families: tuple[str, ...] = FAMILIES
    chiplets: tuple[int, ...] = (2, 4, 6, 9)
    pipelines: tuple[str, ...] = PIPELINES
    seeds: tuple[int, ...] | None = None
    master_seed: int = 0
    replicates: int = 3
    sizes: dict | None = None  # chiplets -> qubit count; default 10 per chiplet
    workers: int = 1  # sweep-level; elaboration runs serially inside each run
    annealing_cores: int | None = 1
    allocation_trials: int = 4

    def __post_init__(self):
        for p in self.pipelines:
            if p not in PIPELINES:
                raise ValueError(f"unknown pipeline {p!r}")
        for f in self.families:
            BenchSpec(f, 4).build()
        if any(c < 1 for c in self.chiplets):
            raise ValueError("chiplet counts must be positive")

    def run_seeds(self) -> tuple[int, ...]:
        if self.seeds is not None:
            return tuple(self.seeds)
        return tuple(self.master_seed ^ i for i in range(self.replicates))

    def qubits(self, chiplets: int, qubits_per_chiplet: int = 10) -> int:
        if self.sizes and str(chiplets) in self.sizes:
            return int(self.sizes[str(chiplets)])
        return qubits_per_chiplet * chiplets

    @classmethod
    def from_json(cls, d: dict) -> SweepConfig:
        kw = dict(d)
        for key in ("families", "chiplets", "pipelines", "seeds"):
            if kw.get(key) is not None:
                kw[key] = tuple(kw[key])
        known = set(cls.__dataclass_fields__)
        unknown = set(kw) - known
        if unknown:
            raise ValueError(f"unknown sweep config keys: {sorted(unknown)}")
        return cls(**kw)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RunSpec:
    family: str
    n: int
    chiplets: int
    pipeline: str
    seed: int

    @property
    def name(self) -> str:
        return f"{self.family}-n{self.n}-c{self.chiplets}-{self.pipeline}-s{self.seed}"


def compile_timed(c: Circuit, b: Backend, pipeline: str, seed: int, workers: int = 1,
                  cfg: AnnealingConfig = AnnealingConfig(), trials: int = 4
                  ) -> tuple[CompiledCircuit, dict]:
    """Compile with one pipeline; returns the artifact and stage wall-clock seconds."""
    if pipeline == SEQC:
        t0 = time.perf_counter()
        strat = stratify(c, b, cfg, trials, seed, workers)
        t1 = time.perf_counter()
        cc = elaborate(strat, b, workers, seed)
        t2 = time.perf_counter()
        return cc, {"strat_s": t1 - t0, "elab_s": t2 - t1, "solve_s": t2 - t0}
    if pipeline == BASELINE:
        t0 = time.perf_counter()
        cc = baseline_compile(c, b, seed)
        return cc, {"strat_s": None, "elab_s": None, "solve_s": time.perf_counter() - t0}
    raise ValueError(f"unknown pipeline {pipeline!r}")


def row(spec: RunSpec, m: MetricsReport) -> dict:
    return {"family": spec.family, "n": spec.n, "chiplets": spec.chiplets,
            "pipeline": spec.pipeline, "seed": spec.seed, "esp": m.esp,
            "exec_ns": m.exec_time_ns, "inter_gates": m.inter_chiplet_gates, "depth": m.depth,
            "gates": m.gate_count, "strat_s": m.stratify_time_s, "elab_s": m.elaborate_time_s,
            "solve_s": m.solve_time_s}


def execute_run(spec: RunSpec, cfg: SweepConfig, out_dir: str | None) -> dict:
    b = generate_backend(spec.chiplets)
    c = BenchSpec(spec.family, spec.n, spec.seed).build()
    acfg = AnnealingConfig(cores=cfg.annealing_cores)
    cc, times = compile_timed(c, b, spec.pipeline, spec.seed, 1, acfg, cfg.allocation_trials)
    diags = validate_compiled(cc, b)
    if diags:
        raise VerificationError(f"{spec.name}: invalid output: {diags[0]}")
    eq = permutation_equiv(c, cc)
    if not eq:
        raise VerificationError(f"{spec.name}: not equivalent: {eq.reason}")
    m = measure(cc, b, times["strat_s"], times["elab_s"], times["solve_s"])
    record = {"run": asdict(spec), "backend_id": b.id, "metrics": m.to_json(), "row": row(spec, m)}
    if out_dir is not None:
        out = Path(out_dir)
        (out / f"{spec.name}.compiled.json").write_text(cc.dumps())
        (out / f"{spec.name}.json").write_text(json.dumps(record, sort_keys=True, indent=1))
    return record


def enumerate_runs(cfg: SweepConfig) -> list[RunSpec]:
    return [RunSpec(f, cfg.qubits(ch), ch, p, s)
            for ch, f, s, p in product(cfg.chiplets, cfg.families, cfg.run_seeds(), cfg.pipelines)]


def run_sweep(cfg: SweepConfig, out_dir: str | None = None) -> list[dict]:
    """Compile and verify every run; rows come back in enumeration order."""
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "config.json").write_text(json.dumps(cfg.to_json(), sort_keys=True, indent=1))
    runs = enumerate_runs(cfg)
    records = run_tasks([(execute_run, (r, cfg, out_dir)) for r in runs], cfg.workers)
    rows = [r["row"] for r in records]
    if out_dir is not None:
        write_csv(rows, Path(out_dir) / "report.csv")
    return rows


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r[k] is None else r[k]) for k in CSV_COLUMNS})


def collect(run_dir) -> list[dict]:
    """Rows of every per-run record under ``run_dir``, sorted by run key."""
    rows = []
    for p in sorted(Path(run_dir).glob("*.json")):
        if p.name.endswith(".compiled.json") or p.name == "config.json":
            continue
        rows.append(json.loads(p.read_text())["row"])
    rows.sort(key=lambda r: (r["chiplets"], r["family"], r["seed"], r["pipeline"]))
    return rows
