"""Command-line entry point."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .bench import FAMILIES, BenchSpec
from .circuit import Circuit
from .compiled import BASELINE, SEQC, CompiledCircuit
from .device import Backend, generate_backend
from .elaborate import elaborate
from .metrics import measure
from .parallel import default_workers
from .stratify import AnnealingConfig, StratifiedCircuit, stratify
from .sweep import (PIPELINES, SweepConfig, VerificationError, collect, compile_timed,
                    run_sweep, write_csv)
from .verify import Unsupported, permutation_equiv, statevector_equiv, validate_compiled

EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_INPUT = 3


class InputError(ValueError):
    pass


def _load(path, what):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read {what} {path}: {e}") from e


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text)


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.split(",") if x)


def _strs(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip())


def cmd_gen_backend(a):
    b = generate_backend(a.chiplets, a.qubits_per_chiplet, a.penalty)
    _write(a.out, b.dumps())


def cmd_bench(a):
    c = BenchSpec(a.family, a.n, a.seed, a.rounds, a.layers, a.steps).build()
    _write(a.out, c.dumps())


def cmd_stratify(a):
    c = Circuit.from_json(_load(a.circuit, "circuit"))
    b = Backend.from_json(_load(a.backend, "backend"))
    t0 = time.perf_counter()
    s = stratify(c, b, AnnealingConfig(cores=a.cores), a.trials, a.seed, a.workers)
    print(f"stratify: {len(s.events)} boundary events in {time.perf_counter() - t0:.3f}s",
          file=sys.stderr)
    _write(a.out, s.dumps())


def cmd_elaborate(a):
    s = StratifiedCircuit.from_json(_load(a.strat, "stratification"))
    b = Backend.from_json(_load(a.backend, "backend"))
    problems = s.check_consistency()
    if problems:
        raise InputError(f"inconsistent stratification: {problems[0]}")
    t0 = time.perf_counter()
    cc = elaborate(s, b, a.workers, a.seed)
    print(f"elaborate: {time.perf_counter() - t0:.3f}s", file=sys.stderr)
    _write(a.out, cc.dumps())


def cmd_compile(a):
    c = Circuit.from_json(_load(a.circuit, "circuit"))
    b = Backend.from_json(_load(a.backend, "backend"))
    cc, times = compile_timed(c, b, a.pipeline, a.seed, a.workers, AnnealingConfig(cores=a.cores))
    m = measure(cc, b, times["strat_s"], times["elab_s"], times["solve_s"])
    print(json.dumps(m.to_json(), sort_keys=True), file=sys.stderr)
    _write(a.out, cc.dumps())


def cmd_verify(a):
    c = Circuit.from_json(_load(a.original, "circuit"))
    cc = CompiledCircuit.from_json(_load(a.compiled, "compiled circuit"))
    b = Backend.from_json(_load(a.backend, "backend"))
    ok = True
    diags = validate_compiled(cc, b)
    for d in diags:
        print(f"invalid: {d}")
    ok &= not diags
    eq = permutation_equiv(c, cc)
    print(f"permutation_equiv: {'ok' if eq else 'FAIL ' + eq.reason}")
    ok &= bool(eq)
    if a.statevector:
        try:
            f = statevector_equiv(c, cc, a.max_active)
            print(f"statevector fidelity: {f:.12f}")
            ok &= f >= 1 - a.tol
        except Unsupported as e:
            print(f"statevector: unsupported ({e})")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_sweep(a):
    if a.config:
        cfg = SweepConfig.from_json(_load(a.config, "sweep config"))
    else:
        kw = {}
        if a.families:
            kw["families"] = _strs(a.families)
        if a.chiplets:
            kw["chiplets"] = _ints(a.chiplets)
        if a.pipelines:
            kw["pipelines"] = _strs(a.pipelines)
        if a.seeds:
            kw["seeds"] = _ints(a.seeds)
        if a.master_seed is not None:
            kw["master_seed"] = a.master_seed
        kw["workers"] = a.workers
        cfg = SweepConfig(**kw)
    rows = run_sweep(cfg, a.out)
    print(f"sweep: {len(rows)} runs verified, written to {a.out}", file=sys.stderr)


def cmd_report(a):
    rows = collect(a.inp)
    if not rows:
        raise InputError(f"no run records under {a.inp}")
    write_csv(rows, a.out)
    print(f"report: {len(rows)} rows -> {a.out}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chiplet-compiler", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-backend", help="generate a heavy-hex chiplet grid backend")
    s.add_argument("--chiplets", type=int, required=True)
    s.add_argument("--qubits-per-chiplet", type=int, default=10)
    s.add_argument("--penalty", type=float, default=4.0)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_gen_backend)

    s = sub.add_parser("bench", help="generate a benchmark circuit")
    s.add_argument("--family", choices=FAMILIES, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rounds", type=int, default=2)
    s.add_argument("--layers", type=int, default=2)
    s.add_argument("--steps", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_bench)

    def common(s, workers=True):
        s.add_argument("--seed", type=int, default=0)
        if workers:
            s.add_argument("--workers", type=int, default=1)
        s.add_argument("--out")

    s = sub.add_parser("stratify", help="partition and allocate a circuit onto chiplets")
    s.add_argument("--circuit", required=True)
    s.add_argument("--backend", required=True)
    s.add_argument("--trials", type=int, default=4)
    s.add_argument("--cores", type=int, default=None, help="annealing trials = 5 x cores")
    common(s)
    s.set_defaults(fn=cmd_stratify)

    s = sub.add_parser("elaborate", help="lower a stratified circuit onto the device")
    s.add_argument("--strat", required=True)
    s.add_argument("--backend", required=True)
    common(s)
    s.set_defaults(fn=cmd_elaborate)

    s = sub.add_parser("compile", help="run a full pipeline")
    s.add_argument("--pipeline", choices=PIPELINES, default=SEQC)
    s.add_argument("--circuit", required=True)
    s.add_argument("--backend", required=True)
    s.add_argument("--cores", type=int, default=None)
    common(s)
    s.set_defaults(fn=cmd_compile)

    s = sub.add_parser("verify", help="check a compiled circuit against its source")
    s.add_argument("--original", required=True)
    s.add_argument("--compiled", required=True)
    s.add_argument("--backend", required=True)
    s.add_argument("--statevector", action="store_true")
    s.add_argument("--max-active", type=int, default=14)
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(fn=cmd_verify)

    s = sub.add_parser("sweep", help="compile, verify and tabulate a benchmark grid")
    s.add_argument("--config", help="JSON sweep config (overrides the flags below)")
    s.add_argument("--families")
    s.add_argument("--chiplets")
    s.add_argument("--pipelines")
    s.add_argument("--seeds")
    s.add_argument("--master-seed", type=int)
    s.add_argument("--workers", type=int, default=default_workers())
    s.add_argument("--out", default="runs")
    s.set_defaults(fn=cmd_sweep)

    s = sub.add_parser("report", help="aggregate run records into a CSV")
    s.add_argument("--in", dest="inp", default="runs")
    s.add_argument("--out", default="report.csv")
    s.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = args.fn(args)
    except VerificationError as e:
        print(f"verification failed: {e}", file=sys.stderr)
        return EXIT_VERIFY
    except (InputError, ValueError, KeyError, TypeError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK if rc is None else rc


if __name__ == "__main__":
    sys.exit(main())
