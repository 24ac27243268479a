"""Acceptance suite: one recorded PASS/FAIL line per criterion (see the terminal summary)."""

import math
import os
import time

import numpy as np
import pytest

from chiplet_compiler.baseline import baseline_compile, peephole_correct, sabre_layout, sabre_route
from chiplet_compiler.bench import FAMILIES, BenchSpec
from chiplet_compiler.circuit import CX, CZ, SWAP, Circuit, Gate, GateKind as G, X
from chiplet_compiler.compiled import BASELINE, SEQC, CompiledCircuit, Layout
from chiplet_compiler.device import HOPS, INTER, INTRA, chiplet_graph, distance_matrix, generate_backend
from chiplet_compiler.elaborate import elaborate, seqc_compile
from chiplet_compiler.metrics import esp, exec_time, geomean_ratio
from chiplet_compiler.stratify import AnnealingConfig, anneal_partition, partition_cost, stratify
from chiplet_compiler.sweep import TIMING_COLUMNS, SweepConfig, VerificationError, enumerate_runs, execute_run, run_sweep
from chiplet_compiler.translate import BasisSet, optimize, translate_gate
from chiplet_compiler.verify import statevector_equiv

from conftest import record
from oracles import min_partition_cost, ref_unitary

SUITE = SweepConfig(families=FAMILIES, chiplets=(1, 2, 4, 6, 9), master_seed=2024, replicates=3)


@pytest.fixture(scope="session")
def suite():
    """Every run of the correctness grid, verified; failures are kept, not raised."""
    t0 = time.perf_counter()
    rows, failures = [], []
    for spec in enumerate_runs(SUITE):
        try:
            rows.append(execute_run(spec, SUITE, None)["row"])
        except VerificationError as e:
            failures.append(str(e))
    return rows, failures, time.perf_counter() - t0


def test_c1_correctness_grid(suite):
    rows, failures, elapsed = suite
    total = len(rows) + len(failures)
    ok = not failures and total == 5 * 5 * 2 * 3 and elapsed < 600
    record(1, ok, f"{len(rows)}/{total} runs valid and permutation-equivalent in {elapsed:.0f}s "
                  f"(limit 600s)")
    assert ok, failures[:3]


STATEVECTOR_CASES = [("ghz", n) for n in (2, 5, 8, 12)] + [("vqe", n) for n in (2, 6, 10)] + \
    [("hamiltonian", n) for n in (2, 6, 10)]


def test_c2_statevector_fidelity():
    b = generate_backend(2)
    worst, detail = 1.0, ""
    for fam, n in STATEVECTOR_CASES:
        c = BenchSpec(fam, n, seed=n).build()
        for cc in (seqc_compile(c, b, seed=n), baseline_compile(c, b, seed=n)):
            # SEQC may touch spare wires on the second chiplet; 20 bounds a 2-chiplet device
            f = statevector_equiv(c, cc, max_active=20)
            if f < worst:
                worst, detail = f, f"{fam}({n}) {cc.pipeline}"
    ok = worst >= 1 - 1e-9
    record(2, ok, f"min fidelity {worst:.15f} ({detail or 'all'}) over {len(STATEVECTOR_CASES)} "
                  f"circuits x 2 pipelines, threshold 1-1e-9")
    assert ok


def hand_built_peephole():
    b = generate_backend(2)
    ln = b.inter_links()[0]
    n = b.num_qubits
    init = Layout(tuple(range(n)))
    routed = Circuit(n, [CX(ln.a, ln.b)])
    cc = peephole_correct(CompiledCircuit(routed, routed, init, init, b.id, BASELINE, 0), b)
    swaps = [g for g in cc.routed.gates if g.kind == G.SWAP]
    scopes = sorted(b.link(*g.qubits).scope for g in swaps)
    where = list(range(n))
    for g in swaps:
        x, y = g.qubits
        where[x], where[y] = where[y], where[x]
    return len(swaps) == 4 and scopes == [INTER, INTER, INTRA, INTRA] and where == list(range(n))


def test_c3_peephole_four_swaps():
    checked, bad = 0, []
    if not hand_built_peephole():
        bad.append("hand-built single inter CX")
    for chiplets, fam in ((2, "ghz"), (4, "bitcode"), (6, "vqe"), (9, "hamiltonian")):
        b = generate_backend(chiplets)
        c = BenchSpec(fam, 10 * chiplets).build()
        dist = distance_matrix(b, HOPS)
        init = sabre_layout(c, b, dist)
        routed, final = sabre_route(c, b, dist, init)
        cc = peephole_correct(CompiledCircuit(routed, routed, init, final, b.id, BASELINE, 0), b)
        illegal = [g for g in routed.gates if g.is_two_qubit and g.kind != G.SWAP
                   and b.link(*g.qubits).scope == INTER]
        before = [g for g in routed.gates if g.kind == G.SWAP]
        after = [g for g in cc.routed.gates if g.kind == G.SWAP]
        if len(after) - len(before) != 4 * len(illegal):
            bad.append(f"{fam}: swap delta {len(after) - len(before)} for {len(illegal)} gates")
        # each inserted block: 2 inter + 2 intra SWAPs, net permutation identity
        gates = list(cc.routed.gates)
        i = j = 0
        while i < len(routed.gates):
            g = routed.gates[i]
            if g in illegal and g.is_two_qubit:
                block = gates[j:j + 5]
                swaps = [x for x in block if x.kind == G.SWAP]
                scopes = sorted(b.link(*x.qubits).scope for x in swaps)
                perm = {}
                for x in swaps:
                    u, v = x.qubits
                    perm[u], perm[v] = perm.get(v, v), perm.get(u, u)
                if scopes != [INTER, INTER, INTRA, INTRA] or any(k != v for k, v in perm.items()):
                    bad.append(f"{fam}: malformed block at {j}")
                checked += 1
                j += 5
            else:
                j += 1
            i += 1
        assert cc.final_layout == final
    ok = not bad and checked > 0
    record(3, ok, f"hand-built inter CX plus {checked} SABRE-routed inter gates: +4 SWAPs each (2 inter, 2 intra), net layout unchanged"
           + (f"; problems: {bad[:2]}" if bad else ""))
    assert ok


def test_c4_backend():
    b = generate_backend(12)
    inter = b.inter_links()
    intra_swap = next(ln for ln in b.links if ln.scope == INTRA).gate_spec(G.SWAP)[0]
    deg = {}
    for ln in b.links:
        deg[ln.a] = deg.get(ln.a, 0) + 1
        deg[ln.b] = deg.get(ln.b, 0) + 1
    checks = {
        "grid 3x4": b.grid == (3, 4),
        "inter 702.4ns": all(abs(ln.duration - 702.4) < 1e-9 for ln in inter),
        "inter error 10.23%": all(ln.error == 0.1023 for ln in inter),
        "ratio 4": all(ln.duration / intra_swap == 4.0 for ln in inter),
        "max degree <= 3": max(deg.values()) <= 3,
        "17 chiplet adjacencies": len(chiplet_graph(b).edges()) == 17,
    }
    ok = all(checks.values())
    record(4, ok, ", ".join(f"{k}: {'ok' if v else 'NO'}" for k, v in checks.items()))
    assert ok


def random_instance(seed, n, gates):
    rng = np.random.default_rng(seed)
    pairs = [tuple(int(x) for x in rng.choice(n, 2, replace=False)) for _ in range(gates)]
    return pairs, Circuit(n, [CX(a, b) for a, b in pairs])


def test_c5_annealer_vs_exhaustive():
    cfg = AnnealingConfig(cores=1)
    rates = {}
    for n, s, cap in ((4, 2, 2), (6, 2, 3)):
        hits = 0
        for seed in range(100):
            pairs, c = random_instance(seed, n, 8)
            p = anneal_partition(c, s, cap, cfg, seed)
            hits += partition_cost(c, p) == min_partition_cost(pairs, n, s, cap)
        rates[f"{n}q/{s}x{cap}"] = hits
    block = [CX(i, i + 1) for i in range(9)]
    two_ghz = Circuit(20, [Gate(G.H, (0,)), Gate(G.H, (10,))] + block
                      + [g.on(*(q + 10 for q in g.qubits)) for g in block])
    zero = sum(partition_cost(two_ghz, anneal_partition(two_ghz, 2, 10, cfg, seed)) == 0
               for seed in range(100))
    ok = all(h >= 95 for h in rates.values()) and zero == 100
    record(5, ok, ", ".join(f"{k}: {h}/100 optimal" for k, h in rates.items())
           + f", disjoint GHZ(10)x2 cost 0 in {zero}/100 seeds")
    assert ok


def test_c6_inter_chiplet_reduction(suite):
    rows, _, _ = suite
    by = {}
    for r in rows:
        if r["chiplets"] in (4, 6, 9):
            by.setdefault((r["family"], r["chiplets"], r["seed"]), {})[r["pipeline"]] = r["inter_gates"]
    pairs = [(v[SEQC], v[BASELINE]) for v in by.values() if SEQC in v and BASELINE in v]
    ratio = geomean_ratio(pairs)
    per = {}
    for (fam, ch, _), v in by.items():
        per.setdefault(ch, []).append((v[SEQC], v[BASELINE]))
    ok = ratio <= 0.67
    record(6, ok, f"geomean SEQC/baseline inter-chiplet gates {ratio:.3f} over {len(pairs)} runs "
                  f"(target <= 0.67); by chiplets "
           + ", ".join(f"{k}: {geomean_ratio(v):.3f}" for k, v in sorted(per.items())))
    assert ok


def test_c7_metric_units():
    b = generate_backend(2)
    intra = next(ln for ln in b.links if ln.scope == INTRA)
    inter = b.inter_links()[0]
    e = esp(Circuit(20, [CZ(intra.a, intra.b)]), b)
    t_xx = exec_time(Circuit(20, [X(0), X(0)]), b)
    t_sw = exec_time(Circuit(20, [SWAP(inter.a, inter.b)]), b)
    ok = abs(e - 0.99395) <= 1e-6 and t_xx == 50.0 and t_sw == 702.4
    record(7, ok, f"CZ ESP {e:.7f}, [X;X] {t_xx} ns, inter SWAP {t_sw} ns")
    assert ok


@pytest.fixture(scope="session")
def bitcode90():
    b = generate_backend(9)
    s = stratify(BenchSpec("bitcode", 90).build(), b, AnnealingConfig(cores=1), seed=9)
    return s, b


def test_c8_determinism(bitcode90, suite, tmp_path):
    s, b = bitcode90
    outs = {w: elaborate(s, b, workers=w, seed=9).dumps() for w in (1, 4, 8)}
    same_elab = len(set(outs.values())) == 1
    # rerun the whole correctness grid with the same master seed
    rows, failures, _ = suite
    key = lambda rows: [{k: v for k, v in r.items() if k not in TIMING_COLUMNS} for r in rows]
    first = key(rows)
    try:
        again = key(run_sweep(SUITE, tmp_path / "rerun"))
    except VerificationError:
        again = None
    same_sweep = not failures and first == again
    ok = same_elab and same_sweep
    record(8, ok, f"elaboration identical for workers 1/4/8: {same_elab}; "
                  f"sweep rerun ({len(first)} rows) identical non-timing columns: {same_sweep}")
    assert ok


def test_c9_parallel_speedup(bitcode90):
    s, b = bitcode90
    times = {}
    for w in (1, 8):
        t0 = time.perf_counter()
        elaborate(s, b, workers=w, seed=9)
        times[w] = time.perf_counter() - t0
    ratio = times[8] / times[1]
    cores = os.cpu_count() or 1
    detail = f"8 workers {times[8]:.2f}s vs 1 worker {times[1]:.2f}s, ratio {ratio:.2f} (target <= 0.7)"
    if cores < 8:
        record(9, None, f"{detail}; report only, host has {cores} core(s)")
    else:
        record(9, ratio <= 0.7, detail)
        assert ratio <= 0.7


RULE_GATES = [Gate(G.H, (0,)), Gate(G.X, (0,)), Gate(G.SX, (0,)), CX(0, 1), CX(1, 0), CZ(0, 1),
              SWAP(0, 1)] + [Gate(k, (0,) if k != G.RZZ else (0, 1), t)
                             for k in (G.RZ, G.RY, G.RZZ)
                             for t in np.linspace(-2 * math.pi, 2 * math.pi, 17)]


def fuzz_circuit(rng):
    n = int(rng.integers(1, 5))
    kinds = [G.X, G.SX, G.RZ, G.MEASURE, G.BARRIER] + ([G.CZ, G.SWAP] if n > 1 else [])
    gates = []
    for _ in range(int(rng.integers(0, 40))):
        k = kinds[int(rng.integers(len(kinds)))]
        qs = tuple(int(q) for q in rng.permutation(n)[:k.arity])
        p = float(rng.choice([0.0, math.pi / 2, math.pi, -math.pi / 2, rng.uniform(-7, 7)])) \
            if k == G.RZ else None
        gates.append(Gate(k, qs, p))
    return Circuit(n, gates)


def test_c10_translation_and_optimizer():
    worst = 0.0
    for g in RULE_GATES:
        n = g.kind.arity
        out = translate_gate(g, BasisSet())
        u = ref_unitary([(x.kind.value, x.qubits, x.param) for x in out], n)
        want = ref_unitary([(g.kind.value, g.qubits, g.param)], n)
        k = np.unravel_index(np.argmax(np.abs(want)), want.shape)
        err = float(np.max(np.abs(u * (want[k] / u[k]) - want)))
        worst = max(worst, err)
    rng = np.random.default_rng(10)
    bad = 0
    for _ in range(1000):
        c = fuzz_circuit(rng)
        o = optimize(c)
        bad += len(o.gates) > len(c.gates) or optimize(o).gates != o.gates
    ok = worst <= 1e-10 and bad == 0
    record(10, ok, f"{len(RULE_GATES)} rule instances, max matrix deviation {worst:.1e} (tol 1e-10); "
                   f"optimizer idempotent and non-increasing on {1000 - bad}/1000 fuzzed circuits")
    assert ok
