from dataclasses import replace

import pytest

from chiplet_compiler.baseline import baseline_compile
from chiplet_compiler.bench import BenchSpec, ghz, vqe
from chiplet_compiler.circuit import CZ, Circuit, Gate, GateKind as G
from chiplet_compiler.compiled import Layout
from chiplet_compiler.device import generate_backend
from chiplet_compiler.elaborate import seqc_compile
from chiplet_compiler.stratify import AnnealingConfig
from chiplet_compiler.verify import (Unsupported, permutation_equiv, statevector_equiv,
                                     validate_compiled)

B2 = generate_backend(2)
ONE_CORE = AnnealingConfig(cores=1)


@pytest.fixture(scope="module")
def compiled():
    c = vqe(12, seed=1)
    return c, seqc_compile(c, B2, seed=1, cfg=ONE_CORE), baseline_compile(c, B2, seed=1)


def drop_first_swap(cc):
    i = next(j for j, g in enumerate(cc.routed.gates) if g.kind == G.SWAP)
    return replace(cc, routed=cc.routed.with_gates(cc.routed.gates[:i] + cc.routed.gates[i + 1:]))


def test_good_outputs_pass(compiled):
    c, seqc, base = compiled
    for cc in (seqc, base):
        assert validate_compiled(cc, B2) == []
        assert permutation_equiv(c, cc)
        assert statevector_equiv(c, cc, max_active=20) >= 1 - 1e-9


def test_deleted_swap_is_caught(compiled):
    c, seqc, base = compiled
    for cc in (seqc, base):
        bad = drop_first_swap(cc)
        res = permutation_equiv(c, bad)
        assert not res and res.reason


def test_cz_on_inter_link_gives_one_diagnostic(compiled):
    _, seqc, _ = compiled
    ln = B2.inter_links()[0]
    bad = replace(seqc, circuit=seqc.circuit.with_gates(seqc.circuit.gates + (CZ(ln.a, ln.b),)))
    diags = validate_compiled(bad, B2)
    assert len(diags) == 1 and "inter" in diags[0].lower()


def test_non_device_gate_and_bad_layout_flagged(compiled):
    _, seqc, _ = compiled
    bad = replace(seqc, circuit=seqc.circuit.with_gates(seqc.circuit.gates + (Gate(G.H, (0,)),)))
    assert len(validate_compiled(bad, B2)) == 1
    bad = replace(seqc, initial_layout=Layout(seqc.initial_layout.physical[:1] + (99,) + seqc.initial_layout.physical[2:]))
    assert any("leaves" in d for d in validate_compiled(bad, B2))


def test_perturbed_angle_lowers_fidelity(compiled):
    c, seqc, _ = compiled
    gates = list(seqc.circuit.gates)
    # an Rz sandwiched between SX gates changes the state (a leading Rz on |0> would not)
    i = next(j for j in range(1, len(gates) - 1) if gates[j].kind == G.RZ
             and gates[j - 1].kind == G.SX and gates[j - 1].qubits == gates[j].qubits)
    gates[i] = Gate(G.RZ, gates[i].qubits, gates[i].param + 0.05)
    bad = replace(seqc, circuit=seqc.circuit.with_gates(gates))
    assert statevector_equiv(c, bad, max_active=20) < 1 - 1e-4
    assert not permutation_equiv(c, bad)


def test_wrong_final_layout_caught(compiled):
    c, _, base = compiled
    p = list(base.final_layout.physical)
    p[0], p[1] = p[1], p[0]
    assert not permutation_equiv(c, replace(base, final_layout=Layout(tuple(p))))


def test_statevector_limits():
    c = BenchSpec("bitcode", 5).build()
    cc = baseline_compile(c, B2)
    with pytest.raises(Unsupported):
        statevector_equiv(c, cc)
    big = ghz(16)
    with pytest.raises(Unsupported):
        statevector_equiv(big, baseline_compile(big, B2), max_active=10)
