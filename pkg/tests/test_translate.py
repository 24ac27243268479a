import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chiplet_compiler.circuit import CX, CZ, SWAP, Barrier, Circuit, Gate, GateKind as G, H, Measure, Rz, X, SX
from chiplet_compiler.translate import BasisSet, normalize_angle, optimize, resynthesize, translate_basis, translate_gate

from oracles import ref_matrix, ref_unitary, same_up_to_phase

DEVICE = {G.X, G.SX, G.RZ, G.CZ, G.MEASURE, G.RESET, G.BARRIER}


def as_ref(gates):
    return [(g.kind.value, g.qubits, g.param) for g in gates]


def remap(gates, qubits):
    pos = {q: i for i, q in enumerate(qubits)}
    return [(k, tuple(pos[q] for q in qs), p) for k, qs, p in as_ref(gates)]


ANGLES = [0.0, 0.3, -1.7, math.pi, math.pi / 2, 2.9, 1e-3]


@pytest.mark.parametrize("gate", [Gate(G.H, (0,)), Gate(G.X, (0,)), Gate(G.SX, (0,))]
                         + [Gate(G.RY, (0,), t) for t in ANGLES] + [Gate(G.RZ, (0,), t) for t in ANGLES])
def test_single_qubit_rules_match_reference(gate):
    out = translate_gate(gate, BasisSet())
    assert {g.kind for g in out} <= DEVICE
    assert same_up_to_phase(ref_unitary(as_ref(out), 1), ref_matrix(gate.kind.value, gate.param), 1e-10)


@pytest.mark.parametrize("gate", [CX(0, 1), CX(1, 0), CZ(0, 1), SWAP(0, 1)]
                         + [Gate(G.RZZ, (0, 1), t) for t in ANGLES])
def test_two_qubit_rules_match_reference(gate):
    out = translate_gate(gate, BasisSet())
    assert {g.kind for g in out} <= DEVICE
    want = ref_unitary(as_ref([gate]), 2)
    assert same_up_to_phase(ref_unitary(as_ref(out), 2), want, 1e-10)


def test_inter_swap_kept_intra_swap_lowered():
    basis = BasisSet(inter_links=frozenset({frozenset((3, 4))}))
    assert translate_gate(SWAP(4, 3), basis) == [SWAP(4, 3)]
    assert sum(g.kind == G.CZ for g in translate_gate(SWAP(2, 3), basis)) == 3


def test_normalize_angle_range():
    assert normalize_angle(-math.pi) == math.pi
    assert normalize_angle(3 * math.pi) == pytest.approx(math.pi)
    assert normalize_angle(2 * math.pi + 0.1) == pytest.approx(0.1)


def test_optimize_examples():
    c = Circuit(2, [X(0), X(0), Rz(0.2, 1), Rz(-0.2, 1), CZ(0, 1), CZ(1, 0)])
    assert list(optimize(c).gates) == []
    c = Circuit(1, [Rz(0.2, 0), Rz(0.3, 0)])
    assert list(optimize(c).gates) == [Rz(0.5, 0)]
    # a single X between the CZs blocks cancellation
    c = Circuit(2, [CZ(0, 1), X(0), CZ(0, 1)])
    assert len(optimize(c).gates) == 3
    # SX SX -> X
    assert list(optimize(Circuit(1, [SX(0), SX(0)])).gates) == [X(0)]


def test_optimize_respects_barriers_measures_and_pinned_swaps():
    c = Circuit(2, [X(0), Barrier(0), X(0)])
    assert len(optimize(c).gates) == 3
    c = Circuit(1, [X(0), Measure(0), X(0)])
    assert len(optimize(c).gates) == 3
    c = Circuit(2, [SWAP(0, 1), SWAP(0, 1)])
    assert list(optimize(c).gates) == []
    assert len(optimize(c, pinned={(1, 0)}).gates) == 2


def test_resynthesize_is_short_and_exact():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a, b, c = rng.uniform(-4, 4, 3)
        u = ref_matrix("Rz", a) @ ref_matrix("Ry", b) @ ref_matrix("Rz", c)
        seq = resynthesize(u, 0)
        assert len(seq) <= 5
        assert same_up_to_phase(ref_unitary(as_ref(seq), 1), u, 1e-9)
    assert resynthesize(np.eye(2), 0) == []
    assert len(resynthesize(ref_matrix("Rz", 0.4), 0)) == 1


@st.composite
def circuits(draw, max_n=3, max_len=25, device_only=False):
    n = draw(st.integers(1, max_n))
    kinds = ["X", "SX", "Rz"] + ([] if device_only else ["H", "Ry"])
    if n > 1:
        kinds += ["CZ"] + ([] if device_only else ["CX", "SWAP", "Rzz"])
    gates = []
    for _ in range(draw(st.integers(0, max_len))):
        k = G(draw(st.sampled_from(kinds)))
        if k.arity == 2:
            qs = tuple(draw(st.permutations(range(n)))[:2])
        else:
            qs = (draw(st.integers(0, n - 1)),)
        p = None
        if k.parametric:
            p = draw(st.sampled_from([0.0, math.pi / 2, -math.pi / 2, math.pi])
                     | st.floats(-7, 7, allow_nan=False))
        gates.append(Gate(k, qs, p))
    return Circuit(n, gates)


@settings(max_examples=80)
@given(circuits())
def test_translation_preserves_unitary(c):
    t = translate_basis(c)
    assert {g.kind for g in t.gates} <= DEVICE
    qs = list(range(c.num_qubits))
    assert same_up_to_phase(ref_unitary(remap(t.gates, qs), c.num_qubits),
                            ref_unitary(remap(c.gates, qs), c.num_qubits), 1e-9)


@settings(max_examples=80)
@given(circuits(device_only=True))
def test_optimize_preserves_unitary_and_is_idempotent(c):
    o = optimize(c)
    assert len(o.gates) <= len(c.gates)
    assert optimize(o).gates == o.gates
    qs = list(range(c.num_qubits))
    assert same_up_to_phase(ref_unitary(remap(o.gates, qs), c.num_qubits),
                            ref_unitary(remap(c.gates, qs), c.num_qubits), 1e-8)
