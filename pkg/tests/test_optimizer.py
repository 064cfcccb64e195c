import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xhhl.circuit.ir import Gate, QuantumCircuit, metrics
from xhhl.optimizer import (
    PASSES,
    EquivalenceError,
    PassPipeline,
    cancel_inverse_pairs,
    classical_fidelity,
    commute_and_cancel,
    commutes,
    depth_compression,
    merge_rotations,
    optimize,
    optimize_and_verify,
    search_pipeline,
    verify_equivalence,
)
from conftest import random_circuit


@pytest.mark.parametrize("name", sorted(PASSES))
@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_each_pass_preserves_unitary(name, seed):
    c = random_circuit(3, 30, seed, native_only=True)
    out = PASSES[name](c)
    verify_equivalence(c, out)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_optimize_never_deepens(seed):
    c = random_circuit(3, 40, seed, native_only=True)
    out = optimize(c)
    verify_equivalence(c, out)
    assert metrics(out).depth <= metrics(c).depth


def test_inverse_pair_cancels():
    c = QuantumCircuit(2)
    c.rx(0.3, 0).rx(-0.3, 0).rxx(0.5, 0, 1).rxx(-0.5, 1, 0)
    assert len(cancel_inverse_pairs(c).gates) == 0


def test_merge_rotations():
    c = QuantumCircuit(1)
    c.rz(0.2, 0).rz(0.3, 0)
    out = merge_rotations(c)
    assert len(out.gates) == 1 and out.gates[0].angle == pytest.approx(0.5)


def test_commute_through_disjoint_gate():
    c = QuantumCircuit(2)
    c.rx(0.3, 0).ry(0.1, 1).rx(-0.3, 0)
    out = commute_and_cancel(c)
    assert [g.kind for g in out.gates] == ["Ry"]


def test_commutation_rules():
    assert commutes(Gate("Rx", (0,), 1.0), Gate("Rxx", (0, 1), 1.0))
    assert not commutes(Gate("Rz", (0,), 1.0), Gate("Rxx", (0, 1), 1.0))
    assert commutes(Gate("Rz", (0,), 1.0), Gate("Rz", (0,), 2.0))


def test_full_turn_is_global_phase_pi():
    a = QuantumCircuit(1)
    a.rz(2 * np.pi, 0)
    assert verify_equivalence(a, QuantumCircuit(1)) == pytest.approx(np.pi)


def test_verify_detects_difference():
    a = QuantumCircuit(1)
    a.rx(0.1, 0)
    with pytest.raises(EquivalenceError):
        verify_equivalence(a, QuantumCircuit(1))


def test_verify_sampled_above_cap():
    a = random_circuit(4, 20, 3, native_only=True)
    phi = verify_equivalence(a, optimize(a), cap=2)
    assert 0 <= phi < 2 * np.pi


def test_pipeline_validation():
    with pytest.raises(ValueError):
        PassPipeline(("merge_rotations", "merge_rotations"))
    with pytest.raises(ValueError):
        PassPipeline(("nope",))


def test_classical_fidelity():
    assert classical_fidelity([0.5, 0.5], [0.5, 0.5]) == pytest.approx(1)
    assert classical_fidelity({0: 1.0}, {1: 1.0}) == 0
    with pytest.raises(ValueError):
        classical_fidelity([0.5, 0.4], [0.5, 0.5])
    with pytest.raises(ValueError):
        classical_fidelity([1.0], [0.5, 0.5])


def test_depth_compression():
    assert depth_compression(100, 40) == 60
    assert depth_compression(10, 10) == 0
    with pytest.raises(ValueError):
        depth_compression(0, 0)


def test_search_pipeline_finds_no_worse_than_default():
    c = random_circuit(3, 30, 11, native_only=True)
    pipe, out, table = search_pipeline(c, max_length=2)
    assert metrics(out).depth == min(table.values())
    assert all(len(set(k)) == len(k) for k in table)
    verify_equivalence(c, out)


def test_optimize_and_verify_report():
    c = random_circuit(3, 30, 2, native_only=True)
    out, rep = optimize_and_verify(c)
    assert rep.fidelity > 0.9999
    assert rep.compression_pct >= 0
    assert rep.depth_out == metrics(out).depth
