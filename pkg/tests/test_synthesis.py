import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xhhl.circuit.ir import QuantumCircuit, circuit_unitary, metrics
from xhhl.circuit.synthesis import (
    cx_gates,
    decompose_to_native,
    euler_gates,
    kak_decompose,
    kak_gates,
    multiplexor_gates,
    qsd_gates,
    zyz_angles,
)
from xhhl.optimizer import global_phase_residual
from conftest import random_unitary


def unitary_of(gates, n):
    return circuit_unitary(QuantumCircuit(n, gates=list(gates))).entries


def assert_phase_equal(a, b, tol=1e-9):
    _, res = global_phase_residual(a, b)
    assert res < tol


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_euler_reproduces_one_qubit(seed):
    u = random_unitary(2, seed)
    assert_phase_equal(unitary_of(euler_gates(u, 0), 1), u)


def test_zyz_identity_has_no_gates():
    assert euler_gates(np.eye(2), 0) == []
    assert len(zyz_angles(np.eye(2))) == 3


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_kak_reproduces_two_qubit(seed):
    u = random_unitary(4, seed)
    gates = kak_gates(u, (0, 1))
    assert_phase_equal(unitary_of(gates, 2), u)
    assert sum(g.kind == "Rxx" for g in gates) <= 3


def test_kak_of_local_gate_needs_no_entangler():
    u = np.kron(random_unitary(2, 1), random_unitary(2, 2))
    gates = kak_gates(u, (0, 1))
    assert sum(g.kind == "Rxx" for g in gates) == 0
    _, coeffs, _ = kak_decompose(u)
    # interaction coefficients are zero modulo pi/2
    r = np.mod(np.asarray(coeffs), np.pi / 2)
    assert np.all(np.minimum(r, np.pi / 2 - r) < 1e-8)


def test_cx_template():
    cx = np.eye(4)[:, [0, 3, 2, 1]]  # control bit 0, target bit 1
    assert_phase_equal(unitary_of(cx_gates(0, 1), 2), cx)


@pytest.mark.parametrize("kind", ["Ry", "Rz"])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_multiplexor(kind, k):
    rng = np.random.default_rng(k)
    angles = rng.uniform(-3, 3, 1 << k)
    controls = list(range(1, k + 1))
    got = unitary_of(multiplexor_gates(kind, angles, 0, controls), k + 1)
    want = QuantumCircuit(k + 1)
    for i, a in enumerate(angles):
        want.add(kind, (0,), a, [(q, (i >> j) & 1) for j, q in enumerate(controls)])
    assert_phase_equal(got, circuit_unitary(want).entries)
    assert sum(g.kind == "Rxx" for g in multiplexor_gates(kind, angles, 0, controls)) == 1 << k


@pytest.mark.parametrize("n,cx", [(2, 3), (3, 24), (4, 120)])
def test_qsd(n, cx):
    u = random_unitary(1 << n, n)
    gates = qsd_gates(u, list(range(n)))
    assert_phase_equal(unitary_of(gates, n), u, tol=1e-8)
    assert sum(g.kind == "Rxx" for g in gates) <= cx


def test_decompose_handles_every_kind():
    c = QuantumCircuit(3)
    c.h(0).x(1).cx(0, 2).swap(1, 2)
    c.ry(0.4, 2, controls=[(0, 1), (1, 0)])
    c.ry(-0.9, 2, controls=[(0, 0), (1, 1)])
    c.rz(0.3, 1, controls=[0])
    c.unitary(random_unitary(4, 9), [0, 2], controls=[(1, 1)])
    c.rxx(0.2, 0, 1)
    low = decompose_to_native(c)
    assert low.is_native
    metrics(low)
    assert_phase_equal(circuit_unitary(low).entries, circuit_unitary(c).entries, tol=1e-8)


def test_grouped_rotations_share_one_multiplexor():
    c = QuantumCircuit(3)
    for i in range(4):
        c.ry(0.1 * (i + 1), 0, controls=[(1, i & 1), (2, i >> 1)])
    low = decompose_to_native(c)
    assert metrics(low).two_qubit_count == 4
