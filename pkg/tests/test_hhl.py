import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xhhl.circuit.ir import QuantumCircuit, circuit_unitary, simulate
from xhhl.fixing import FixingPlan
from xhhl.hhl import (
    HHLConfig,
    bin_bits,
    bin_from_wires,
    build_hhl_circuit,
    build_qpe_circuit,
    correlation_energy,
    hom_overlap,
    hom_parity_sum,
    inverse_qft_gates,
    rotation_angles,
    solution_norm,
    solve,
    state_prep_gates,
)
from xhhl.problem import dyadic_problem, load_fixture, make_problem, oracle_e_corr, oracle_solution
from xhhl.scaling import adapt_scaling, exact_scaling
from xhhl.statevector import Statevector
from conftest import random_state


def test_config_validation():
    with pytest.raises(ValueError):
        HHLConfig(3, mode="noisy")
    with pytest.raises(ValueError):
        HHLConfig(3, c=1.5)
    with pytest.raises(ValueError):
        HHLConfig(3, shots=0)


def test_rotation_angles():
    th = rotation_angles(3, 1 / 8)
    assert th[0] == 0
    assert th[1] == pytest.approx(np.pi)
    assert th[2] == pytest.approx(2 * np.arcsin(0.5))
    with pytest.raises(ValueError, match="i=1"):
        rotation_angles(3, 0.25)
    assert rotation_angles(3, 0.25, clip=True)[1] == pytest.approx(np.pi)


@pytest.mark.parametrize("k", range(8))
def test_bin_bits_round_trip(k):
    bits = bin_bits(k, 3)
    assert bits[0] == k >> 2
    assert bin_from_wires(bits) == k


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 4), seed=st.integers(0, 10_000))
def test_state_prep(n, seed):
    v = random_state(n, seed)
    c = QuantumCircuit(n, gates=state_prep_gates(v, list(range(n))))
    out = simulate(c).amplitudes
    assert abs(np.vdot(v, out)) == pytest.approx(1, abs=1e-10)


def test_state_prep_rejects_unnormalized():
    with pytest.raises(ValueError):
        state_prep_gates([1.0, 1.0], [0])


def test_qpe_reads_exact_eigenphase():
    # s*lambda = 5/8 exactly: QPE lands on bin 5 with certainty
    p = make_problem(np.diag([5 / 8, 3 / 8]), [1, 0])
    plan = exact_scaling(p, 3)
    plan.s = 1.0
    circ = build_qpe_circuit(p, plan)
    out = simulate(circ)
    clock = list(circ.register("clock"))
    probs = out.probabilities()
    k = int(np.argmax(probs))
    bits = [(k >> q) & 1 for q in clock]
    assert bin_from_wires(bits) == 5
    assert probs[k] == pytest.approx(1)


def test_inverse_qft_is_unitary_inverse_of_fourier():
    n = 3
    u = circuit_unitary(QuantumCircuit(n, gates=inverse_qft_gates(list(range(n))))).entries
    assert np.allclose(u @ u.conj().T, np.eye(8))


def test_hom_parity_of_identical_states():
    # HOM on |b>|b> gives overlap 1
    v = Statevector.from_vector(random_state(2, 1))
    assert hom_overlap(v, v) == pytest.approx(1, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 3), seed=st.integers(0, 10_000))
def test_hom_overlap_matches_inner_product(n, seed):
    a = Statevector.from_vector(random_state(n, seed))
    b = Statevector.from_vector(random_state(n, seed + 1))
    assert hom_overlap(a, b) == pytest.approx(abs(np.vdot(b.amplitudes, a.amplitudes)), abs=1e-10)


def test_hom_parity_sum_sign():
    probs = np.zeros(4)
    probs[3] = 1.0  # alpha = beta = 1 -> parity odd
    assert hom_parity_sum(probs, 1) == -1


def test_energy_helpers():
    assert correlation_energy(0.5, 2.0, 3.0) == pytest.approx(-9.0)
    with pytest.raises(ValueError):
        correlation_energy(1.5, 1, 1)
    assert solution_norm(0.25, 0.5) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        solution_norm(0, 1)


def test_adapt_2x2_frozen():
    p = load_fixture("adapt_2x2")
    out = solve(p, adapt_scaling(p, 3), HHLConfig(3))
    assert out.success_probability == pytest.approx(0.9864635529732141, abs=1e-10)
    assert out.e_corr == pytest.approx(-1.3214904912218404, abs=1e-10)
    assert out.norm_x == pytest.approx(solution_norm(out.success_probability, 0.75))


def test_dyadic_instance_is_exact():
    p = dyadic_problem(4, 5, seed=3)
    out = solve(p, exact_scaling(p, 5), HHLConfig(5))
    assert out.e_corr == pytest.approx(oracle_e_corr(p), rel=1e-8)
    x = oracle_solution(p)
    assert abs(np.vdot(x / np.linalg.norm(x), out.solution_vector)) == pytest.approx(1, abs=1e-8)


def test_exact_mode_is_bit_reproducible():
    p = load_fixture("h2_4x4")
    plan = adapt_scaling(p, 3)
    a = solve(p, plan, HHLConfig(3)).e_corr
    b = solve(p, plan, HHLConfig(3)).e_corr
    assert a == b


def test_sampled_mode_seeded():
    p = load_fixture("adapt_2x2")
    plan = adapt_scaling(p, 3)
    a = solve(p, plan, HHLConfig(3, mode="sampled", seed=5)).e_corr
    b = solve(p, plan, HHLConfig(3, mode="sampled", seed=5)).e_corr
    assert a == b
    assert a == pytest.approx(-1.3215, abs=0.05)


def test_fixing_plan_register_mismatch():
    p = load_fixture("adapt_2x2")
    plan = adapt_scaling(p, 3)
    with pytest.raises(ValueError):
        build_hhl_circuit(p, plan, HHLConfig(3), FixingPlan.empty(4))
    with pytest.raises(ValueError):
        build_hhl_circuit(p, plan, HHLConfig(4))


def test_fully_fixed_circuit_has_no_clock_gates():
    p = load_fixture("adapt_2x2")
    plan = adapt_scaling(p, 3)
    fx = FixingPlan.from_bits(3, {0: 0, 1: 1, 2: 0})
    circ = build_hhl_circuit(p, plan, HHLConfig(3), fx)
    clock = set(circ.register("clock"))
    assert not any(set(g.support) & clock for g in circ.gates)
