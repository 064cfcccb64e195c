import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xhhl.circuit.ir import QuantumCircuit, simulate
from xhhl.fixing import (
    FixingPlan,
    TrotterBudgetError,
    classical_fix,
    fixing_report,
    forced_plan,
    lmr_fix,
    lmr_plan,
    plan_fixings,
    quantum_fix,
    trotter_repetitions,
    wire_density_matrix,
)
from xhhl.circuit.ir import metrics
from xhhl.circuit.synthesis import decompose_to_native
from xhhl.hhl import HHLConfig, build_hhl_circuit, solve
from xhhl.problem import load_fixture
from xhhl.scaling import adapt_scaling


def product_clock(p0s):
    """Clock register where wire w is 0 with probability p0s[w]."""
    n = len(p0s)

    def build():
        c = QuantumCircuit(registers=[("clock", n)])
        for w, p in enumerate(p0s):
            c.ry(2 * np.arccos(np.sqrt(p)), w)
        return c

    return build


def test_plan_validation():
    with pytest.raises(ValueError):
        FixingPlan.empty(3, p_th=0.4)
    with pytest.raises(ValueError):
        FixingPlan(3, [])


def test_classical_fix_product_state():
    b = product_clock([0.95, 0.5, 0.05])
    plan = classical_fix(simulate(b()), [0, 1, 2], 0.8)
    assert plan.fixed_bits() == {0: 0, 2: 1}
    assert plan.n_f == 2


def test_classical_fix_respects_threshold():
    b = product_clock([0.75, 0.7])
    assert classical_fix(simulate(b()), [0, 1], 0.8).n_f == 0
    assert classical_fix(simulate(b()), [0, 1], 0.7).n_f == 2


def test_quantum_fix_agrees_and_is_seeded():
    b = product_clock([0.97, 0.5, 0.02])
    a = quantum_fix(b(), [0, 1, 2], 0.8, 10_000, seed=4)
    c = quantum_fix(b(), [0, 1, 2], 0.8, 10_000, seed=4)
    assert a.fixed_bits() == c.fixed_bits() == {0: 0, 2: 1}
    with pytest.raises(ValueError):
        quantum_fix(b(), [0], 0.8, 0)


@pytest.mark.parametrize("p0,expect", [(7 / 8, 0.875), (1.0, 1.0), (0.0, 0.0), (0.5, 0.5), (1 / 8, 0.125)])
def test_lmr_readout(p0, expect):
    r = lmr_fix(product_clock([p0]), 0, 3)
    assert r.p1 == pytest.approx(expect)


def test_lmr_fix_bits():
    assert lmr_fix(product_clock([7 / 8]), 0, 3).bit == 0
    assert lmr_fix(product_clock([1 / 8]), 0, 3).bit == 1
    assert not lmr_fix(product_clock([0.5]), 0, 3).fixed


def test_trotter_budget():
    assert trotter_repetitions(2 * np.pi, 3) == int(np.ceil((2 * np.pi) ** 2 * 16))
    with pytest.raises(TrotterBudgetError):
        lmr_fix(product_clock([0.9]), 0, 3, delta_t=0.5)


def test_wire_density_matrix_is_diagonal_marginal():
    rho = wire_density_matrix(product_clock([0.3])(), 0)
    np.testing.assert_allclose(np.real(np.diag(rho)), [0.3, 0.7], atol=1e-12)
    assert np.trace(rho) == pytest.approx(1)


@settings(max_examples=10, deadline=None)
@given(bits=st.lists(st.sampled_from([0.0, 1.0, 0.5]), min_size=1, max_size=3))
def test_planners_agree_on_product_states(bits):
    b = product_clock(bits)
    n = len(bits)
    c = classical_fix(simulate(b()), list(range(n)))
    q = quantum_fix(b(), list(range(n)), shots=10_000, seed=0)
    m = lmr_plan(b, n, 3)
    assert c.fixed_bits() == q.fixed_bits() == m.fixed_bits()


def test_plan_fixings_dispatch():
    p = load_fixture("adapt_2x2")
    plan = adapt_scaling(p, 3)
    assert plan_fixings(p, plan, "classical").provenance == "classical"
    with pytest.raises(ValueError):
        plan_fixings(p, plan, "psychic")


def test_forced_plan_depth_monotone():
    p = load_fixture("h2_4x4")
    plan = adapt_scaling(p, 3)
    depths = []
    for k in range(4):
        fx = forced_plan(p, plan, k)
        assert fx.n_f == k
        circ = build_hhl_circuit(p, plan, HHLConfig(3), fx)
        depths.append(metrics(decompose_to_native(circ)).depth)
    assert depths == sorted(depths, reverse=True)


def test_fixing_report():
    p = load_fixture("adapt_2x2")
    plan = adapt_scaling(p, 3)
    fx = plan_fixings(p, plan)
    a = solve(p, plan, HHLConfig(3))
    b = solve(p, plan, HHLConfig(3), fx)
    rep = fixing_report(fx, a.metrics, b.metrics)
    assert rep["n_f"] == fx.n_f
    assert rep["depth_fixed"] <= rep["depth_unfixed"]
