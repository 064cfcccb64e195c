import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xhhl.problem import (
    PaddingWarning,
    dyadic_problem,
    e_diff,
    load_fixture,
    load_problem,
    make_problem,
    oracle_e_corr,
    oracle_solution,
    pfd,
    random_spd_problem,
    save_problem,
)


def test_fixtures_load():
    p = load_fixture("adapt_2x2")
    assert p.dim == 2 and p.n_b == 1
    np.testing.assert_allclose(p.b, [0, 1])
    h = load_fixture("h2_4x4")
    assert h.dim == 4 and h.n_b == 2
    assert h.reference_row["e_corr_clc"] == -11.546
    with pytest.raises(KeyError):
        load_fixture("water")


def test_oracle_values_frozen():
    # direct solves of the two bundled systems
    assert oracle_e_corr(load_fixture("adapt_2x2")) == pytest.approx(-1.345291479820628, abs=1e-12)
    assert oracle_e_corr(load_fixture("h2_4x4")) == pytest.approx(-0.5141583594121935, abs=1e-12)


def test_identity_oracle():
    p = make_problem(np.eye(2), [3.0, 4.0])
    assert oracle_e_corr(p) == pytest.approx(-25)


def test_non_hermitian_rejected():
    with pytest.raises(ValueError, match="Hermitian"):
        make_problem([[1, 2], [0, 1]], [1, 0])


def test_shape_errors():
    with pytest.raises(ValueError):
        make_problem([[1, 0], [0, 1]], [1, 0, 0])
    with pytest.raises(ValueError):
        make_problem(np.ones((2, 3)), [1, 0])


def test_padding_to_power_of_two():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = make_problem(np.diag([2.0, 3.0, 4.0]), [1, 1, 1])
    assert p.dim == 4 and p.original_dim == 3
    assert p.A[3, 3] == 1 and p.b[3] == 0
    assert oracle_e_corr(p) == pytest.approx(-(1 / 2 + 1 / 3 + 1 / 4))


def test_padding_warning_when_unit_below_dmin():
    with pytest.warns(PaddingWarning):
        make_problem(np.diag([2.0, 3.0, 4.0]), [1, 1, 1])


def test_singular_rejected():
    p = make_problem([[1, 1], [1, 1]], [1, 0])
    with pytest.raises(np.linalg.LinAlgError):
        oracle_e_corr(p)


def test_round_trip(tmp_path):
    p = make_problem([[1.0, 0.5j], [-0.5j, 2.0]], [1, 1j], label="cplx")
    f = tmp_path / "p.json"
    save_problem(p, f)
    q = load_problem(str(f))
    np.testing.assert_allclose(q.A, p.A)
    np.testing.assert_allclose(q.b, p.b)
    assert load_problem(json.loads(f.read_text())).label == "cplx"
    assert load_problem(f.read_text()).dim == 2


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load_problem("/nonexistent/x.json")


def test_pfd_and_diff_signs():
    # a method that overshoots the magnitude has negative PFD and positive diff
    assert pfd(-10.207, -10.489) == pytest.approx(-2.76, abs=0.01)
    assert e_diff(-10.207, -10.489) == pytest.approx(0.282)
    with pytest.raises(ZeroDivisionError):
        pfd(0.0, 1.0)


@settings(max_examples=30, deadline=None)
@given(dim=st.sampled_from([2, 4, 8]), seed=st.integers(0, 10_000))
def test_random_spd_is_dominant(dim, seed):
    p = random_spd_problem(dim, seed)
    A = p.A.real
    off = np.abs(A).sum(axis=1) - np.abs(np.diag(A))
    assert np.all(np.diag(A) > off)
    assert np.all(np.linalg.eigvalsh(A) > 0)


@settings(max_examples=30, deadline=None)
@given(dim=st.sampled_from([2, 4, 8]), n_r=st.integers(4, 8), seed=st.integers(0, 10_000))
def test_dyadic_eigenvalues(dim, n_r, seed):
    p = dyadic_problem(dim, n_r, seed)
    w = np.linalg.eigvalsh(p.A.real)
    np.testing.assert_allclose(w * 2**n_r, np.round(w * 2**n_r), atol=1e-9)
    assert np.all((w > 0) & (w < 1))


def test_oracle_solution():
    p = load_fixture("adapt_2x2")
    np.testing.assert_allclose(p.A @ oracle_solution(p), p.b, atol=1e-12)
