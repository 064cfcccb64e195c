import csv
import io

import numpy as np
import pytest

from xhhl.problem import load_fixture, make_problem
from xhhl.workbench import (
    VARIANTS,
    RunConfig,
    StageError,
    dmin_sweep,
    eqpe_two_qubit_count,
    resource_scan,
    run_sweep,
    run_variant,
    shot_convergence,
)


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig("hhlx")
    with pytest.raises(ValueError):
        RunConfig("hhl", mode="noisy")
    with pytest.raises(ValueError):
        RunConfig("adaptlite", fixing="oracle")
    assert RunConfig("adaptlite").lite and not RunConfig("adapt").lite
    assert RunConfig("perturbedlite").strategy == "perturbed"


def test_row_invariants():
    p = load_fixture("adapt_2x2")
    row = run_variant(p, RunConfig("adapt", n_r=3)).row
    assert row.n_t == 2 * row.n_b + row.n_r + 1
    assert row.e_diff == pytest.approx(row.e_corr_oracle - row.e_corr)
    assert row.pfd == pytest.approx((row.e_corr_oracle - row.e_corr) / row.e_corr_oracle * 100)
    assert row.pfd == pytest.approx(1.769, abs=0.01)


@pytest.mark.parametrize("variant", sorted(VARIANTS))
def test_identity_instance_is_exact(variant):
    p = make_problem(np.eye(2), [0.6, 0.8])
    row = run_variant(p, RunConfig(variant, n_r=4)).row
    assert abs(row.pfd) < 1e-6


def test_adaptlite_fixes_everything_on_2x2():
    row = run_variant(load_fixture("adapt_2x2"), RunConfig("adaptlite", n_r=3)).row
    assert row.n_f == 3
    assert row.two_q <= 2


def test_sampled_mode_is_seeded():
    p = load_fixture("adapt_2x2")
    a = run_variant(p, RunConfig("adapt", n_r=3, mode="sampled", seed=9)).row
    b = run_variant(p, RunConfig("adapt", n_r=3, mode="sampled", seed=9)).row
    assert a.e_corr == b.e_corr
    assert a.e_corr_std > 0


def test_optimized_run_keeps_energy():
    p = load_fixture("adapt_2x2")
    plain = run_variant(p, RunConfig("adapt", n_r=3)).row
    res = run_variant(p, RunConfig("adapt", n_r=3, optimize=True))
    assert res.row.e_corr == pytest.approx(plain.e_corr, abs=1e-9)
    assert res.row.compression >= 0
    assert res.provenance["verification"]["fidelity"] > 0.9999


def test_stage_annotation():
    p = load_fixture("adapt_2x2")
    with pytest.raises(StageError, match="scaling"):
        run_variant(p, RunConfig("adapt", n_r=1))


def test_sweep_table_and_ordering():
    fixtures = [load_fixture("adapt_2x2"), load_fixture("h2_4x4")]
    rep = run_sweep(fixtures, [RunConfig(v, n_r=3) for v in VARIANTS])
    assert len(rep.rows) == 12
    for label in {r.label for r in rep.rows}:
        d = {r.variant: r.depth for r in rep.rows if r.label == label}
        assert d["hhl"] >= d["hhlite"] >= d["adaptlite"]
    heat = list(csv.DictReader(io.StringIO(rep.heatmap_csv())))
    assert {h["variant"] for h in heat} == set(VARIANTS)
    assert all(float(h["compression"]) == 0 for h in heat if h["variant"] == "hhl")
    assert len(list(csv.DictReader(io.StringIO(rep.to_csv())))) == 12


def test_sweep_records_failures():
    rep = run_sweep([load_fixture("adapt_2x2")], [RunConfig("adapt", n_r=1), RunConfig("adapt", n_r=3)])
    assert rep.rows[0].error and "scaling" in rep.rows[0].error
    assert rep.rows[1].error is None


def test_sweep_parallel_matches_serial():
    ps = [load_fixture("adapt_2x2")]
    cfgs = [RunConfig("adapt", n_r=3, mode="sampled"), RunConfig("hhl", n_r=3, mode="sampled")]
    a = run_sweep(ps, cfgs, workers=1, base_seed=3)
    b = run_sweep(ps, cfgs, workers=2, base_seed=3)
    assert [r.e_corr for r in a.rows] == [r.e_corr for r in b.rows]


def test_shot_convergence_deterministic_instance():
    # b is an eigenvector with on-grid eigenvalue: no spread at any shot count
    p = make_problem(np.diag([0.5, 0.25]), [0, 1])
    tab = shot_convergence(p, RunConfig("hhl", n_r=3), (100, 1000), repetitions=20)
    assert all(row["std"] == pytest.approx(0, abs=1e-12) for row in tab)


def test_shot_convergence_reproducible():
    p = load_fixture("adapt_2x2")
    cfg = RunConfig("adapt", n_r=3, seed=2)
    assert shot_convergence(p, cfg, (100, 300), 20) == shot_convergence(p, cfg, (100, 300), 20)


def test_dmin_sweep():
    p = load_fixture("adapt_2x2")
    out = dmin_sweep(p, 3, [0.1, 0.5, 0.75, 1.0])
    assert not out[0]["valid"]
    default = run_variant(p, RunConfig("adapt", n_r=3)).row
    assert out[2]["pfd"] == pytest.approx(default.pfd)
    assert out[2]["in_window"] and not out[3]["in_window"]
    assert all(np.isfinite(r["pfd"]) for r in out if r["valid"])


def test_resource_scan():
    tab = resource_scan([1, 2], n_r=3, n_e=2)
    assert all(r["hhl"] > r["qpe"] for r in tab)
    assert tab == resource_scan([1, 2], n_r=3, n_e=2)
    assert eqpe_two_qubit_count(2, 2) > eqpe_two_qubit_count(2, 1)


@pytest.mark.slow
def test_resource_ratio_trends_to_half():
    tab = resource_scan([1, 2, 3, 4], n_r=4)
    ratios = [r["ratio"] for r in tab]
    assert ratios == sorted(ratios, reverse=True)
    assert ratios[-1] < 0.7
