"""End-to-end runs: single variants, sweeps, shot studies and resource scans."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .circuit.ir import Gate, QuantumCircuit, metrics
from .circuit.synthesis import decompose_to_native
from .fixing import DEFAULT_P_TH, plan_fixings
from .hhl import (
    HHLConfig,
    build_hhl_circuit,
    build_qpe_circuit,
    estimate_from_distribution,
    final_distribution,
    run_hhl,
    sample_distribution,
)
from .optimizer import classical_fidelity, depth_compression, optimize, verify_equivalence
from .problem import ProblemInstance, e_diff, oracle_e_corr, pfd, random_spd_problem
from .scaling import adapt_scaling, make_plan, validate_scaling
from .statevector import EmptyBranchError, init_basis_state

# variant -> (scaling strategy, uses fixing)
VARIANTS = {
    "hhl": ("exact", False),
    "hhlite": ("exact", True),
    "perturbed": ("perturbed", False),
    "perturbedlite": ("perturbed", True),
    "adapt": ("adapt", False),
    "adaptlite": ("adapt", True),
}

FIXING_STRATEGIES = ("classical", "quantum", "lmr")


class StageError(RuntimeError):
    """A pipeline failure tagged with the stage that raised it."""

    def __init__(self, stage, exc):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage
        self.cause = exc


def default_n_r(dim: int) -> int:
    return {2: 3, 4: 6, 8: 7}.get(dim, 8)


@dataclass
class RunConfig:
    variant: str = "hhl"
    n_r: Optional[int] = None
    p_th: float = DEFAULT_P_TH
    mode: str = "exact"
    shots: int = 1000
    repetitions: int = 10
    seed: Optional[int] = 0
    optimize: bool = False
    fixing: str = "classical"
    fix_shots: int = 10_000
    n_e: int = 3
    d_tilde_min: object = "use_d_min"
    xi: float = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {sorted(VARIANTS)}")
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"mode must be 'exact' or 'sampled', got {self.mode!r}")
        if self.fixing not in FIXING_STRATEGIES:
            raise ValueError(f"unknown fixing strategy {self.fixing!r}")
        if not 0.5 < self.p_th <= 1:
            raise ValueError("p_th must lie in (0.5, 1]")
        if self.repetitions < 1 or self.shots < 1:
            raise ValueError("shots and repetitions must be >= 1")

    @property
    def strategy(self) -> str:
        return VARIANTS[self.variant][0]

    @property
    def lite(self) -> bool:
        return VARIANTS[self.variant][1]

    def resolved_n_r(self, problem) -> int:
        return self.n_r if self.n_r is not None else default_n_r(problem.dim)


@dataclass
class ReportRow:
    label: str
    variant: str
    n_t: int
    n_b: int
    n_r: int
    e_corr_oracle: float
    depth: Optional[int] = None
    two_q: Optional[int] = None
    e_corr: Optional[float] = None
    e_diff: Optional[float] = None
    pfd: Optional[float] = None
    n_f: int = 0
    e_corr_std: Optional[float] = None
    success_probability: Optional[float] = None
    compression: Optional[float] = None
    error: Optional[str] = None

    FIELDS = (
        "label", "variant", "n_t", "n_b", "n_r", "e_corr_oracle", "depth", "two_q", "e_corr",
        "e_diff", "pfd", "n_f", "e_corr_std", "success_probability", "compression", "error",
    )

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}


@dataclass
class RunResult:
    row: ReportRow
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"row": self.row.as_dict(), "provenance": self.provenance}, indent=2, default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return str(x)


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:  # annotate and re-raise
        raise StageError(name, exc) from exc


def _optimized_hhl(circuit: QuantumCircuit):
    """Lower and optimize the pre-readout part; the readout stays separate so
    the solution register can still be read before it."""
    start = circuit.metadata["hom_start"]
    pre = decompose_to_native(circuit.with_gates(circuit.gates[:start]))
    post = decompose_to_native(circuit.with_gates(circuit.gates[start:]))
    opt = optimize(pre)
    phase = verify_equivalence(pre, opt)
    fid = classical_fidelity(_probs(pre), _probs(opt))
    out = opt.with_gates(list(opt.gates) + list(post.gates))
    out.metadata["hom_start"] = len(opt.gates)
    before = pre.with_gates(list(pre.gates) + list(post.gates))
    return out, {"phase": phase, "fidelity": fid, "depth_in": metrics(before).depth}


def _probs(c):
    from .circuit.ir import simulate

    return simulate(c, init_basis_state(c.num_qubits, 0)).probabilities()


def run_variant(problem: ProblemInstance, config: RunConfig) -> RunResult:
    """Scale, optionally fix and optimize, build, simulate and report one variant."""
    n_r = config.resolved_n_r(problem)
    oracle = _stage("oracle", oracle_e_corr, problem)
    plan = _stage("scaling", make_plan, config.strategy, problem, n_r, config.d_tilde_min, config.xi)
    fixings = None
    if config.lite:
        fixings = _stage(
            "fixing", plan_fixings, problem, plan, config.fixing, config.p_th,
            config.fix_shots, config.seed, config.n_e,
        )
    hcfg = HHLConfig(n_r=n_r, mode=config.mode, shots=config.shots, seed=config.seed)
    circuit = _stage("build", build_hhl_circuit, problem, plan, hcfg, fixings)
    prov = {
        "config": asdict(config),
        "scaling": plan.as_dict(),
        "fixing": fixings.as_dict() if fixings is not None else None,
    }
    if config.optimize:
        circuit, vinfo = _stage("optimize", _optimized_hhl, circuit)
        prov["verification"] = vinfo
        native = circuit
    else:
        native = _stage("lower", decompose_to_native, circuit)
    m = metrics(native)

    joint, sol = _stage("simulate", final_distribution, circuit)
    meta = circuit.metadata
    energies, p1s = [], []
    if config.mode == "exact":
        runs = [joint]
    else:
        seeds = np.random.SeedSequence(config.seed).spawn(config.repetitions)
        runs = [sample_distribution(joint, config.shots, np.random.default_rng(s)) for s in seeds]
    for dist in runs:
        p1, _, _, e, flags = _stage(
            "readout", estimate_from_distribution, dist, problem.n_b, meta["s"], meta["c"],
            problem.norm_b, config.mode,
        )
        energies.append(e)
        p1s.append(p1)
    e = float(np.mean(energies))
    n_f = fixings.n_f if fixings is not None else 0
    row = ReportRow(
        label=problem.label, variant=config.variant, n_t=2 * problem.n_b + n_r + 1,
        n_b=problem.n_b, n_r=n_r, e_corr_oracle=oracle, depth=m.depth, two_q=m.two_qubit_count,
        e_corr=e, e_diff=e_diff(oracle, e), pfd=pfd(oracle, e), n_f=n_f,
        e_corr_std=float(np.std(energies, ddof=1)) if len(energies) > 1 else 0.0,
        success_probability=float(np.mean(p1s)),
    )
    if config.optimize:
        row.compression = depth_compression(prov["verification"]["depth_in"], m.depth)
    prov["solution_vector"] = sol
    return RunResult(row, prov)


def _sweep_job(args):
    problem, config = args
    try:
        return run_variant(problem, config)
    except Exception as exc:
        n_r = config.resolved_n_r(problem)
        try:
            oracle = oracle_e_corr(problem)
        except Exception:
            oracle = float("nan")
        row = ReportRow(problem.label, config.variant, 2 * problem.n_b + n_r + 1, problem.n_b, n_r,
                        oracle, error=str(exc))
        return RunResult(row, {"error": str(exc)})


@dataclass
class SweepReport:
    results: list

    @property
    def rows(self):
        return [r.row for r in self.results]

    def heatmap(self):
        """``(label, variant, compression_vs_hhl, pfd)`` for every row."""
        base = {r.label: r.depth for r in self.rows if r.variant == "hhl" and r.depth}
        out = []
        for r in self.rows:
            comp = None
            if r.depth is not None and r.label in base:
                comp = depth_compression(base[r.label], r.depth)
            out.append({"label": r.label, "variant": r.variant, "compression": comp, "pfd": r.pfd})
        return out

    def to_csv(self) -> str:
        return _csv([r.as_dict() for r in self.rows], ReportRow.FIELDS)

    def heatmap_csv(self) -> str:
        return _csv(self.heatmap(), ("label", "variant", "compression", "pfd"))


def _csv(rows, fields):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields))
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def run_sweep(instances, configs, workers: int = 1, base_seed: Optional[int] = 0) -> SweepReport:
    """Every (instance, config) pair; failures become rows with ``error`` set.

    Sampled-mode rows get seeds spawned from ``base_seed`` in job order so a
    parallel sweep reproduces the serial one.
    """
    instances, configs = list(instances), list(configs)
    if not instances or not configs:
        raise ValueError("run_sweep needs at least one instance and one config")
    jobs = []
    seeds = np.random.SeedSequence(base_seed).spawn(len(instances) * len(configs))
    for i, p in enumerate(instances):
        for j, c in enumerate(configs):
            cfg = RunConfig(**{**asdict(c), "seed": int(seeds[i * len(configs) + j].generate_state(1)[0])})
            jobs.append((p, cfg))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    return SweepReport(results)


def shot_convergence(problem, config: RunConfig, shot_grid=(100, 300, 1000, 3000, 10000),
                     repetitions: int = 200):
    """Mean and spread of sampled E_corr per shot count.

    The circuit is simulated once; each repetition is an independent
    multinomial draw from the exact outcome distribution.
    """
    n_r = config.resolved_n_r(problem)
    plan = make_plan(config.strategy, problem, n_r, config.d_tilde_min, config.xi)
    fixings = None
    if config.lite:
        fixings = plan_fixings(problem, plan, config.fixing, config.p_th, config.fix_shots, config.seed, config.n_e)
    circ = build_hhl_circuit(problem, plan, HHLConfig(n_r=n_r), fixings)
    joint, _ = final_distribution(circ)
    meta = circ.metadata
    rng = np.random.default_rng(config.seed)
    table = []
    for shots in shot_grid:
        vals, failed = [], 0
        for _ in range(repetitions):
            dist = sample_distribution(joint, shots, rng)
            try:
                vals.append(estimate_from_distribution(
                    dist, problem.n_b, meta["s"], meta["c"], problem.norm_b, "sampled")[3])
            except EmptyBranchError:
                failed += 1
        table.append({
            "shots": shots,
            "mean": float(np.mean(vals)) if vals else float("nan"),
            "std": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
            "runs": len(vals),
            "failed": failed,
        })
    return table


def dmin_sweep(problem, n_r: int, grid):
    """Adapt-variant runs across ``d_tilde_min`` values.

    Points where the largest scaled diagonal entry would reach 1 are marked
    invalid and not run. ``in_window`` flags whether the point lies in
    ``(2**-n_r d_max, d_min]``.
    """
    oracle = oracle_e_corr(problem)
    lo, hi = 2.0 ** -n_r * problem.d_max, problem.d_min
    out = []
    for dt in grid:
        rec = {"d_tilde_min": float(dt), "window_low": lo, "window_high": hi,
               "in_window": bool(lo < dt <= hi), "valid": True}
        try:
            plan = adapt_scaling(problem, n_r, dt)
        except ValueError as exc:
            rec.update(valid=False, error=str(exc))
            out.append(rec)
            continue
        rep = validate_scaling(problem, plan, problem.b)
        circ = build_hhl_circuit(problem, plan, HHLConfig(n_r=n_r))
        o = run_hhl(circ, HHLConfig(n_r=n_r), problem, plan)
        rec.update(
            pfd=pfd(oracle, o.e_corr), p1=o.success_probability, e_corr=o.e_corr,
            norm_x=o.norm_x, spectrum_in_range=rep.in_range,
        )
        out.append(rec)
    return out


def _two_q(gates, n):
    return metrics(decompose_to_native(QuantumCircuit(n, gates=list(gates)))).two_qubit_count


def eqpe_two_qubit_count(n_e: int, trotter_steps: int = 1) -> int:
    """Two-qubit cost of one eigenvalue-readout on a single clock wire.

    Per EQPE control ``m`` there are ``2**m * trotter_steps`` controlled
    partial swaps, plus the inverse transform on the ``n_e`` controls and one
    CX to copy the wire onto its density-matrix register.
    """
    dt = 2 * math.pi / trotter_steps
    from .circuit.ir import _SWAP

    # exp(i SWAP dt) = cos(dt) I + i sin(dt) SWAP
    u = math.cos(dt) * np.eye(4) + 1j * math.sin(dt) * _SWAP
    cswap = _two_q([Gate("OpaqueUnitary", (1, 2), None, ((0, 1),), u)], 3)
    from .hhl import inverse_qft_gates

    iqft = _two_q(inverse_qft_gates(list(range(n_e))), n_e)
    per_wire = sum(2 ** m for m in range(n_e)) * trotter_steps * cswap + iqft + 1
    return int(per_wire)


def resource_scan(n_b_grid, n_r: int, n_e: int = 3, seed: int = 0, trotter_steps: int = 1):
    """Two-qubit counts of QPE, HHL (no readout) and QPE + per-wire EQPE."""
    out = []
    eqpe = eqpe_two_qubit_count(n_e, trotter_steps)
    for n_b in n_b_grid:
        prob = random_spd_problem(1 << n_b, seed=seed + n_b)
        plan = make_plan("exact", prob, n_r)
        qpe = metrics(decompose_to_native(build_qpe_circuit(prob, plan))).two_qubit_count
        hhl = metrics(decompose_to_native(
            build_hhl_circuit(prob, plan, HHLConfig(n_r=n_r, hom=False)))).two_qubit_count
        total = qpe + n_r * eqpe
        out.append({
            "n_b": n_b, "qpe": qpe, "hhl": hhl, "eqpe": n_r * eqpe, "qpe_eqpe": total,
            "ratio": total / hhl if hhl else float("nan"),
        })
    return out


def table_csv(records) -> str:
    if not records:
        return ""
    fields = []
    for r in records:
        for k in r:
            if k not in fields:
                fields.append(k)
    return _csv(records, fields)
