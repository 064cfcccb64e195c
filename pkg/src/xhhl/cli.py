"""Command-line entry point: ``xhhl <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import workbench as wb
from .circuit.ir import dumps, loads
from .circuit.synthesis import decompose_to_native
from .fixing import plan_fixings
from .optimizer import PASS_NAMES, PassPipeline, optimize_and_verify
from .problem import load_problem
from .scaling import make_plan, validate_scaling


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _dtilde(v):
    return "use_d_min" if v in (None, "use_d_min") else float(v)


def _run_config(a, variant=None):
    return wb.RunConfig(
        variant=variant or a.variant, n_r=a.n_r, p_th=a.p_th, mode=a.mode, shots=a.shots,
        repetitions=a.reps, seed=a.seed, optimize=a.optimize, fixing=a.fixing,
        d_tilde_min=_dtilde(a.d_tilde_min), xi=a.xi,
    )


def _add_run_args(p):
    p.add_argument("--variant", default="hhl", choices=sorted(wb.VARIANTS))
    p.add_argument("--n-r", type=int, default=None)
    p.add_argument("--p-th", type=float, default=0.8)
    p.add_argument("--mode", default="exact", choices=["exact", "sampled"])
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--optimize", action="store_true")
    p.add_argument("--fixing", default="classical", choices=list(wb.FIXING_STRATEGIES))
    p.add_argument("--d-tilde-min", default=None)
    p.add_argument("--xi", type=float, default=1.0)


def cmd_solve(a):
    res = wb.run_variant(load_problem(a.instance), _run_config(a))
    if a.json:
        Path(a.json).write_text(res.to_json())
    _emit(wb._csv([res.row.as_dict()], wb.ReportRow.FIELDS), a.out)


def cmd_scale(a):
    prob = load_problem(a.instance)
    plan = make_plan(a.strategy, prob, a.n_r, _dtilde(a.d_tilde_min), a.xi)
    rep = validate_scaling(prob, plan, prob.b)
    _emit(json.dumps({"plan": plan.as_dict(), "report": rep.as_dict()}, indent=2), a.out)


def cmd_fix(a):
    prob = load_problem(a.instance)
    plan = make_plan(a.strategy, prob, a.n_r, _dtilde(a.d_tilde_min), a.xi)
    fx = plan_fixings(prob, plan, a.fixing, a.p_th, a.shots, a.seed, a.n_e)
    _emit(json.dumps(fx.as_dict(), indent=2, default=wb._jsonable), a.out)


def cmd_optimize(a):
    circ = decompose_to_native(loads(Path(a.circuit).read_text()))
    pipeline = PassPipeline(tuple(a.passes.split(","))) if a.passes else None
    out, rep = optimize_and_verify(circ, pipeline, cap=a.cap)
    if a.out:
        Path(a.out).write_text(dumps(out))
    sys.stdout.write(json.dumps(rep.as_dict(), indent=2) + "\n")


def cmd_sweep(a):
    probs = [load_problem(s) for s in a.instances]
    variants = a.variants.split(",") if a.variants else sorted(wb.VARIANTS)
    cfgs = [_run_config(a, v) for v in variants]
    rep = wb.run_sweep(probs, cfgs, workers=a.workers, base_seed=a.seed)
    _emit(rep.to_csv(), a.out)
    if a.heatmap:
        Path(a.heatmap).write_text(rep.heatmap_csv())
    return 0


def cmd_shots(a):
    grid = [int(x) for x in a.grid.split(",")]
    tab = wb.shot_convergence(load_problem(a.instance), _run_config(a), grid, a.reps)
    _emit(wb.table_csv(tab), a.out)


def cmd_dmin(a):
    grid = [float(x) for x in a.grid.split(",")]
    prob = load_problem(a.instance)
    _emit(wb.table_csv(wb.dmin_sweep(prob, a.n_r, grid)), a.out)


def cmd_resources(a):
    grid = [int(x) for x in a.n_b.split(",")]
    tab = wb.resource_scan(grid, a.n_r, a.n_e, a.seed, a.trotter_steps)
    _emit(wb.table_csv(tab), a.out)


def build_parser():
    ap = argparse.ArgumentParser(prog="xhhl", description="HHL-family linear-system workbench")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one variant on one instance")
    p.add_argument("--instance", required=True, help="problem JSON path or fixture name")
    _add_run_args(p)
    p.add_argument("--out")
    p.add_argument("--json", help="write full provenance JSON here")
    p.set_defaults(fn=cmd_solve)

    for name, fn in (("scale", cmd_scale), ("fix", cmd_fix)):
        p = sub.add_parser(name)
        p.add_argument("--instance", required=True)
        p.add_argument("--strategy", default="adapt", choices=["adapt", "perturbed", "exact"])
        p.add_argument("--n-r", type=int, required=True)
        p.add_argument("--d-tilde-min", default=None)
        p.add_argument("--xi", type=float, default=1.0)
        p.add_argument("--out")
        if name == "fix":
            p.add_argument("--fixing", default="classical", choices=list(wb.FIXING_STRATEGIES))
            p.add_argument("--p-th", type=float, default=0.8)
            p.add_argument("--shots", type=int, default=10_000)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--n-e", type=int, default=3)
        p.set_defaults(fn=fn)

    p = sub.add_parser("optimize", help="optimize a circuit text file and verify it")
    p.add_argument("--circuit", required=True)
    p.add_argument("--passes", help=f"comma list from {','.join(PASS_NAMES)}")
    p.add_argument("--cap", type=int, default=12)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("sweep", help="instances x variants report")
    p.add_argument("instances", nargs="+")
    p.add_argument("--variants")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--heatmap")
    _add_run_args(p)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("shots", help="shot-convergence study")
    p.add_argument("--instance", required=True)
    p.add_argument("--grid", default="100,300,1000,3000,10000")
    _add_run_args(p)
    p.set_defaults(reps=200)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_shots)

    p = sub.add_parser("dmin-sweep", help="adapt runs across d_tilde_min values")
    p.add_argument("--instance", required=True)
    p.add_argument("--n-r", type=int, required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_dmin)

    p = sub.add_parser("resources", help="two-qubit counts of QPE, HHL and QPE+EQPE")
    p.add_argument("--n-b", default="1,2,3")
    p.add_argument("--n-r", type=int, default=4)
    p.add_argument("--n-e", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trotter-steps", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_resources)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except Exception as exc:
        sys.stderr.write(f"xhhl {args.command}: error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
