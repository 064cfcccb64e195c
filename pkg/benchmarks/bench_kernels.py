"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--qubits 12 16 20] [--repeat 5]

Also runs one end-to-end HHL solve under each backend in a subprocess,
because the backend is chosen once at import time from XHHL_DISABLE_NUMBA.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from xhhl.kernels import get_backend

E2E = """
import time
from xhhl.problem import random_spd_problem
from xhhl.scaling import exact_scaling
from xhhl.hhl import HHLConfig, solve
from xhhl import kernels
p = random_spd_problem(8, seed=1)
plan = exact_scaling(p, 8)
solve(p, plan, HHLConfig(8))
t = time.perf_counter()
solve(p, plan, HHLConfig(8))
print(kernels.BACKEND, time.perf_counter() - t)
"""


def best_of(fn, repeat):
    fn()  # warm-up (numba compile, caches)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--qubits", type=int, nargs="+", default=[12, 16, 20])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    np_k, nb_k = get_backend("numpy"), get_backend("numba")
    u1 = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    u3 = np.linalg.qr(rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8)))[0]

    print(f"{'kernel':<28}{'n':>4}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for n in args.qubits:
        amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        amps /= np.linalg.norm(amps)
        probs = np.abs(amps) ** 2
        cases = [
            ("1q gate", lambda k: k.apply_matrix(amps, n, u1, np.array([n // 2]), 0, 0)),
            ("1q gate, 2 controls", lambda k: k.apply_matrix(amps, n, u1, np.array([0]), 0b110, 0b010)),
            ("3q gate", lambda k: k.apply_matrix(amps, n, u3, np.array([1, n - 1, 3]), 0, 0)),
            ("marginal over 3 qubits", lambda k: k.marginal(probs, n, np.array([0, n - 1, 2]))),
        ]
        for name, fn in cases:
            a = best_of(lambda: fn(np_k), args.repeat)
            b = best_of(lambda: fn(nb_k), args.repeat)
            print(f"{name:<28}{n:>4}{a * 1e3:>12.3f}{b * 1e3:>12.3f}{a / b:>10.2f}")

    if not args.skip_e2e:
        print("\nend-to-end solve (8x8, n_r=8, 15 qubits)")
        for flag in ("1", ""):
            env = dict(os.environ, XHHL_DISABLE_NUMBA=flag)
            out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
            backend, secs = out.stdout.split()
            print(f"  {backend:<8}{float(secs):8.3f} s")


if __name__ == "__main__":
    main()
