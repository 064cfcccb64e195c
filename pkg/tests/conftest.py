import numpy as np
import pytest
from scipy.stats import unitary_group

from xhhl.circuit.ir import QuantumCircuit


def random_unitary(dim, seed):
    return unitary_group.rvs(dim, random_state=seed)


def random_circuit(n, depth, seed, native_only=False):
    rng = np.random.default_rng(seed)
    c = QuantumCircuit(n)
    kinds = ["Rx", "Ry", "Rz", "Rxx"] if native_only else ["Rx", "Ry", "Rz", "Rxx", "X", "H"]
    for _ in range(depth):
        k = kinds[rng.integers(len(kinds))]
        if k == "Rxx":
            if n < 2:
                continue
            a, b = rng.choice(n, 2, replace=False)
            c.rxx(rng.uniform(-np.pi, np.pi), int(a), int(b))
        elif k in ("X", "H"):
            c.add(k, (int(rng.integers(n)),))
        else:
            c.add(k, (int(rng.integers(n)),), rng.uniform(-np.pi, np.pi))
    return c


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
