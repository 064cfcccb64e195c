"""Linear-system instances, the direct-solve energy oracle and report arithmetic.

An instance holds a Hermitian ``A`` and right-hand side ``b`` of the LCC
system ``A x = -b``. The correlation energy is ``E = -b^dag A^{-1} b``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

HERMITIAN_TOL = 1e-10
MAX_CONDITION = 1e12

FIXTURES = {
    "adapt_2x2": "adapt_2x2.json",
    "h2_4x4": "h2_1.40_4x4.json",
}


class PaddingWarning(UserWarning):
    pass


@dataclass
class ProblemInstance:
    label: str
    A: np.ndarray
    b: np.ndarray
    reference_e_corr: Optional[float] = None
    reference_row: dict = field(default_factory=dict)
    original_dim: Optional[int] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=complex))
        self.b = np.atleast_1d(np.asarray(self.b, dtype=complex))
        if self.original_dim is None:
            self.original_dim = len(self.b)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def n_b(self) -> int:
        return max(1, int(np.ceil(np.log2(self.dim))))

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.A))

    @property
    def d_min(self) -> float:
        return float(self.diagonal.min())

    @property
    def d_max(self) -> float:
        return float(self.diagonal.max())

    @property
    def norm_b(self) -> float:
        return float(np.linalg.norm(self.b))

    @property
    def b_state(self) -> np.ndarray:
        n = self.norm_b
        if n == 0:
            raise ValueError("b is the zero vector")
        return self.b / n

    @property
    def is_real(self) -> bool:
        return not np.any(np.abs(self.A.imag) > 0) and not np.any(np.abs(self.b.imag) > 0)

    def to_dict(self) -> dict:
        def enc(z):
            return float(z.real) if z.imag == 0 else [float(z.real), float(z.imag)]

        d = self.original_dim
        out = {
            "label": self.label,
            "matrix": [[enc(z) for z in row[:d]] for row in self.A[:d]],
            "b": [enc(z) for z in self.b[:d]],
        }
        if self.reference_e_corr is not None:
            out["reference_e_corr"] = self.reference_e_corr
        if self.reference_row:
            out["reference_row"] = self.reference_row
        if self.metadata:
            out["metadata"] = self.metadata
        return out


def _decode(x):
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ValueError(f"complex entries must be [re, im], got {x!r}")
        return complex(x[0], x[1])
    return complex(x)


def make_problem(A, b, label="instance", reference_e_corr=None, reference_row=None, metadata=None):
    """Validate and pad a raw ``(A, b)`` pair into a :class:`ProblemInstance`."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex)).ravel()
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    if A.shape[0] != len(b):
        raise ValueError(f"dimension mismatch: A is {A.shape[0]}x{A.shape[0]}, b has {len(b)} entries")
    asym = float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0
    if asym > HERMITIAN_TOL:
        raise ValueError(f"matrix is not Hermitian: max |A - A^dag| = {asym:.3e}")
    n0 = len(b)
    dim = max(2, 1 << int(np.ceil(np.log2(n0)))) if n0 > 1 else 2
    if dim != n0:
        padA = np.eye(dim, dtype=complex)
        padA[:n0, :n0] = A
        padb = np.zeros(dim, dtype=complex)
        padb[:n0] = b
        A, b = padA, padb
        d_min = float(np.real(np.diag(A[:n0, :n0])).min())
        if d_min > 1:
            warnings.warn(
                f"padding adds unit diagonal entries below d_min={d_min:.5g}; "
                "adaptive scaling with d_tilde_min = d_min may push padded eigenvalues out of range",
                PaddingWarning,
                stacklevel=2,
            )
    return ProblemInstance(
        label, A, b, reference_e_corr, dict(reference_row or {}), n0, dict(metadata or {})
    )


def problem_from_dict(doc: dict) -> ProblemInstance:
    try:
        rows = doc["matrix"]
        bvec = doc["b"]
    except KeyError as exc:
        raise ValueError(f"problem document lacks field {exc}") from None
    A = np.array([[_decode(x) for x in row] for row in rows], dtype=complex)
    b = np.array([_decode(x) for x in bvec], dtype=complex)
    meta = dict(doc.get("metadata", {}))
    if "provenance" in doc:
        meta["provenance"] = doc["provenance"]
    return make_problem(
        A, b, doc.get("label", "instance"), doc.get("reference_e_corr"), doc.get("reference_row"), meta
    )


def load_problem(source) -> ProblemInstance:
    """Load a problem from a JSON path, JSON text, a dict, or a bundled fixture name."""
    if isinstance(source, dict):
        return problem_from_dict(source)
    if isinstance(source, str) and source in FIXTURES:
        return load_fixture(source)
    path = Path(source)
    if path.exists():
        return problem_from_dict(json.loads(path.read_text()))
    if isinstance(source, str) and source.lstrip().startswith("{"):
        return problem_from_dict(json.loads(source))
    raise FileNotFoundError(f"no problem file or fixture named {source!r}")


def save_problem(problem: ProblemInstance, path) -> None:
    Path(path).write_text(json.dumps(problem.to_dict(), indent=2))


def load_fixture(name: str) -> ProblemInstance:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {sorted(FIXTURES)}")
    text = resources.files("xhhl.data").joinpath(FIXTURES[name]).read_text()
    return problem_from_dict(json.loads(text))


def oracle_e_corr(problem: ProblemInstance) -> float:
    """Direct-solve correlation energy ``-b^dag A^{-1} b``."""
    cond = np.linalg.cond(problem.A)
    if not np.isfinite(cond) or cond >= MAX_CONDITION:
        raise np.linalg.LinAlgError(f"matrix is near-singular (condition number {cond:.3e})")
    x = np.linalg.solve(problem.A, problem.b)
    return float(-np.real(np.vdot(problem.b, x)))


def oracle_solution(problem: ProblemInstance) -> np.ndarray:
    return np.linalg.solve(problem.A, problem.b)


def pfd(e_oracle: float, e_method: float) -> float:
    """Signed percentage fraction difference ``(E_clc - E_X) / E_clc * 100``."""
    if e_oracle == 0:
        raise ZeroDivisionError("oracle energy is zero; PFD undefined")
    return (e_oracle - e_method) / e_oracle * 100.0


def e_diff(e_oracle: float, e_method: float) -> float:
    """Energy difference as printed in the report tables: ``E_clc - E_X``."""
    return e_oracle - e_method


def random_spd_problem(dim, seed=None, dominance=0.2, diag_range=(0.5, 2.0), b=None, label=None):
    """Seeded random diagonally-dominant SPD instance.

    Each off-diagonal magnitude is at most ``dominance * |d_i - d_j| / (N - 1)``
    so first-order perturbation theory is accurate, and with the default
    diagonal range every row is strictly diagonally dominant.
    """
    rng = np.random.default_rng(seed)
    d = rng.uniform(*diag_range, size=dim)
    gaps = np.abs(d[:, None] - d[None, :])
    off = rng.uniform(-1, 1, size=(dim, dim)) * dominance * gaps / max(1, dim - 1)
    off = np.triu(off, 1)
    A = np.diag(d) + off + off.T
    if b is None:
        b = rng.normal(size=dim)
    return make_problem(A, b, label or f"random-spd-{dim}-seed{seed}")


def dyadic_problem(dim, n_r, seed=None, b=None, label=None):
    """Random-eigenbasis instance whose eigenvalues are multiples of ``2**-n_r`` in (0, 1)."""
    rng = np.random.default_rng(seed)
    # stay below the guard band that exact scaling keeps free under 1, so the
    # power-of-two scale factor is 1 and the grid values survive scaling
    hi = int((1 - min(4 * 2.0 ** -n_r, 0.25)) * (1 << n_r))
    lo = max(1, hi // 4)
    ks = rng.choice(np.arange(lo, hi + 1), size=dim, replace=dim > hi - lo + 1)
    lam = ks / (1 << n_r)
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    A = (q * lam) @ q.T
    A = 0.5 * (A + A.T)
    if b is None:
        b = rng.normal(size=dim)
    return make_problem(A, b, label or f"dyadic-{dim}-seed{seed}", metadata={"eigenvalues": lam.tolist()})
