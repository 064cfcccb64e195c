"""Dense statevector simulation.

Qubit ``q`` is bit ``q`` of the basis index (little-endian). Bitstrings in
reports are integers under the same convention: for a query list
``[q0, q1, ...]`` the outcome bit ``j`` belongs to ``qubits[j]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

ATOL = 1e-10
BRANCH_EPS = 1e-14


class EmptyBranchError(ValueError):
    """Raised when a conditioning or post-selection event has ~zero weight."""


@dataclass
class Statevector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"expected {1 << self.num_qubits} amplitudes for {self.num_qubits} qubits, "
                f"got shape {self.amplitudes.shape}"
            )

    def copy(self) -> "Statevector":
        return Statevector(self.num_qubits, self.amplitudes.copy())

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @classmethod
    def from_vector(cls, vec, normalize=True) -> "Statevector":
        vec = np.asarray(vec, dtype=np.complex128).ravel()
        n = int(round(np.log2(len(vec))))
        if 1 << n != len(vec):
            raise ValueError(f"vector length {len(vec)} is not a power of two")
        if normalize:
            nrm = np.linalg.norm(vec)
            if nrm == 0:
                raise ValueError("cannot normalize the zero vector")
            vec = vec / nrm
        return cls(n, vec)


@dataclass
class UnitaryBlock:
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.complex128)
        d = self.entries.shape[0]
        if self.entries.shape != (d, d) or d & (d - 1) or d == 0:
            raise ValueError(f"unitary block must be square with power-of-two size, got {self.entries.shape}")

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.dimension.bit_length() - 1

    def is_unitary(self, atol=ATOL) -> bool:
        eye = np.eye(self.dimension)
        return float(np.linalg.norm(self.entries @ self.entries.conj().T - eye)) < atol

    def dagger(self) -> "UnitaryBlock":
        return UnitaryBlock(self.entries.conj().T)


def init_basis_state(num_qubits: int, basis_index: int) -> Statevector:
    if num_qubits < 0:
        raise ValueError("num_qubits must be non-negative")
    if not 0 <= basis_index < (1 << num_qubits):
        raise ValueError(f"basis index {basis_index} out of range for {num_qubits} qubits")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[basis_index] = 1.0
    return Statevector(num_qubits, amps)


def _control_masks(controls, num_qubits):
    mask = 0
    val = 0
    for q, pol in controls:
        if not 0 <= q < num_qubits:
            raise ValueError(f"control qubit {q} out of range")
        if mask >> q & 1:
            raise ValueError(f"control qubit {q} listed twice")
        mask |= 1 << q
        if pol:
            val |= 1 << q
    return mask, val


def normalize_controls(controls):
    """Accept ``[q, ...]`` (polarity 1) or ``[(q, pol), ...]``."""
    out = []
    for c in controls or ():
        if isinstance(c, (tuple, list)):
            out.append((int(c[0]), int(c[1])))
        else:
            out.append((int(c), 1))
    return out


def apply_matrix_inplace(amps, num_qubits, mat, targets, controls=()):
    """Apply a raw matrix to an amplitude array (1-D or column batch) in place."""
    targets = [int(t) for t in targets]
    controls = normalize_controls(controls)
    if len(set(targets)) != len(targets):
        raise ValueError("repeated target qubit")
    for t in targets:
        if not 0 <= t < num_qubits:
            raise ValueError(f"target qubit {t} out of range")
    if set(targets) & {q for q, _ in controls}:
        raise ValueError("targets and controls overlap")
    mat = np.asarray(mat, dtype=np.complex128)
    if mat.shape != (1 << len(targets),) * 2:
        raise ValueError(
            f"matrix of shape {mat.shape} does not act on {len(targets)} target qubit(s)"
        )
    mask, val = _control_masks(controls, num_qubits)
    kernels.apply_matrix(amps, num_qubits, mat, targets, mask, val)


def apply_unitary(state: Statevector, block, targets, controls=(), inplace=False) -> Statevector:
    """Apply ``block`` to ``targets`` where every control matches its polarity.

    ``targets[j]`` is bit ``j`` of the block's local index.
    """
    if not isinstance(block, UnitaryBlock):
        block = UnitaryBlock(block)
    if not block.is_unitary():
        raise ValueError("matrix is not unitary")
    mat = block.entries
    out = state if inplace else state.copy()
    apply_matrix_inplace(out.amplitudes, out.num_qubits, mat, targets, controls)
    return out


def _marginal_array(probs, num_qubits, qubits):
    if not qubits:
        return np.array([probs.sum()])
    return kernels.marginal(probs, num_qubits, list(qubits))


def marginal_distribution(state: Statevector, qubits, conditioned_on=()) -> dict:
    """Marginal over ``qubits`` given fixed values of other qubits.

    Returns ``{outcome: probability}`` with outcome bit ``j`` = ``qubits[j]``.
    Zero-probability outcomes are included so the map is dense.
    """
    arr = marginal_array(state, qubits, conditioned_on)
    return {i: float(p) for i, p in enumerate(arr)}


def marginal_array(state: Statevector, qubits, conditioned_on=()) -> np.ndarray:
    """Dense-array form of :func:`marginal_distribution`."""
    qubits = [int(q) for q in qubits]
    cond = [(int(q), int(b)) for q, b in conditioned_on]
    n = state.num_qubits
    if len(set(qubits)) != len(qubits):
        raise ValueError("repeated query qubit")
    if set(qubits) & {q for q, _ in cond}:
        raise ValueError("query and conditioning qubits overlap")
    for q in qubits + [q for q, _ in cond]:
        if not 0 <= q < n:
            raise ValueError(f"qubit {q} out of range")
    probs = state.probabilities()
    if cond:
        joint = _marginal_array(probs, n, qubits + [q for q, _ in cond])
        k = len(qubits)
        cidx = 0
        for j, (_, b) in enumerate(cond):
            cidx |= b << j
        block = joint.reshape(1 << len(cond), 1 << k)[cidx]
        total = block.sum()
        if total < BRANCH_EPS:
            raise EmptyBranchError(f"empty branch: conditioning event has probability {total:.3e}")
        return block / total
    arr = _marginal_array(probs, n, qubits)
    return arr / arr.sum()


def sample_counts(state: Statevector, qubits, shots: int, seed=None) -> dict:
    """Draw ``shots`` measurement outcomes of ``qubits``; returns nonzero counts."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = marginal_array(state, qubits)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    counts = rng.multinomial(shots, p / p.sum())
    return {i: int(c) for i, c in enumerate(counts) if c}


def postselect(state: Statevector, qubit: int, bit: int):
    """Project ``qubit`` onto ``bit``; returns ``(renormalized state, probability)``."""
    n = state.num_qubits
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range")
    idx = np.arange(1 << n)
    keep = ((idx >> qubit) & 1) == bit
    amps = np.where(keep, state.amplitudes, 0)
    p = float(np.sum(np.abs(amps) ** 2))
    if p < BRANCH_EPS:
        raise EmptyBranchError(f"post-selection failed: branch probability {p:.3e}")
    return Statevector(n, amps / np.sqrt(p)), p


def inner_product(a: Statevector, b: Statevector) -> complex:
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"qubit count mismatch: {a.num_qubits} vs {b.num_qubits}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))
