"""Clock-qubit fixing planners.

A fixing plan marks clock wires as free or fixed to a bit. Three planners:

* :func:`classical_fix` works on the full post-QPE amplitudes and fixes one
  wire at a time, conditioning later marginals on earlier fixes.
* :func:`quantum_fix` estimates each wire's one-bit distribution from shots
  of a fresh QPE run per wire and fixes all dominant wires at once.
* :func:`lmr_fix` reads a wire's ``P(0)`` with a small phase-estimation
  circuit whose unitary is ``exp(i rho t)``, synthesised from repeated
  partial swaps with fresh copies of the wire's density matrix.

Wires are indexed by their position in the clock register.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .circuit.ir import QuantumCircuit, metrics as circuit_metrics, simulate
from .optimizer import depth_compression
from .statevector import Statevector, marginal_array, sample_counts

DEFAULT_P_TH = 0.8


@dataclass
class FixDecision:
    wire: int
    status: str = "free"  # free | fixed
    bit: Optional[int] = None
    probability: Optional[float] = None
    order: Optional[int] = None


@dataclass
class FixingPlan:
    n_r: int
    decisions: list
    p_th: float = DEFAULT_P_TH
    provenance: str = "classical"
    forced: bool = False
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.5 < self.p_th <= 1:
            raise ValueError("p_th must lie in (0.5, 1]")
        if len(self.decisions) != self.n_r:
            raise ValueError("one decision per clock wire required")

    @property
    def n_f(self) -> int:
        return sum(d.status == "fixed" for d in self.decisions)

    def fixed_bits(self) -> dict:
        return {d.wire: d.bit for d in self.decisions if d.status == "fixed"}

    def same_decisions(self, other: "FixingPlan") -> bool:
        return self.fixed_bits() == other.fixed_bits()

    def as_dict(self) -> dict:
        out = asdict(self)
        out["n_f"] = self.n_f
        return out

    @classmethod
    def empty(cls, n_r, p_th=DEFAULT_P_TH, provenance="classical"):
        return cls(n_r, [FixDecision(w) for w in range(n_r)], p_th, provenance)

    @classmethod
    def from_bits(cls, n_r, bits: dict, p_th=DEFAULT_P_TH, provenance="forced"):
        dec = [FixDecision(w) for w in range(n_r)]
        for i, (w, b) in enumerate(bits.items()):
            dec[w] = FixDecision(w, "fixed", int(b), None, i)
        return cls(n_r, dec, p_th, provenance, forced=True)


def _wire_probability(state, clock_qubits, w, fixed):
    cond = [(clock_qubits[v], b) for v, b in fixed.items()]
    p = marginal_array(state, [clock_qubits[w]], cond)
    return float(p[0]), float(p[1])


def ranked_fixings(qpe_state: Statevector, clock_qubits):
    """Greedy recursive order of all wires, ignoring any threshold.

    Returns ``[(wire, bit, probability), ...]`` where each probability is the
    dominant-bit marginal conditioned on every earlier entry.
    """
    clock_qubits = list(clock_qubits)
    fixed = {}
    order = []
    while len(fixed) < len(clock_qubits):
        best = None
        for w in range(len(clock_qubits)):
            if w in fixed:
                continue
            p0, p1 = _wire_probability(qpe_state, clock_qubits, w, fixed)
            bit, p = (0, p0) if p0 >= p1 else (1, p1)
            if best is None or p > best[2] + 1e-15:
                best = (w, bit, p)
        fixed[best[0]] = best[1]
        order.append(best)
    return order


def classical_fix(qpe_state: Statevector, clock_qubits, p_th: float = DEFAULT_P_TH) -> FixingPlan:
    """Recursive dominant-bit fixing on exact amplitudes.

    Each round fixes the wire whose dominant outcome (conditioned on the
    wires already fixed) is largest, provided it reaches ``p_th``. Ties go
    to the lower wire index. Stops when no wire qualifies.
    """
    clock_qubits = list(clock_qubits)
    plan = FixingPlan.empty(len(clock_qubits), p_th, "classical")
    fixed = {}
    for step in range(len(clock_qubits)):
        best = None
        for w in range(len(clock_qubits)):
            if w in fixed:
                continue
            p0, p1 = _wire_probability(qpe_state, clock_qubits, w, fixed)
            bit, p = (0, p0) if p0 >= p1 else (1, p1)
            if p >= p_th - 1e-12 and (best is None or p > best[2] + 1e-15):
                best = (w, bit, p)
        if best is None:
            break
        w, bit, p = best
        fixed[w] = bit
        plan.decisions[w] = FixDecision(w, "fixed", bit, p, step)
    return plan


def quantum_fix(qpe_circuit: QuantumCircuit, clock_qubits, p_th: float = DEFAULT_P_TH,
                shots: int = 10_000, seed=None) -> FixingPlan:
    """Independent per-wire Z-measurement campaigns; fix every dominant wire."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    clock_qubits = list(clock_qubits)
    plan = FixingPlan.empty(len(clock_qubits), p_th, "quantum")
    seeds = np.random.SeedSequence(seed).spawn(len(clock_qubits))
    freqs = []
    for w, q in enumerate(clock_qubits):
        # a fresh execution of the QPE circuit for every wire
        out = simulate(qpe_circuit)
        counts = sample_counts(out, [q], shots, np.random.default_rng(seeds[w]))
        f1 = counts.get(1, 0) / shots
        freqs.append(f1)
        bit, p = (0, 1 - f1) if f1 <= 0.5 else (1, f1)
        if p >= p_th - 1e-12:
            plan.decisions[w] = FixDecision(w, "fixed", bit, p, w)
    plan.details["frequencies_of_1"] = freqs
    plan.details["shots"] = shots
    return plan


# ----------------------------------------------------------------------
# LMR / extended phase estimation

_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


class TrotterBudgetError(ValueError):
    pass


@dataclass
class LMRReadout:
    wire: int
    p1: float
    fixed: bool
    bit: Optional[int]
    probability: float
    n_e: int
    t: float
    repetitions: int
    delta_t: float
    distribution: list

    def as_dict(self):
        return asdict(self)


def wire_density_matrix(qpe_circuit: QuantumCircuit, clock_qubit: int) -> np.ndarray:
    """Reduced state of one clock wire after a CNOT onto a fresh ancilla.

    The CNOT decoheres the wire in the Z basis, so the result is diagonal.
    """
    n = qpe_circuit.num_qubits
    ext = QuantumCircuit(n + 1)
    ext.extend(qpe_circuit.gates)
    ext.cx(clock_qubit, n)
    psi = simulate(ext).amplitudes.reshape((2,) * (n + 1))
    ax = n - clock_qubit
    m = np.moveaxis(psi, ax, 0).reshape(2, -1)
    return m @ m.conj().T


def trotter_repetitions(t: float, n_e: int) -> int:
    """Steps per unit evolution so the Trotter error stays under half a phase cell."""
    eps = 2.0 ** -(n_e + 1)
    return int(math.ceil(t * t / eps))


def _controlled_lmr_channel(state, rho, steps, delta_t):
    """Apply ``steps`` rounds of control-conditioned ``exp(i SWAP dt)`` on (zeta, copy).

    ``state`` is the 4x4 density matrix of (control, zeta) with control as
    the high bit; each round joins a fresh copy of ``rho`` and traces it out.
    """
    u = np.cos(delta_t) * np.eye(4) + 1j * np.sin(delta_t) * _SWAP  # exp(i SWAP dt)
    cu = np.eye(8, dtype=complex)
    cu[4:, 4:] = u  # ordering: (control, zeta, copy), control most significant
    cu_dag = cu.conj().T
    for _ in range(steps):
        joint = np.kron(state, rho)
        joint = cu @ joint @ cu_dag
        state = np.einsum("aibi->ab", joint.reshape(4, 2, 4, 2))
    return state


def _eqpe_readout(rho, n_e, t, repetitions, zeta=0):
    """Phase-estimate ``exp(i rho t)`` on ``|zeta>``; returns the bin distribution."""
    delta_t = t / repetitions
    zeta_vec = np.zeros(2)
    zeta_vec[zeta] = 1
    plus = np.full(2, 1 / np.sqrt(2))
    ctrl_states = []
    for m in range(n_e):
        init = np.kron(np.outer(plus, plus), np.outer(zeta_vec, zeta_vec)).astype(complex)
        out = _controlled_lmr_channel(init, rho, repetitions * (1 << m), delta_t)
        ctrl_states.append(np.einsum("aibi->ab", out.reshape(2, 2, 2, 2)))
    # joint control register: control m is bit m of the phase integer
    joint = ctrl_states[n_e - 1]
    for m in range(n_e - 2, -1, -1):
        joint = np.kron(joint, ctrl_states[m])
    dim = 1 << n_e
    # inverse QFT: |y> -> sum_k exp(-2 pi i y k / dim) |k>; y bit m = control m
    y = np.arange(dim)
    f = np.exp(-2j * np.pi * np.outer(y, y) / dim) / np.sqrt(dim)
    out = f @ joint @ f.conj().T
    return np.real(np.diag(out))


def lmr_fix(qpe_builder: Callable[[], QuantumCircuit], clock_index: int, n_e: int,
            delta_t: Optional[float] = None, p_th: float = DEFAULT_P_TH, t: float = 2 * np.pi) -> LMRReadout:
    """Estimate ``P(wire = 0)`` for one clock wire with an extended phase estimation.

    ``delta_t`` defaults to ``t / r`` with ``r = ceil(t^2 / 2^-(n_e+1))``. A
    caller-supplied ``delta_t`` whose accumulated error ``t * delta_t``
    exceeds that grid budget is rejected.
    """
    if n_e < 1:
        raise ValueError("n_e must be >= 1")
    circ = qpe_builder()
    clock = list(circ.register("clock")) if "clock" in circ.registers else list(range(circ.num_qubits))
    if not 0 <= clock_index < len(clock):
        raise ValueError(f"clock index {clock_index} out of range")
    rho = wire_density_matrix(circ, clock[clock_index])
    budget = 2.0 ** -(n_e + 1)
    if delta_t is None:
        reps = trotter_repetitions(t, n_e)
    else:
        if t * delta_t > budget:
            raise TrotterBudgetError(
                f"Trotter error t*dt = {t * delta_t:.3g} exceeds the phase-grid budget {budget:.3g}; "
                f"use delta_t <= {budget / t:.3g} (at least {trotter_repetitions(t, n_e)} repetitions)"
            )
        reps = int(math.ceil(t / delta_t))
    dist = _eqpe_readout(rho, n_e, t, reps)
    k = int(np.argmax(dist))
    p1 = k / (1 << n_e) * (2 * np.pi / t)
    if k == 0:
        # p1 = 0 and p1 = 1 share the zero bin at t = 2 pi; a half-time run separates them
        half = _eqpe_readout(rho, n_e, t / 2, max(1, reps // 2))
        kh = int(np.argmax(half))
        p1 = 1.0 if 4 * kh >= (1 << n_e) else 0.0
    p1 = min(max(p1, 0.0), 1.0)
    if p1 >= p_th - 1e-12:
        fixed, bit, prob = True, 0, p1
    elif 1 - p1 >= p_th - 1e-12:
        fixed, bit, prob = True, 1, 1 - p1
    else:
        fixed, bit, prob = False, None, max(p1, 1 - p1)
    return LMRReadout(clock_index, p1, fixed, bit, prob, n_e, t, reps, t / reps, dist.tolist())


def lmr_plan(qpe_builder, n_r: int, n_e: int = 3, p_th: float = DEFAULT_P_TH, delta_t=None) -> FixingPlan:
    plan = FixingPlan.empty(n_r, p_th, "lmr")
    reads = []
    for w in range(n_r):
        r = lmr_fix(qpe_builder, w, n_e, delta_t, p_th)
        reads.append(r.as_dict())
        if r.fixed:
            plan.decisions[w] = FixDecision(w, "fixed", r.bit, r.probability, w)
    plan.details["readouts"] = reads
    return plan


def fixing_report(plan: FixingPlan, unfixed_metrics, fixed_metrics) -> dict:
    d_in, d_out = unfixed_metrics.depth, fixed_metrics.depth
    return {
        "n_f": plan.n_f,
        "provenance": plan.provenance,
        "depth_unfixed": d_in,
        "depth_fixed": d_out,
        "compression_pct": depth_compression(d_in, d_out) if d_in else 0.0,
        "two_q_unfixed": unfixed_metrics.two_qubit_count,
        "two_q_fixed": fixed_metrics.two_qubit_count,
        "two_q_reduction": unfixed_metrics.two_qubit_count - fixed_metrics.two_qubit_count,
    }


def plan_fixings(problem, scaling, strategy="classical", p_th=DEFAULT_P_TH, shots=10_000, seed=None, n_e=3):
    """Run one planner on the QPE stage of ``problem`` under ``scaling``."""
    from .hhl import build_qpe_circuit

    def builder():
        return build_qpe_circuit(problem, scaling)

    qpe = builder()
    clock = list(qpe.register("clock"))
    if strategy == "classical":
        return classical_fix(simulate(qpe), clock, p_th)
    if strategy == "quantum":
        return quantum_fix(qpe, clock, p_th, shots, seed)
    if strategy == "lmr":
        return lmr_plan(builder, scaling.n_r, n_e, p_th)
    raise ValueError(f"unknown fixing strategy {strategy!r}")


def forced_plan(problem, scaling, n_f: int) -> FixingPlan:
    """Fix the first ``n_f`` wires of the greedy ranking regardless of threshold."""
    from .hhl import build_qpe_circuit

    qpe = build_qpe_circuit(problem, scaling)
    order = ranked_fixings(simulate(qpe), list(qpe.register("clock")))
    plan = FixingPlan.from_bits(scaling.n_r, {w: b for w, b, _ in order[:n_f]})
    for i, (w, b, p) in enumerate(order[:n_f]):
        plan.decisions[w].probability = p
    return plan


__all__ = [
    "FixDecision", "FixingPlan", "LMRReadout", "TrotterBudgetError", "classical_fix", "quantum_fix",
    "lmr_fix", "lmr_plan", "fixing_report", "plan_fixings", "forced_plan", "ranked_fixings",
    "wire_density_matrix", "trotter_repetitions", "circuit_metrics",
]
