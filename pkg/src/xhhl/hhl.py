"""HHL circuit construction, simulation and energy extraction.

Register layout (little-endian, contiguous)::

    qubit 0                   ancilla
    1 .. n_r                  clock   (wire w = clock[w])
    n_r+1 .. n_r+n_b          state
    n_r+n_b+1 .. n_r+2n_b     hom     (second copy of |b> for the overlap)

Clock wire ``w`` controls ``U**(2**w)`` with ``U = exp(2 pi i sA)``. The
inverse Fourier transform is applied without swaps, so after it wire ``w``
carries bit ``n_r-1-w`` of the eigenvalue bin: the most significant bit sits
on the first clock wire and bin ``k`` means ``lambda ~ k / 2**n_r``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .circuit.ir import Gate, QuantumCircuit, evolution_unitary, metrics, simulate
from .circuit.synthesis import decompose_to_native
from .statevector import (
    BRANCH_EPS,
    EmptyBranchError,
    Statevector,
    init_basis_state,
    marginal_array,
)

HOM_NEG_TOL = 1e-9


@dataclass
class HHLConfig:
    n_r: int
    c: Optional[float] = None
    mode: str = "exact"
    shots: int = 1000
    seed: Optional[int] = None
    hom: bool = True

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"mode must be 'exact' or 'sampled', got {self.mode!r}")
        if self.c is not None and not 0 < self.c <= 1:
            raise ValueError("rotation constant c must lie in (0, 1]")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")


@dataclass
class HHLOutcome:
    success_probability: float
    overlap: float
    norm_x: float
    e_corr: float
    norm_b: float
    circuit: QuantumCircuit = field(repr=False)
    solution_vector: Optional[np.ndarray] = field(default=None, repr=False)
    flags: list = field(default_factory=list)

    @property
    def solution_state(self) -> Statevector:
        return Statevector.from_vector(self.solution_vector)

    @cached_property
    def native_circuit(self) -> QuantumCircuit:
        return decompose_to_native(self.circuit)

    @cached_property
    def metrics(self):
        return metrics(self.native_circuit)


# ----------------------------------------------------------------------
# angle table and small helpers


def rotation_angles(n_r: int, c: float, clip: bool = False) -> np.ndarray:
    """``theta_i = 2 arcsin(c / (i / 2**n_r))`` with ``theta_0 = 0``.

    With ``clip`` the arcsin argument is capped at 1 (full flip) instead of
    raising, for plans whose ``c`` exceeds one grid cell.
    """
    k = 1 << n_r
    if c <= 0:
        raise ValueError("c must be positive")
    theta = np.zeros(k)
    for i in range(1, k):
        arg = c * k / i
        if arg > 1 + 1e-12:
            if not clip:
                raise ValueError(
                    f"arcsin argument c*2^n_r/i = {arg:.6g} exceeds 1 at index i={i}; "
                    f"need c <= {i}/2^{n_r}"
                )
            arg = 1.0
        theta[i] = 2 * np.arcsin(min(arg, 1.0))
    return theta


def bin_bits(k: int, n_r: int):
    """Clock wire values for bin ``k`` (wire ``w`` holds bit ``n_r-1-w``)."""
    return [(k >> (n_r - 1 - w)) & 1 for w in range(n_r)]


def bin_from_wires(bits) -> int:
    n = len(bits)
    return sum(b << (n - 1 - w) for w, b in enumerate(bits))


def state_prep_gates(vec, qubits):
    """Uniformly-controlled Ry/Rz cascade preparing ``vec`` (up to global phase).

    ``qubits[j]`` carries bit ``j`` of the amplitude index. Controlled steps
    are emitted as runs of polarity-controlled rotations sharing a control
    set so the lowering pass turns each run into one multiplexor.
    """
    vec = np.asarray(vec, dtype=complex)
    n = len(qubits)
    if len(vec) != 1 << n:
        raise ValueError("vector length does not match qubit count")
    nrm = np.linalg.norm(vec)
    if abs(nrm - 1) > 1e-10:
        raise ValueError(f"state vector must be normalized (norm {nrm:.12g})")
    gates = []
    mags = np.abs(vec)
    # magnitudes, most significant qubit first
    for k in range(n - 1, -1, -1):
        ctrl_q = list(qubits[k + 1:])
        blocks = mags.reshape(-1, 1 << (k + 1))  # row = pattern of bits above k
        for p, row in enumerate(blocks):
            lo = np.linalg.norm(row[: 1 << k])
            hi = np.linalg.norm(row[1 << k:])
            theta = 2 * np.arctan2(hi, lo)
            if abs(theta) < 1e-14:
                continue
            ctrls = [(q, (p >> j) & 1) for j, q in enumerate(ctrl_q)]
            gates.append(Gate("Ry", (qubits[k],), theta, ctrls))
    # phases: diagonal, peeled from the least significant qubit upwards
    phase = np.where(mags > 0, np.angle(vec), 0.0)
    for k in range(n):
        pairs = phase.reshape(-1, 2)
        diff = pairs[:, 1] - pairs[:, 0]
        ctrl_q = list(qubits[k + 1:])
        for p, d in enumerate(diff):
            if abs(np.mod(d + np.pi, 2 * np.pi) - np.pi) < 1e-14:
                continue
            ctrls = [(q, (p >> j) & 1) for j, q in enumerate(ctrl_q)]
            gates.append(Gate("Rz", (qubits[k],), float(d), ctrls))
        phase = pairs.mean(axis=1)
    return gates


# ----------------------------------------------------------------------
# circuit construction


def _fixed_map(fixings, n_r):
    if fixings is None:
        return {}
    if getattr(fixings, "n_r", n_r) != n_r:
        raise ValueError(f"fixing plan is for n_r={fixings.n_r}, circuit has n_r={n_r}")
    fixed = fixings.fixed_bits() if hasattr(fixings, "fixed_bits") else dict(fixings)
    for w, v in fixed.items():
        if not 0 <= w < n_r or v not in (0, 1):
            raise ValueError(f"invalid fixing entry wire {w} -> {v}")
    return fixed


def qpe_gates(sA, clock, state, fixed=None):
    """Phase estimation on ``clock`` for ``exp(2 pi i sA)`` acting on ``state``.

    A wire in ``fixed`` is a constant ``|v>``: no Hadamards, its controlled
    power is dropped (v=0) or applied unconditionally (v=1), and phase
    gates it controls reduce to single-wire phases or vanish.
    """
    fixed = fixed or {}
    n = len(clock)
    gates = []
    for w in range(n):
        if w not in fixed:
            gates.append(Gate("H", (clock[w],)))
    for w in range(n):
        u = evolution_unitary(sA, 2 * np.pi * (1 << w)).entries
        if w in fixed:
            if fixed[w] == 1:
                gates.append(Gate("OpaqueUnitary", tuple(state), None, (), u))
        else:
            gates.append(Gate("OpaqueUnitary", tuple(state), None, ((clock[w], 1),), u))
    gates.extend(inverse_qft_gates(clock, fixed))
    return gates


def _cphase(theta, a, b, fixed_vals):
    """Phase ``e^{i theta}`` on |11> of wires (a, b); ``fixed_vals`` maps wire -> bit."""
    va, vb = fixed_vals.get(a), fixed_vals.get(b)
    if va is not None and vb is not None:
        return []
    if va is not None or vb is not None:
        v, other = (va, b) if va is not None else (vb, a)
        return [Gate("Rz", (other,), theta)] if v == 1 else []
    return [Gate("Rz", (a,), theta / 2), Gate("Rz", (b,), theta, ((a, 1),))]


def inverse_qft_gates(clock, fixed=None):
    fixed = fixed or {}
    n = len(clock)
    vals = {clock[w]: v for w, v in fixed.items()}
    gates = []
    for w in range(n - 1, -1, -1):
        for w2 in range(n - 1, w, -1):
            theta = -2 * np.pi / (1 << (w2 - w + 1))
            gates.extend(_cphase(theta, clock[w2], clock[w], vals))
        if w not in fixed:
            gates.append(Gate("H", (clock[w],)))
    return gates


def conditioned_rotation_gates(angles, clock, ancilla, fixed=None):
    """Polarity-controlled Ry on the ancilla, one per nonzero bin angle."""
    fixed = fixed or {}
    n = len(clock)
    gates = []
    for k, theta in enumerate(angles):
        if theta == 0:
            continue
        bits = bin_bits(k, n)
        if any(bits[w] != v for w, v in fixed.items()):
            continue
        ctrls = [(clock[w], bits[w]) for w in range(n) if w not in fixed]
        gates.append(Gate("Ry", (ancilla,), float(theta), ctrls))
    return gates


def hom_gates(state, hom):
    """Destructive overlap: CX(hom_i -> state_i) then H(hom_i)."""
    gates = [Gate("X", (s,), None, ((h, 1),)) for s, h in zip(state, hom)]
    gates.extend(Gate("H", (h,)) for h in hom)
    return gates


def hhl_registers(n_r, n_b, hom=True):
    regs = [("ancilla", 1), ("clock", n_r), ("state", n_b)]
    if hom:
        regs.append(("hom", n_b))
    return regs


def _check_n_r(scaling, config):
    n_r = config.n_r if config is not None else scaling.n_r
    if n_r != scaling.n_r:
        raise ValueError(f"config n_r={n_r} differs from scaling plan n_r={scaling.n_r}")
    return n_r


def build_qpe_circuit(problem, scaling, fixings=None) -> QuantumCircuit:
    """State preparation plus phase estimation only, on (clock, state)."""
    n_r, n_b = scaling.n_r, problem.n_b
    circ = QuantumCircuit(registers=[("clock", n_r), ("state", n_b)])
    clock, state = list(circ.register("clock")), list(circ.register("state"))
    fixed = _fixed_map(fixings, n_r)
    circ.extend(state_prep_gates(problem.b_state, state))
    circ.extend(qpe_gates(scaling.scaled(problem.A), clock, state, fixed))
    return circ


def build_hhl_circuit(problem, scaling, config: HHLConfig = None, fixings=None) -> QuantumCircuit:
    n_r = _check_n_r(scaling, config)
    n_b = problem.n_b
    use_hom = True if config is None else config.hom
    circ = QuantumCircuit(registers=hhl_registers(n_r, n_b, use_hom))
    anc = circ.register("ancilla")[0]
    clock = list(circ.register("clock"))
    state = list(circ.register("state"))
    fixed = _fixed_map(fixings, n_r)
    c = scaling.c if config is None or config.c is None else config.c
    angles = rotation_angles(n_r, c, clip=getattr(scaling, "clip_angles", False))

    b = problem.b_state
    circ.extend(state_prep_gates(b, state))
    if use_hom:
        hom = list(circ.register("hom"))
        circ.extend(state_prep_gates(b, hom))
    qpe = qpe_gates(scaling.scaled(problem.A), clock, state, fixed)
    circ.extend(qpe)
    circ.extend(conditioned_rotation_gates(angles, clock, anc, fixed))
    circ.extend(g.inverse() for g in reversed(qpe))
    circ.metadata.update(hom_start=len(circ.gates), n_r=n_r, n_b=n_b, c=c, s=scaling.s,
                         fixed=dict(fixed))
    if use_hom:
        circ.extend(hom_gates(state, hom))
    return circ


# ----------------------------------------------------------------------
# overlap and energy


def hom_parity_sum(probs: np.ndarray, n_b: int) -> float:
    """``sum (-1)^{popcount(alpha & beta)} P(alpha beta)`` over (state, hom) outcomes.

    ``probs`` is indexed with state bits low and hom bits high.
    """
    idx = np.arange(probs.shape[0])
    alpha = idx & ((1 << n_b) - 1)
    beta = idx >> n_b
    par = np.array([bin(int(v)).count("1") & 1 for v in (alpha & beta)])
    return float(np.sum(np.where(par, -probs, probs)))


def _hom_value(total, mode, flags):
    if total < 0:
        if mode == "exact" and total < -HOM_NEG_TOL:
            raise ArithmeticError(f"negative overlap estimate {total:.3e} in exact mode")
        if mode == "sampled":
            flags.append(f"negative HOM estimate {total:.4g} clamped to 0")
        total = 0.0
    return float(min(1.0, np.sqrt(total)))


def hom_overlap(x_state: Statevector, b_state: Statevector, config: HHLConfig = None, seed=None) -> float:
    """|<b|x>| from the destructive-overlap circuit on ``x (x) b``."""
    if x_state.num_qubits != b_state.num_qubits:
        raise ValueError("registers differ in size")
    n = x_state.num_qubits
    joint = Statevector(2 * n, np.kron(b_state.amplitudes, x_state.amplitudes))
    circ = QuantumCircuit(registers=[("state", n), ("hom", n)])
    circ.extend(hom_gates(list(circ.register("state")), list(circ.register("hom"))))
    out = simulate(circ, joint)
    probs = out.probabilities()
    mode = config.mode if config is not None else "exact"
    flags = []
    if mode == "sampled":
        shots = config.shots
        rng = np.random.default_rng(config.seed if seed is None else seed)
        probs = rng.multinomial(shots, probs / probs.sum()) / shots
    return _hom_value(hom_parity_sum(probs, n), mode, flags)


def correlation_energy(overlap: float, norm_x: float, norm_b: float) -> float:
    if not -1e-12 <= overlap <= 1 + 1e-12:
        raise ValueError("overlap must lie in [0, 1]")
    if norm_x <= 0 or norm_b <= 0:
        raise ValueError("norms must be positive")
    return -norm_x * norm_b ** 2 * overlap


def solution_norm(p1: float, d_tilde_min: float) -> float:
    """``sqrt(P(1)) / d_tilde_min`` (adaptive-scaling norm recovery)."""
    if p1 <= 0:
        raise ValueError("P(1) must be positive")
    if d_tilde_min <= 0:
        raise ValueError("d_tilde_min must be positive")
    return float(np.sqrt(p1) / d_tilde_min)


def _reduced_solution(pre_hom: Statevector, circ: QuantumCircuit) -> np.ndarray:
    """Dominant eigenvector of the state-register density matrix given ancilla = 1."""
    n = circ.num_qubits
    anc = circ.register("ancilla")[0]
    state = list(circ.register("state"))
    other = [q for q in range(n) if q != anc and q not in state]
    t = pre_hom.amplitudes.reshape((2,) * n)
    # tensor axis for qubit q is n-1-q
    t = np.take(t, 1, axis=n - 1 - anc)
    axes_left = sorted(n - 1 - q for q in range(n) if q != anc)  # remaining axes, in tensor order
    pos = {ax: i for i, ax in enumerate(axes_left)}
    st_axes = [pos[n - 1 - q] for q in reversed(state)]  # most significant state bit first
    ot_axes = [pos[n - 1 - q] for q in other]
    m = np.transpose(t, st_axes + ot_axes).reshape(1 << len(state), -1)
    rho = m @ m.conj().T
    w, v = np.linalg.eigh(rho)
    vec = v[:, -1]
    k = int(np.argmax(np.abs(vec)))
    vec = vec * np.exp(-1j * np.angle(vec[k]))
    return vec


def final_distribution(circuit: QuantumCircuit):
    """Simulate ``circuit``; returns ``(joint, solution_vector)``.

    ``joint`` has shape ``(2**(2 n_b), 2)``: rows are (state, hom) outcomes
    with state bits low, columns the ancilla bit.
    """
    meta = circuit.metadata
    if "hom_start" not in meta:
        raise ValueError("circuit was not produced by build_hhl_circuit")
    n = circuit.num_qubits
    anc = circuit.register("ancilla")[0]
    state = list(circuit.register("state"))
    hom = list(circuit.register("hom")) if "hom" in circuit.registers else []
    pre = circuit.with_gates(circuit.gates[: meta["hom_start"]])
    psi = simulate(pre, init_basis_state(n, 0))
    sol = _reduced_solution(psi, circuit)
    post = circuit.with_gates(circuit.gates[meta["hom_start"]:])
    out = simulate(post, psi)
    joint = marginal_array(out, [anc] + state + hom).reshape(-1, 2)
    return joint, sol


def estimate_from_distribution(joint, n_b, s, c, norm_b, mode="exact", has_hom=True,
                               solution=None, b_state=None):
    """``(P(1), overlap, norm_x, e_corr, flags)`` from an (ancilla, state, hom) distribution."""
    flags = []
    p1 = float(joint[:, 1].sum())
    if p1 < BRANCH_EPS:
        raise EmptyBranchError(f"post-selection failed: P(1) = {p1:.3e}")
    cond = joint[:, 1] / p1
    if has_hom:
        overlap = _hom_value(hom_parity_sum(cond, n_b), mode, flags)
    else:
        overlap = float(abs(np.vdot(b_state, solution)))
    norm_x = float(np.sqrt(p1) * s / c)
    e = correlation_energy(overlap, norm_x, norm_b) if overlap > 0 else 0.0
    return p1, overlap, norm_x, e, flags


def sample_distribution(joint, shots, rng):
    """Multinomial shot histogram of ``joint`` normalised to frequencies."""
    flat = joint.ravel()
    counts = rng.multinomial(shots, flat / flat.sum())
    return (counts / shots).reshape(joint.shape)


def run_hhl(circuit: QuantumCircuit, config: HHLConfig, problem, scaling) -> HHLOutcome:
    """Simulate ``circuit`` and extract P(1), the overlap, the norm and the energy.

    Exact mode reads probabilities directly; sampled mode draws
    ``config.shots`` outcomes of (ancilla, state, hom) and uses frequencies.
    """
    meta = circuit.metadata
    joint, sol = final_distribution(circuit)
    if config.mode == "sampled":
        joint = sample_distribution(joint, config.shots, np.random.default_rng(config.seed))
    has_hom = "hom" in circuit.registers
    p1, overlap, norm_x, e, flags = estimate_from_distribution(
        joint, problem.n_b, meta["s"], meta["c"], problem.norm_b, config.mode, has_hom,
        sol, problem.b_state,
    )
    return HHLOutcome(p1, overlap, norm_x, e, problem.norm_b, circuit, sol, flags)


def solve(problem, scaling, config: HHLConfig = None, fixings=None) -> HHLOutcome:
    config = config or HHLConfig(n_r=scaling.n_r)
    circ = build_hhl_circuit(problem, scaling, config, fixings)
    return run_hhl(circ, config, problem, scaling)
