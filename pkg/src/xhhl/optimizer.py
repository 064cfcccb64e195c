"""Peephole compression of native circuits and the equivalence checks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .circuit.ir import Gate, QuantumCircuit, UnitaryCapError, circuit_unitary, metrics, simulate
from .circuit.synthesis import _negligible, _wrap, euler_gates, kak_gates

PASS_NAMES = ("cancel_inverse_pairs", "merge_rotations", "commute_and_cancel", "peephole_2q_resynthesis")
MAX_ROUNDS = 20
EQ_TOL = 1e-8
FIDELITY_TOL = 1e-6
LOOKBACK = 64


class EquivalenceError(AssertionError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def _same_operands(a: Gate, b: Gate) -> bool:
    if a.kind == "Rxx":
        return set(a.qubits) == set(b.qubits)
    return a.qubits == b.qubits


class _Tape:
    """Gate slots plus per-qubit stacks of live slot indices."""

    def __init__(self, n):
        self.slots = []
        self.stacks = [[] for _ in range(n)]

    def push(self, g):
        i = len(self.slots)
        self.slots.append(g)
        for q in g.qubits:
            self.stacks[q].append(i)
        return i

    def kill(self, i):
        g = self.slots[i]
        self.slots[i] = None
        for q in g.qubits:
            st = self.stacks[q]
            if st and st[-1] == i:
                st.pop()
                while st and self.slots[st[-1]] is None:
                    st.pop()

    def replace(self, i, g):
        self.slots[i] = g

    def last(self, q):
        return self.stacks[q][-1] if self.stacks[q] else None

    def walk(self, q, limit=LOOKBACK):
        st = self.stacks[q]
        seen = 0
        for i in reversed(st):
            if self.slots[i] is None:
                continue
            yield i
            seen += 1
            if seen >= limit:
                return

    def gates(self):
        return [g for g in self.slots if g is not None]


def _combine(tape, i, g):
    """Merge rotation ``g`` into slot ``i``; drop both when the sum is trivial."""
    total = tape.slots[i].angle + g.angle
    if _negligible(total):
        tape.kill(i)
    else:
        tape.replace(i, tape.slots[i].with_angle(_wrap(total)))


def _immediate_predecessor(tape, g):
    idx = {tape.last(q) for q in g.qubits}
    if len(idx) != 1:
        return None
    i = idx.pop()
    if i is None:
        return None
    h = tape.slots[i]
    if h.kind == g.kind and _same_operands(h, g):
        return i
    return None


def cancel_inverse_pairs(circuit: QuantumCircuit) -> QuantumCircuit:
    """Drop adjacent same-kind rotations whose angles sum to 0 mod 2*pi."""
    tape = _Tape(circuit.num_qubits)
    for g in circuit.gates:
        i = _immediate_predecessor(tape, g)
        if i is not None and _negligible(tape.slots[i].angle + g.angle):
            tape.kill(i)
            continue
        tape.push(g)
    return circuit.with_gates(tape.gates())


def merge_rotations(circuit: QuantumCircuit) -> QuantumCircuit:
    """Fuse adjacent same-kind rotations on the same operands."""
    tape = _Tape(circuit.num_qubits)
    for g in circuit.gates:
        if _negligible(g.angle):
            continue
        i = _immediate_predecessor(tape, g)
        if i is not None:
            _combine(tape, i, g)
            continue
        tape.push(g)
    return circuit.with_gates(tape.gates())


def commutes(a: Gate, b: Gate) -> bool:
    """Sound commutation subset used by the look-through pass."""
    if not set(a.qubits) & set(b.qubits):
        return True
    kinds = {a.kind, b.kind}
    if len(kinds) == 1 and a.kind != "Rxx":
        return True  # same-axis rotations on one qubit
    if kinds <= {"Rx", "Rxx"}:
        return True
    return False


def commute_and_cancel(circuit: QuantumCircuit) -> QuantumCircuit:
    """Merge a rotation into an earlier partner reachable through commuting gates."""
    tape = _Tape(circuit.num_qubits)
    for g in circuit.gates:
        target = None
        q0 = g.qubits[0]
        for i in tape.walk(q0):
            h = tape.slots[i]
            if h.kind == g.kind and _same_operands(h, g):
                target = i
                break
            if not commutes(g, h):
                break
        if target is not None and len(g.qubits) == 2:
            # every gate after the partner on the other operand must commute too
            for i in tape.walk(g.qubits[1]):
                if i <= target:
                    break
                if not commutes(g, tape.slots[i]):
                    target = None
                    break
        if target is not None:
            _combine(tape, target, g)
        else:
            tape.push(g)
    return circuit.with_gates(tape.gates())


class _Block:
    __slots__ = ("qubits", "gates")

    def __init__(self, qubits):
        self.qubits = tuple(qubits)
        self.gates = []

    def matrix(self):
        pos = {q: j for j, q in enumerate(self.qubits)}
        k = len(self.qubits)
        mat = np.eye(1 << k, dtype=complex)
        from .statevector import apply_matrix_inplace

        for g in self.gates:
            apply_matrix_inplace(mat, k, g.matrix(), [pos[q] for q in g.qubits])
        return mat

    def resynthesize(self):
        old = self.gates
        if len(self.qubits) == 1:
            if len(old) < 2:
                return old
            new = euler_gates(self.matrix(), self.qubits[0])
            return new if len(new) < len(old) else old
        old_2q = sum(g.kind == "Rxx" for g in old)
        new = kak_gates(self.matrix(), self.qubits)
        new_2q = sum(g.kind == "Rxx" for g in new)
        if new_2q < old_2q or (new_2q == old_2q and len(new) < len(old)):
            return new
        return old


def peephole_2q_resynthesis(circuit: QuantumCircuit) -> QuantumCircuit:
    """Collect maximal one- and two-qubit blocks and resynthesize when cheaper."""
    n = circuit.num_qubits
    slots = []
    open_ = [None] * n

    def close(q):
        b = open_[q]
        if b is not None:
            for p in b.qubits:
                open_[p] = None

    for g in circuit.gates:
        if len(g.qubits) == 1:
            q = g.qubits[0]
            if open_[q] is None:
                b = _Block((q,))
                open_[q] = b
                slots.append(b)
            open_[q].gates.append(g)
            continue
        a, c = g.qubits
        ba, bc = open_[a], open_[c]
        if ba is not None and ba is bc:
            ba.gates.append(g)
            continue
        blk = _Block((a, c))
        # absorb pending one-qubit runs: nothing has touched those wires since
        for p, pend in ((a, ba), (c, bc)):
            if pend is not None and len(pend.qubits) == 1:
                blk.gates.extend(pend.gates)
                pend.gates = []
            else:
                close(p)
        open_[a] = open_[c] = blk
        blk.gates.append(g)
        slots.append(blk)
    out = []
    for b in slots:
        if b.gates:
            out.extend(b.resynthesize())
    return circuit.with_gates(out)


PASSES = {
    "cancel_inverse_pairs": cancel_inverse_pairs,
    "merge_rotations": merge_rotations,
    "commute_and_cancel": commute_and_cancel,
    "peephole_2q_resynthesis": peephole_2q_resynthesis,
}


@dataclass
class PassPipeline:
    passes: tuple = PASS_NAMES
    repeat_until_fixed_point: bool = True

    def __post_init__(self):
        self.passes = tuple(self.passes)
        for p in self.passes:
            if p not in PASSES:
                raise ValueError(f"unknown pass {p!r}; choose from {PASS_NAMES}")
        for a, b in zip(self.passes, self.passes[1:]):
            if a == b:
                raise ValueError(f"pass {a!r} appears twice in a row")


DEFAULT_PIPELINE = PassPipeline(
    ("merge_rotations", "commute_and_cancel", "peephole_2q_resynthesis", "cancel_inverse_pairs")
)


def _signature(c):
    m = metrics(c)
    return (m.depth, m.gate_count, m.two_qubit_count)


def optimize(circuit: QuantumCircuit, pipeline: PassPipeline = None) -> QuantumCircuit:
    """Run the pipeline (to a fixed point, at most 20 rounds).

    Never returns a deeper circuit than the input.
    """
    pipeline = pipeline or DEFAULT_PIPELINE
    start = _signature(circuit)
    cur = circuit
    sig = start
    rounds = MAX_ROUNDS if pipeline.repeat_until_fixed_point else 1
    for _ in range(rounds):
        for name in pipeline.passes:
            cur = PASSES[name](cur)
        new_sig = _signature(cur)
        if new_sig == sig:
            break
        sig = new_sig
    if sig[0] > start[0]:
        return circuit
    return cur


def search_pipeline(circuit: QuantumCircuit, max_length=4, candidates=PASS_NAMES):
    """Try every ordering of the passes (no repeats in a row) and keep the shallowest.

    Returns ``(best_pipeline, best_circuit, table)`` where ``table`` maps each
    tried order to its output depth.
    """
    best = None
    table = {}
    for length in range(1, max_length + 1):
        for order in itertools.product(candidates, repeat=length):
            if any(a == b for a, b in zip(order, order[1:])):
                continue
            if len(set(order)) != len(order):
                continue
            pipe = PassPipeline(order)
            out = optimize(circuit, pipe)
            m = metrics(out)
            table[order] = m.depth
            key = (m.depth, m.gate_count)
            if best is None or key < best[0]:
                best = (key, pipe, out)
    return best[1], best[2], table


def global_phase_residual(u_a, u_b):
    m = u_a @ u_b.conj().T
    phase = np.angle(np.trace(m))
    res = float(np.linalg.norm(m - np.exp(1j * phase) * np.eye(m.shape[0])))
    return float(np.mod(phase, 2 * np.pi)), res


def verify_equivalence(original: QuantumCircuit, optimized: QuantumCircuit, cap=12, tol=EQ_TOL, seed=0):
    """Return the global phase ``phi`` with ``U_orig U_opt^dag = e^{i phi} I``.

    Above ``cap`` qubits the full unitary is not formed; instead five random
    basis inputs are simulated and the output distributions must agree to
    classical fidelity ``1 - 1e-6``. The phase then comes from the first
    input's amplitude overlap.
    """
    if original.num_qubits != optimized.num_qubits:
        raise ValueError("qubit count mismatch")
    try:
        u_a = circuit_unitary(original, cap).entries
        u_b = circuit_unitary(optimized, cap).entries
    except UnitaryCapError:
        return _verify_sampled(original, optimized, seed)
    phi, res = global_phase_residual(u_a, u_b)
    if res >= tol:
        raise EquivalenceError(f"circuits differ: Frobenius residual {res:.3e}", res)
    if min(phi, 2 * np.pi - phi) < 1e-12:
        phi = 0.0
    return phi


def _verify_sampled(a, b, seed, trials=5):
    rng = np.random.default_rng(seed)
    phase = None
    for _ in range(trials):
        idx = int(rng.integers(1 << a.num_qubits))
        sa, sb = simulate(a, idx), simulate(b, idx)
        f = classical_fidelity(sa.probabilities(), sb.probabilities())
        if f < 1 - FIDELITY_TOL:
            raise EquivalenceError(f"output distributions differ on input {idx}: fidelity {f}", 1 - f)
        if phase is None:
            phase = float(np.mod(np.angle(np.vdot(sb.amplitudes, sa.amplitudes)), 2 * np.pi))
    return phase


def _as_array(p, size=None):
    if isinstance(p, dict):
        size = size if size is not None else max(p) + 1
        arr = np.zeros(size)
        for k, v in p.items():
            arr[int(k)] = v
        return arr
    return np.asarray(p, dtype=float)


def classical_fidelity(p, q) -> float:
    """Bhattacharyya overlap ``sum sqrt(p q)`` of two outcome distributions."""
    if isinstance(p, dict) or isinstance(q, dict):
        keys = set(p) | set(q)
        size = max(int(k) for k in keys) + 1
        p, q = _as_array(dict(p), size), _as_array(dict(q), size)
    else:
        p, q = _as_array(p), _as_array(q)
        if p.shape != q.shape:
            raise ValueError(f"distribution domains differ: {p.shape} vs {q.shape}")
    for name, d in (("p", p), ("q", q)):
        if abs(d.sum() - 1) > 1e-9 or (d < -1e-15).any():
            raise ValueError(f"{name} is not a probability distribution (sum {d.sum()})")
    return float(min(1.0, np.sum(np.sqrt(np.clip(p, 0, None) * np.clip(q, 0, None)))))


def depth_compression(d_in: int, d_out: int) -> float:
    if d_in <= 0:
        raise ValueError("input depth must be positive")
    return abs(d_out - d_in) / d_in * 100.0


@dataclass
class OptimizationReport:
    depth_in: int
    depth_out: int
    compression_pct: float
    fidelity: float
    phase: float
    pipeline: tuple = field(default_factory=tuple)

    def as_dict(self):
        return {
            "depth_in": self.depth_in,
            "depth_out": self.depth_out,
            "compression_pct": self.compression_pct,
            "fidelity": self.fidelity,
            "phase": self.phase,
        }


def optimize_and_verify(circuit: QuantumCircuit, pipeline: PassPipeline = None, cap=12):
    """Optimize, check equivalence, and report depth compression and output fidelity."""
    pipeline = pipeline or DEFAULT_PIPELINE
    out = optimize(circuit, pipeline)
    phase = verify_equivalence(circuit, out, cap=cap)
    fid = classical_fidelity(simulate(circuit).probabilities(), simulate(out).probabilities())
    d_in, d_out = metrics(circuit).depth, metrics(out).depth
    rep = OptimizationReport(
        d_in, d_out, depth_compression(d_in, d_out) if d_in else 0.0, fid, phase, pipeline.passes
    )
    return out, rep
