"""Gate list representation, simulation, metrics and the text format."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..statevector import (
    Statevector,
    UnitaryBlock,
    apply_matrix_inplace,
    init_basis_state,
    normalize_controls,
)

ROTATIONS = ("Rx", "Ry", "Rz", "Rxx")
NATIVE = frozenset(ROTATIONS)
FIXED = ("X", "H", "SWAP")
KINDS = ROTATIONS + FIXED + ("OpaqueUnitary",)
ARITY = {"Rx": 1, "Ry": 1, "Rz": 1, "Rxx": 2, "X": 1, "H": 1, "SWAP": 2}

DEFAULT_UNITARY_CAP = 12

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1.0 + 0j, -1.0])
_I2 = np.eye(2, dtype=complex)
_XX = np.kron(_X, _X)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def rx(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta):
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def rxx(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return c * np.eye(4) - 1j * s * _XX


_ROT_MATRIX = {"Rx": rx, "Ry": ry, "Rz": rz, "Rxx": rxx}


class NonNativeGateError(ValueError):
    pass


class UnitaryCapError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Gate:
    """One operation. ``qubits[j]`` is bit ``j`` of the local matrix index.

    ``controls`` is a tuple of ``(qubit, polarity)``; the gate acts only on
    basis states where every control qubit equals its polarity.
    """

    kind: str
    qubits: tuple
    angle: Optional[float] = None
    controls: tuple = ()
    unitary: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "controls", tuple(normalize_controls(self.controls)))
        if self.kind in ROTATIONS:
            if self.angle is None:
                raise ValueError(f"{self.kind} needs an angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")
        if self.kind == "OpaqueUnitary":
            if self.unitary is None:
                raise ValueError("OpaqueUnitary needs a matrix")
            u = self.unitary.entries if isinstance(self.unitary, UnitaryBlock) else self.unitary
            u = np.asarray(u, dtype=complex)
            if u.shape != (1 << len(self.qubits),) * 2:
                raise ValueError(f"matrix {u.shape} does not fit {len(self.qubits)} qubits")
            object.__setattr__(self, "unitary", u)
        elif len(self.qubits) != ARITY[self.kind]:
            raise ValueError(f"{self.kind} acts on {ARITY[self.kind]} qubit(s), got {len(self.qubits)}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("repeated operand qubit")
        cq = [q for q, _ in self.controls]
        if len(set(cq)) != len(cq) or set(cq) & set(self.qubits):
            raise ValueError("operand and control qubits must be disjoint")

    def matrix(self) -> np.ndarray:
        """Matrix on ``qubits`` (controls excluded)."""
        if self.kind in _ROT_MATRIX:
            return _ROT_MATRIX[self.kind](self.angle)
        if self.kind == "X":
            return _X
        if self.kind == "H":
            return _H
        if self.kind == "SWAP":
            return _SWAP
        return self.unitary

    @property
    def support(self) -> tuple:
        return self.qubits + tuple(q for q, _ in self.controls)

    @property
    def is_native(self) -> bool:
        return self.kind in NATIVE and not self.controls

    def inverse(self) -> "Gate":
        if self.kind in ROTATIONS:
            return Gate(self.kind, self.qubits, -self.angle, self.controls)
        if self.kind == "OpaqueUnitary":
            return Gate(self.kind, self.qubits, None, self.controls, self.unitary.conj().T)
        return self

    def with_angle(self, angle) -> "Gate":
        return Gate(self.kind, self.qubits, angle, self.controls)

    def remap(self, mapping) -> "Gate":
        return Gate(
            self.kind,
            tuple(mapping[q] for q in self.qubits),
            self.angle,
            tuple((mapping[q], p) for q, p in self.controls),
            self.unitary,
        )

    def full_matrix(self, support=None) -> np.ndarray:
        """Matrix over ``support`` (default: operands then controls), controls included."""
        support = tuple(support) if support is not None else self.support
        k = len(support)
        pos = {q: j for j, q in enumerate(support)}
        mat = np.eye(1 << k, dtype=complex)
        apply_matrix_inplace(
            mat, k, self.matrix(), [pos[q] for q in self.qubits],
            [(pos[q], p) for q, p in self.controls],
        )
        return mat

    def __repr__(self):
        return format_gate(self)


@dataclass
class CircuitMetrics:
    depth: int
    two_qubit_count: int
    gate_count: int
    num_qubits: int

    def as_dict(self):
        return {
            "depth": self.depth,
            "two_qubit_count": self.two_qubit_count,
            "gate_count": self.gate_count,
            "num_qubits": self.num_qubits,
        }


class QuantumCircuit:
    """Ordered gate list over contiguous named registers."""

    def __init__(self, num_qubits=None, registers=None, gates=None):
        regs = {}
        if registers:
            start = 0
            items = registers.items() if isinstance(registers, dict) else registers
            for name, spec in items:
                if isinstance(spec, range):
                    r = spec
                else:
                    r = range(start, start + int(spec))
                if r.start != start:
                    raise ValueError(f"register {name!r} is not contiguous with the previous one")
                regs[name] = r
                start = r.stop
            total = start
            if num_qubits is not None and num_qubits != total:
                raise ValueError(f"registers cover {total} qubits, circuit declares {num_qubits}")
            num_qubits = total
        if num_qubits is None:
            raise ValueError("num_qubits or registers required")
        self.num_qubits = int(num_qubits)
        self.registers = regs
        self.metadata = {}
        self.gates = []
        for g in gates or ():
            self.append(g)

    # construction -------------------------------------------------------
    def append(self, gate: Gate) -> "QuantumCircuit":
        for q in gate.support:
            if not 0 <= q < self.num_qubits:
                raise ValueError(f"gate {gate!r} references undeclared qubit {q}")
        self.gates.append(gate)
        return self

    def extend(self, gates):
        for g in gates:
            self.append(g)
        return self

    def add(self, kind, qubits, angle=None, controls=(), unitary=None):
        if isinstance(qubits, int):
            qubits = (qubits,)
        return self.append(Gate(kind, tuple(qubits), angle, controls, unitary))

    def rx(self, theta, q, controls=()):
        return self.add("Rx", q, theta, controls)

    def ry(self, theta, q, controls=()):
        return self.add("Ry", q, theta, controls)

    def rz(self, theta, q, controls=()):
        return self.add("Rz", q, theta, controls)

    def rxx(self, theta, q0, q1):
        return self.add("Rxx", (q0, q1), theta)

    def x(self, q, controls=()):
        return self.add("X", q, None, controls)

    def cx(self, c, t):
        return self.add("X", t, None, [(c, 1)])

    def h(self, q, controls=()):
        return self.add("H", q, None, controls)

    def swap(self, a, b, controls=()):
        return self.add("SWAP", (a, b), None, controls)

    def unitary(self, mat, qubits, controls=()):
        if isinstance(qubits, int):
            qubits = (qubits,)
        return self.add("OpaqueUnitary", qubits, None, controls, mat)

    def copy(self) -> "QuantumCircuit":
        out = self.empty_like()
        out.gates = list(self.gates)
        return out

    def empty_like(self) -> "QuantumCircuit":
        out = QuantumCircuit(self.num_qubits)
        out.registers = dict(self.registers)
        out.metadata = dict(self.metadata)
        return out

    def with_gates(self, gates) -> "QuantumCircuit":
        out = self.empty_like()
        out.gates = list(gates)
        return out

    def inverse(self) -> "QuantumCircuit":
        return self.with_gates(g.inverse() for g in reversed(self.gates))

    def compose(self, other: "QuantumCircuit") -> "QuantumCircuit":
        if other.num_qubits != self.num_qubits:
            raise ValueError("qubit count mismatch")
        return self.with_gates(self.gates + other.gates)

    def register(self, name) -> range:
        return self.registers[name]

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __repr__(self):
        return f"QuantumCircuit(num_qubits={self.num_qubits}, gates={len(self.gates)})"

    @property
    def is_native(self) -> bool:
        return all(g.is_native for g in self.gates)


# simulation ------------------------------------------------------------

def apply_gate_inplace(amps, num_qubits, gate: Gate):
    apply_matrix_inplace(amps, num_qubits, gate.matrix(), gate.qubits, gate.controls)


def simulate(circuit: QuantumCircuit, initial=None) -> Statevector:
    """Run ``circuit`` on ``initial`` (Statevector, basis index, or |0...0>)."""
    n = circuit.num_qubits
    if initial is None:
        state = init_basis_state(n, 0)
    elif isinstance(initial, (int, np.integer)):
        state = init_basis_state(n, int(initial))
    else:
        if initial.num_qubits != n:
            raise ValueError("initial state size mismatch")
        state = initial.copy()
    for g in circuit.gates:
        apply_gate_inplace(state.amplitudes, n, g)
    return state


def circuit_unitary(circuit: QuantumCircuit, cap: int = DEFAULT_UNITARY_CAP) -> UnitaryBlock:
    n = circuit.num_qubits
    if n > cap:
        raise UnitaryCapError(
            f"{n} qubits exceeds the unitary cap of {cap}; use statevector spot checks "
            "(classical fidelity on basis inputs) instead"
        )
    mat = np.eye(1 << n, dtype=complex)
    for g in circuit.gates:
        apply_gate_inplace(mat, n, g)
    return UnitaryBlock(mat)


def evolution_unitary(A, t: float) -> UnitaryBlock:
    """``exp(i A t)`` by eigendecomposition of Hermitian ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if np.linalg.norm(A - A.conj().T) > 1e-10:
        raise ValueError("evolution generator must be Hermitian")
    w, v = np.linalg.eigh(A)
    return UnitaryBlock((v * np.exp(1j * t * w)) @ v.conj().T)


# metrics ---------------------------------------------------------------

def metrics(circuit: QuantumCircuit) -> CircuitMetrics:
    """Greedy-layer depth, Rxx count and gate count of a native circuit."""
    level = [0] * circuit.num_qubits
    depth = 0
    two_q = 0
    for g in circuit.gates:
        if not g.is_native:
            raise NonNativeGateError(
                f"metrics need a native circuit; found {g!r}. Run decompose_to_native first"
            )
        lay = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = lay
        depth = max(depth, lay)
        if g.kind == "Rxx":
            two_q += 1
    return CircuitMetrics(depth, two_q, len(circuit.gates), circuit.num_qubits)


# text format -----------------------------------------------------------

def _fmt_angle(a):
    return "-" if a is None else repr(float(a))


def format_gate(g: Gate) -> str:
    if g.kind == "OpaqueUnitary":
        flat = ",".join(f"{float(z.real)!r}:{float(z.imag)!r}" for z in g.unitary.ravel())
        line = f"OpaqueUnitary - {','.join(map(str, g.qubits))} mat={flat}"
    else:
        line = f"{g.kind} {_fmt_angle(g.angle)} {','.join(map(str, g.qubits))}"
    if g.controls:
        line += " ctrl=" + ",".join(f"q{q}:{p}" for q, p in g.controls)
    return line


def parse_gate(line: str) -> Gate:
    parts = line.split()
    if len(parts) < 3:
        raise ValueError(f"malformed gate line: {line!r}")
    kind, angle_s, qs = parts[:3]
    angle = None if angle_s == "-" else float(angle_s)
    qubits = tuple(int(x) for x in qs.split(","))
    controls = []
    unitary = None
    for extra in parts[3:]:
        if extra.startswith("ctrl="):
            for item in extra[5:].split(","):
                q, p = item.split(":")
                controls.append((int(q.lstrip("q")), int(p)))
        elif extra.startswith("mat="):
            vals = [complex(float(a), float(b)) for a, b in (z.split(":") for z in extra[4:].split(","))]
            d = int(round(np.sqrt(len(vals))))
            unitary = np.array(vals).reshape(d, d)
        else:
            raise ValueError(f"unknown field {extra!r} in {line!r}")
    return Gate(kind, qubits, angle, tuple(controls), unitary)


def dumps(circuit: QuantumCircuit) -> str:
    lines = [f"qubits {circuit.num_qubits}"]
    for name, r in circuit.registers.items():
        lines.append(f"register {name} {r.start} {len(r)}")
    lines.extend(format_gate(g) for g in circuit.gates)
    return "\n".join(lines) + "\n"


def loads(text: str) -> QuantumCircuit:
    n = None
    regs = []
    gates = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split()[0]
        if head == "qubits":
            n = int(line.split()[1])
        elif head == "register":
            _, name, start, size = line.split()
            regs.append((name, range(int(start), int(start) + int(size))))
        else:
            gates.append(parse_gate(line))
    if n is None:
        n = max((max(g.support) for g in gates), default=-1) + 1
    circ = QuantumCircuit(n)
    if regs:
        circ.registers = {name: r for name, r in regs}
        if regs[-1][1].stop > n:
            raise ValueError("register exceeds declared qubit count")
    circ.extend(gates)
    return circ
