"""Lowering to the native {Rx, Ry, Rz, Rxx} set.

* one-qubit matrices: ZYZ Euler angles
* two-qubit matrices: Cartan (KAK) form, at most three Rxx
* runs of same-target rotations sharing a control set: Gray-code multiplexor
* anything wider: quantum Shannon decomposition via the cosine-sine split
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cossin, schur

from .ir import Gate, QuantumCircuit, _H, _I2, _X, _Y, _Z

_TWO_PI = 2 * np.pi
_EPS = 1e-12

# magic basis: local SU(2)xSU(2) -> SO(4), XX/YY/ZZ -> diagonal
_MAGIC = np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]], dtype=complex
) / np.sqrt(2)
_MAGIC_DAG = _MAGIC.conj().T
_PAULI_DIAG = np.array(
    [np.real(np.diag(_MAGIC_DAG @ np.kron(p, p) @ _MAGIC)) for p in (_X, _Y, _Z)]
)
# rows: [1, x, y, z] eigen-sign patterns; phase_k = g + a x_k + b y_k + c z_k
_PHASE_SYSTEM = np.vstack([np.ones(4), _PAULI_DIAG]).T
_S = np.diag([1, 1j])
# conjugations sending XX to YY and ZZ: C (XX) C^dag
_TO_AXIS = {1: _S, 2: _H}


def _negligible(theta, tol=1e-10):
    # Rz/Ry/Rx(2*pi) = -I is a global phase, so reduce modulo 2*pi
    r = np.mod(theta, _TWO_PI)
    return min(r, _TWO_PI - r) < tol


def _wrap(theta):
    return float(np.mod(theta + np.pi, _TWO_PI) - np.pi)


def zyz_angles(u):
    """Return ``(phi, theta, lam)`` with ``u ~ Rz(phi) Ry(theta) Rz(lam)`` up to phase."""
    u = np.asarray(u, dtype=complex)
    det = np.linalg.det(u)
    v = u / np.sqrt(det)
    a, b = v[0, 0], v[1, 0]
    theta = 2 * np.arctan2(abs(b), abs(a))
    if abs(a) < _EPS:
        plus, minus = 0.0, 2 * np.angle(b)
    elif abs(b) < _EPS:
        plus, minus = -2 * np.angle(a), 0.0
    else:
        plus, minus = -2 * np.angle(a), 2 * np.angle(b)
    phi = (plus + minus) / 2
    lam = (plus - minus) / 2
    return phi, theta, lam


def euler_gates(u, q, tol=1e-10):
    """Time-ordered native gates implementing ``u`` on qubit ``q`` up to phase."""
    phi, theta, lam = zyz_angles(u)
    if _negligible(theta, tol):
        total = phi + lam
        return [] if _negligible(total, tol) else [Gate("Rz", (q,), _wrap(total))]
    out = []
    if not _negligible(lam, tol):
        out.append(Gate("Rz", (q,), _wrap(lam)))
    out.append(Gate("Ry", (q,), _wrap(theta)))
    if not _negligible(phi, tol):
        out.append(Gate("Rz", (q,), _wrap(phi)))
    return out


def _simultaneous_orthogonal(m):
    """Real orthogonal ``P`` with ``P^T m P`` diagonal for complex symmetric unitary ``m``."""
    re, im = m.real, m.imag
    rng = np.random.default_rng(1234)
    for _ in range(20):
        t = rng.uniform(0.5, 2.0)
        _, p = np.linalg.eigh(re + t * im)
        d = p.T @ m @ p
        if np.linalg.norm(d - np.diag(np.diag(d))) < 1e-9:
            return p, np.diag(d)
    raise np.linalg.LinAlgError("failed to diagonalize two-qubit Gram matrix")


def _kron_factor(m):
    """Split ``m ~ kron(a, b)``; ``a`` acts on local bit 1, ``b`` on bit 0."""
    t = m.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    uu, ss, vv = np.linalg.svd(t)
    a = np.sqrt(ss[0]) * uu[:, 0].reshape(2, 2)
    b = np.sqrt(ss[0]) * vv[0, :].reshape(2, 2)
    # normalize each to unitary scale
    a /= np.sqrt(abs(np.linalg.det(a)))
    b /= np.sqrt(abs(np.linalg.det(b)))
    return a, b


def kak_decompose(u):
    """Cartan form of a 4x4 unitary.

    Returns ``(k1, (a, b, c), k2)`` where ``k1``/``k2`` are 4x4 local products
    and ``u ~ k1 @ exp(i(a XX + b YY + c ZZ)) @ k2`` up to global phase, with
    each coefficient reduced into ``(-pi/4, pi/4]``.
    """
    u = np.asarray(u, dtype=complex)
    u = u / np.linalg.det(u) ** 0.25
    um = _MAGIC_DAG @ u @ _MAGIC
    p, d = _simultaneous_orthogonal(um.T @ um)
    if np.linalg.det(p) < 0:
        p[:, 0] *= -1
    theta = np.angle(d) / 2
    k1m = um @ p @ np.diag(np.exp(-1j * theta))
    if np.real(np.linalg.det(k1m)) < 0:
        theta[0] += np.pi
        k1m[:, 0] *= -1
    coeffs = np.linalg.solve(_PHASE_SYSTEM, theta)[1:]
    k1 = _MAGIC @ k1m @ _MAGIC_DAG
    k2 = _MAGIC @ p.T @ _MAGIC_DAG
    # fold multiples of pi/2 into the left local factor: exp(i pi/2 PP) = i PP
    reduced = []
    for axis, coef in enumerate(coeffs):
        k = np.round(coef / (np.pi / 2))
        rem = coef - k * np.pi / 2
        if rem <= -np.pi / 4 + 1e-14:
            rem += np.pi / 2
            k -= 1
        if int(k) % 2:
            pauli = (_X, _Y, _Z)[axis]
            k1 = k1 @ np.kron(pauli, pauli)
        reduced.append(float(rem))
    return k1, tuple(reduced), k2


def kak_gates(u, qubits, tol=1e-10):
    """Native gates for a 4x4 ``u``; ``qubits[j]`` is local bit ``j``."""
    q0, q1 = qubits
    k1, coeffs, k2 = kak_decompose(u)
    a2, b2 = _kron_factor(k2)
    a1, b1 = _kron_factor(k1)
    pending = {q1: a2, q0: b2}
    out = []

    def flush(q):
        out.extend(euler_gates(pending[q], q, tol))
        pending[q] = _I2

    for axis in (1, 2, 0):
        coef = coeffs[axis]
        if abs(coef) < tol:
            continue
        c = _TO_AXIS.get(axis, _I2)
        for q in (q0, q1):
            pending[q] = c.conj().T @ pending[q]
            flush(q)
        out.append(Gate("Rxx", (q0, q1), -2 * coef))
        for q in (q0, q1):
            pending[q] = c
    for q, m in ((q1, a1), (q0, b1)):
        pending[q] = m @ pending[q]
    flush(q0)
    flush(q1)
    return out


def cx_gates(control, target):
    """Native CX: Ry(pi/2)_c, Rxx(pi/2), Rx(-pi/2)_c, Rx(-pi/2)_t, Ry(-pi/2)_c."""
    h = np.pi / 2
    return [
        Gate("Ry", (control,), h),
        Gate("Rxx", (control, target), h),
        Gate("Rx", (control,), -h),
        Gate("Rx", (target,), -h),
        Gate("Ry", (control,), -h),
    ]


def _gray(i):
    return i ^ (i >> 1)


def multiplexor_gates(kind, angles, target, controls):
    """Uniformly controlled rotation.

    Control value ``i`` (bit ``j`` = ``controls[j]``) rotates ``target`` by
    ``angles[i]``. Uses ``2**k`` CX and ``2**k`` rotations.
    """
    angles = np.asarray(angles, dtype=float)
    k = len(controls)
    if angles.shape != (1 << k,):
        raise ValueError("need one angle per control pattern")
    if k == 0:
        return [] if _negligible(angles[0]) else [Gate(kind, (target,), _wrap(angles[0]))]
    n = 1 << k
    idx = np.arange(n)
    gray = _gray(idx)
    parity = np.array([[bin(int(g) & int(i)).count("1") & 1 for g in gray] for i in idx])
    w = 1 - 2 * parity
    thetas = w.T @ angles / n
    out = []
    for j in range(n):
        if not _negligible(thetas[j]):
            out.append(Gate(kind, (target,), float(thetas[j])))
        nxt = gray[(j + 1) % n]
        bit = (int(gray[j]) ^ int(nxt)).bit_length() - 1
        out.extend(cx_gates(controls[bit], target))
    return out


def _demultiplex(u1, u2):
    """``diag(u1, u2) = (I x V) diag(D, D^dag) (I x W)``."""
    t, v = schur(u1 @ u2.conj().T, output="complex")
    d = np.sqrt(np.diag(t).astype(complex))
    w = np.diag(d) @ v.conj().T @ u2
    return v, d, w


def qsd_gates(u, qubits):
    """Quantum Shannon decomposition; ``qubits[j]`` is local bit ``j``."""
    u = np.asarray(u, dtype=complex)
    n = len(qubits)
    if n == 1:
        return euler_gates(u, qubits[0])
    if n == 2:
        return kak_gates(u, qubits)
    half = u.shape[0] // 2
    (l1, l2), cs, (r1, r2) = cossin(u, p=half, q=half, separate=True)
    top, low = qubits[-1], list(qubits[:-1])
    out = []
    out.extend(_block_diag_gates(r1, r2, top, low))
    out.extend(multiplexor_gates("Ry", 2 * cs, top, low))
    out.extend(_block_diag_gates(l1, l2, top, low))
    return out


def _block_diag_gates(u1, u2, top, low):
    v, d, w = _demultiplex(u1, u2)
    out = qsd_gates(w, low)
    # diag(d, d*) on the top qubit for each lower pattern is Rz(-2 arg d)
    out.extend(multiplexor_gates("Rz", -2 * np.angle(d), top, low))
    out.extend(qsd_gates(v, low))
    return out


def gate_native(g: Gate):
    """Native lowering of a single gate."""
    if g.is_native:
        return [g]
    support = g.support
    if len(support) == 1:
        return euler_gates(g.matrix(), support[0])
    if g.kind == "X" and len(g.controls) == 1 and g.controls[0][1] == 1:
        return cx_gates(g.controls[0][0], g.qubits[0])
    if g.kind in ("Ry", "Rz") and g.controls:
        return _mux_from_run([g])
    if len(support) == 2:
        return kak_gates(g.full_matrix(support), support)
    return qsd_gates(g.full_matrix(support), support)


def _mux_key(g: Gate):
    if g.kind not in ("Ry", "Rz") or not g.controls:
        return None
    return (g.kind, g.qubits[0], tuple(sorted(q for q, _ in g.controls)))


def _mux_from_run(run):
    kind, target, cqs = _mux_key(run[0])
    angles = np.zeros(1 << len(cqs))
    pos = {q: j for j, q in enumerate(cqs)}
    for g in run:
        idx = 0
        for q, p in g.controls:
            idx |= p << pos[q]
        angles[idx] += g.angle
    return multiplexor_gates(kind, angles, target, list(cqs))


def decompose_to_native(circuit: QuantumCircuit) -> QuantumCircuit:
    """Lower every gate to {Rx, Ry, Rz, Rxx}; adjacent same-target rotations
    sharing one control set become a single multiplexor."""
    out = []
    gates = circuit.gates
    i = 0
    while i < len(gates):
        g = gates[i]
        key = _mux_key(g)
        if key is not None:
            j = i + 1
            while j < len(gates) and _mux_key(gates[j]) == key:
                j += 1
            out.extend(_mux_from_run(gates[i:j]))
            i = j
            continue
        out.extend(gate_native(g))
        i += 1
    return circuit.with_gates(out)
