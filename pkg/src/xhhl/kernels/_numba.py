"""numba-compiled amplitude kernels.

Index arithmetic follows the little-endian convention: qubit ``q`` is bit
``q`` of the basis index. Each kernel visits only the amplitudes selected by
the control pattern, so fully controlled gates cost ``2**(n - c)``.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _insert_zero_bits(g, fixed_sorted):
    for pos in fixed_sorted:
        low = g & ((1 << pos) - 1)
        g = ((g >> pos) << (pos + 1)) | low
    return g


@njit(cache=True)
def _apply_matrix_2d(amps, num_qubits, mat, offsets, fixed_sorted, ctrl_val):
    dim = offsets.shape[0]
    ncols = amps.shape[1]
    nfree = num_qubits - fixed_sorted.shape[0]
    buf = np.empty(dim, dtype=np.complex128)
    idx = np.empty(dim, dtype=np.int64)
    for g in range(1 << nfree):
        base = _insert_zero_bits(g, fixed_sorted) | ctrl_val
        for a in range(dim):
            idx[a] = base | offsets[a]
        for col in range(ncols):
            for a in range(dim):
                buf[a] = amps[idx[a], col]
            for a in range(dim):
                acc = 0j
                for b in range(dim):
                    acc += mat[a, b] * buf[b]
                amps[idx[a], col] = acc


@njit(cache=True)
def _apply_1q(amps, num_qubits, mat, target, fixed_sorted, ctrl_val):
    # specialised single-target path; most gates in a native circuit hit this
    nfree = num_qubits - fixed_sorted.shape[0]
    step = 1 << target
    m00, m01, m10, m11 = mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1]
    ncols = amps.shape[1]
    for g in range(1 << nfree):
        i0 = _insert_zero_bits(g, fixed_sorted) | ctrl_val
        i1 = i0 | step
        for col in range(ncols):
            a0 = amps[i0, col]
            a1 = amps[i1, col]
            amps[i0, col] = m00 * a0 + m01 * a1
            amps[i1, col] = m10 * a0 + m11 * a1


@njit(cache=True)
def _marginal(probs, qubits):
    k = qubits.shape[0]
    out = np.zeros(1 << k, dtype=np.float64)
    for i in range(probs.shape[0]):
        j = 0
        for b in range(k):
            j |= ((i >> qubits[b]) & 1) << b
        out[j] += probs[i]
    return out


def apply_matrix(amps, num_qubits, mat, targets, ctrl_mask, ctrl_val):
    """Apply ``mat`` in place; same contract as the numpy kernel."""
    arr = amps if amps.ndim == 2 else amps.reshape(-1, 1)
    targets = [int(t) for t in targets]
    fixed = sorted(targets + [q for q in range(num_qubits) if (ctrl_mask >> q) & 1])
    fixed_sorted = np.asarray(fixed, dtype=np.int64)
    mat = np.ascontiguousarray(mat, dtype=np.complex128)
    if len(targets) == 1:
        _apply_1q(arr, num_qubits, mat, targets[0], fixed_sorted, int(ctrl_val))
        return
    dim = 1 << len(targets)
    offsets = np.zeros(dim, dtype=np.int64)
    for a in range(dim):
        off = 0
        for j, t in enumerate(targets):
            if (a >> j) & 1:
                off |= 1 << t
        offsets[a] = off
    _apply_matrix_2d(arr, num_qubits, mat, offsets, fixed_sorted, int(ctrl_val))


def marginal(probs, num_qubits, qubits):
    return _marginal(np.ascontiguousarray(probs, dtype=np.float64),
                     np.asarray(qubits, dtype=np.int64))
