"""Pure-numpy amplitude kernels.

Reference path for the numba kernels and the fallback when numba is
unavailable or disabled with ``XHHL_DISABLE_NUMBA=1``.
"""

import numpy as np


def apply_matrix(amps, num_qubits, mat, targets, ctrl_mask, ctrl_val):
    """Apply ``mat`` in place to ``amps`` (shape ``(2**n,)`` or ``(2**n, m)``).

    ``targets[j]`` is bit ``j`` of the gate-local index. Only basis states with
    ``index & ctrl_mask == ctrl_val`` are touched.
    """
    n = num_qubits
    k = len(targets)
    batch = amps.shape[1:]
    tensor = amps.reshape((2,) * n + batch)

    # tensor axis a holds qubit n-1-a
    index = [slice(None)] * (n + len(batch))
    ctrl_axes = []
    for q in range(n):
        if (ctrl_mask >> q) & 1:
            ax = n - 1 - q
            index[ax] = (ctrl_val >> q) & 1
            ctrl_axes.append(ax)
    view = tensor[tuple(index)]

    remaining = [a for a in range(n) if a not in ctrl_axes]
    pos = {a: i for i, a in enumerate(remaining)}
    # matrix row/col axis r <-> local bit k-1-r <-> targets[k-1-r]
    mat_t = np.asarray(mat).reshape((2,) * (2 * k))
    state_axes = [pos[n - 1 - targets[k - 1 - r]] for r in range(k)]
    out = np.tensordot(mat_t, view, axes=(list(range(k, 2 * k)), state_axes))
    out = np.moveaxis(out, list(range(k)), state_axes)
    view[...] = out


def marginal(probs, num_qubits, qubits):
    """Sum ``probs`` onto ``qubits``; output bit ``j`` is ``qubits[j]``."""
    n = num_qubits
    tensor = probs.reshape((2,) * n)
    keep = [n - 1 - q for q in qubits]
    drop = tuple(a for a in range(n) if a not in keep)
    reduced = tensor.sum(axis=drop) if drop else tensor
    # reduced axes are the kept axes in ascending order; reorder so that the
    # first axis is the most significant output bit qubits[-1]
    order = sorted(keep)
    want = [n - 1 - q for q in reversed(qubits)]
    reduced = np.transpose(reduced, [order.index(a) for a in want])
    return np.ascontiguousarray(reduced).reshape(-1)
