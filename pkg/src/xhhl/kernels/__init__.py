"""Backend selection for the amplitude kernels.

The numba path is used when numba imports cleanly, unless the environment
variable ``XHHL_DISABLE_NUMBA`` is set to a truthy value, in which case the
pure-numpy path is used. Both expose ``apply_matrix`` and ``marginal``.
"""

import os

from . import _numpy

_DISABLED = os.environ.get("XHHL_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

if _DISABLED:
    _numba = None
else:
    try:
        from . import _numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _numba = None

BACKEND = "numpy" if _numba is None else "numba"
_impl = _numpy if _numba is None else _numba

apply_matrix = _impl.apply_matrix
marginal = _impl.marginal

__all__ = ["BACKEND", "apply_matrix", "marginal", "get_backend"]


def get_backend(name):
    """Return the kernel module for ``"numpy"`` or ``"numba"`` explicitly."""
    if name == "numpy":
        return _numpy
    if name == "numba":
        if _numba is None:
            from . import _numba as mod
            return mod
        return _numba
    raise ValueError(f"unknown kernel backend {name!r}")
