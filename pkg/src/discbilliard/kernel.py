"""Collision-kernel selection.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``DISCBILLIARD_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the pure-Python kernel is used.  Both expose
``run_trajectory`` and ``run_batch`` with identical results.
"""
import os

from . import _pykernel

_force_python = os.environ.get("DISCBILLIARD_PURE_PYTHON", "") not in ("", "0")

if _force_python:
    _impl = _pykernel
else:
    try:
        from . import _ckernel as _impl
    except ImportError:
        _impl = _pykernel

BACKEND = _impl.BACKEND
run_trajectory = _impl.run_trajectory
run_batch = _impl.run_batch


def backends():
    """All importable kernel modules, keyed by backend name."""
    out = {"python": _pykernel}
    try:
        from . import _ckernel
    except ImportError:
        pass
    else:
        out["cython"] = _ckernel
    return out
