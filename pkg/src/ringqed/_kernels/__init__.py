"""Integrator kernel selection.

The compiled extension is preferred when it imported cleanly; the
pure-numpy twin is the fallback.  Set ``RINGQED_PURE_PYTHON=1`` to force
the fallback (used by the benchmark and the consistency tests).
"""

import os

from . import _numpy_impl

STATUS_OK = _numpy_impl.STATUS_OK
STATUS_STEP_UNDERFLOW = _numpy_impl.STATUS_STEP_UNDERFLOW
STATUS_MAX_STEPS = _numpy_impl.STATUS_MAX_STEPS

if os.environ.get("RINGQED_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _numpy_impl
    KERNEL_BACKEND = "numpy (forced)"
else:
    try:
        from . import _rk45 as _impl
        KERNEL_BACKEND = "cython"
    except ImportError:
        _impl = _numpy_impl
        KERNEL_BACKEND = "numpy"

rk45_lindblad = _impl.rk45_lindblad
lindblad_apply = _impl.lindblad_apply


def available_backends():
    """Name -> module for every importable kernel backend."""
    backends = {"numpy": _numpy_impl}
    try:
        from . import _rk45
        backends["cython"] = _rk45
    except ImportError:
        pass
    return backends
