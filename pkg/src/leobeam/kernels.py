"""Kernel backend selection.

The compiled extension is used when it was built; set
``LEOBEAM_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _kernels_py

BACKENDS = {"python": _kernels_py}

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None
else:
    BACKENDS["compiled"] = _compiled

if _compiled is not None and os.environ.get("LEOBEAM_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "compiled"
else:
    BACKEND = "python"

_impl = BACKENDS[BACKEND]
build_adjacency = _impl.build_adjacency
greedy_mis = _impl.greedy_mis


def get_backend(name=None):
    """Module implementing the kernels; ``None`` means the active one."""
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
