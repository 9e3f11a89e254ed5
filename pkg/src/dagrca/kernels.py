"""Backend selection for the hot kernels.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy fallback in ``_kernels_py`` takes over. Setting the environment
variable ``DAGRCA_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

_FORCE_PY = os.environ.get("DAGRCA_PURE_PYTHON", "").strip() not in ("", "0")

compiled = None
if not _FORCE_PY:
    try:
        from . import _kernels as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else _kernels_py

BACKEND = _impl.BACKEND
mlp_forward = _impl.mlp_forward
mlp_backward = _impl.mlp_backward
acyclicity = _impl.acyclicity
lu_inverse = _impl.lu_inverse
pagerank_power = _impl.pagerank_power


def available_backends():
    """Map backend name to kernel module for every importable backend."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out
