"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise, or when
``FLOWCOMM_PURE_PYTHON`` is set, the numpy/pure-Python versions are used.
Both expose the same functions.
"""

import importlib
import os

__all__ = ["BACKEND", "backend", "available_backends",
           "operator_apply", "euler_step", "edge_similarity", "threshold_labels"]

_MODULES = {"cython": "flowcomm._ckernels", "python": "flowcomm._pykernels"}


def backend(name):
    """Return the kernel module for ``name`` ("cython" or "python")."""
    return importlib.import_module(_MODULES[name])


def available_backends():
    names = []
    for name in _MODULES:
        try:
            backend(name)
        except ImportError:
            continue
        names.append(name)
    return names


if os.environ.get("FLOWCOMM_PURE_PYTHON"):
    _impl = backend("python")
    BACKEND = "python"
else:
    try:
        _impl = backend("cython")
        BACKEND = "cython"
    except ImportError:
        _impl = backend("python")
        BACKEND = "python"

operator_apply = _impl.operator_apply
euler_step = _impl.euler_step
edge_similarity = _impl.edge_similarity
threshold_labels = _impl.threshold_labels
