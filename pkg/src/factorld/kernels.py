"""Backend selection for the inner loops.

The compiled extension is used when it imports; otherwise, or when
``FACTORLD_PURE_PYTHON=1`` is set, the numpy implementation is used. Both
expose ``pareto_segment_stats``, ``segment_stats`` and ``path_stats``.
"""

import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and os.environ.get("FACTORLD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    _impl = _compiled
    BACKEND = "cython"
else:
    _impl = _kernels_py
    BACKEND = "python"


def available_backends():
    return ["python"] + (["cython"] if _compiled is not None else [])


def get_backend(name):
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def pareto_segment_stats(bits, offsets, alpha, scale, p):
    bits = np.ascontiguousarray(bits, dtype=np.uint64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    return _impl.pareto_segment_stats(bits, offsets, float(alpha), float(scale), float(p))


def segment_stats(values, offsets):
    values = np.ascontiguousarray(values, dtype=np.float64)
    return _impl.segment_stats(values, np.ascontiguousarray(offsets, dtype=np.int64))


def path_stats(sizes, offsets):
    sizes = np.ascontiguousarray(sizes, dtype=np.float64)
    return _impl.path_stats(sizes, np.ascontiguousarray(offsets, dtype=np.int64))
