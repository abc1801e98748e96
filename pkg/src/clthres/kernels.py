"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise (or when the
``CLTHRES_PURE_PYTHON`` environment variable is set to ``1``) the numpy
fallback is used. Both backends return identical arrays.
"""

import os

import numpy as np

from . import _pykernels

try:
    if os.environ.get("CLTHRES_PURE_PYTHON") == "1":
        raise ImportError("pure-python backend forced")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

try:
    from . import _ckernels  # noqa: F401

    HAVE_EXTENSION = True
except ImportError:
    HAVE_EXTENSION = False


def pair_counts(data, r, backend=None):
    """Return int64 counts ``C[i, j, a, b] = #{s : x[s,i] = a, x[s,j] = b}``.

    ``data`` is an ``(n, d)`` integer array with symbols in ``range(r)``.
    """
    impl = _select(backend)
    return impl.pair_counts(np.ascontiguousarray(data, dtype=np.intp), int(r))


def ancestral_sample(order, parent, cdf, u, backend=None):
    """Draw symbols node by node in ``order`` from cumulative conditionals."""
    impl = _select(backend)
    return impl.ancestral_sample(
        np.ascontiguousarray(order, dtype=np.intp),
        np.ascontiguousarray(parent, dtype=np.intp),
        np.ascontiguousarray(cdf, dtype=np.float64),
        np.ascontiguousarray(u, dtype=np.float64),
    )


def _select(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _pykernels
    if backend == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {backend!r}")
