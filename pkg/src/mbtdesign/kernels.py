"""Backend selection for the hot moment kernel.

The Cython extension is used when it was built; otherwise, or when the
environment variable ``MBTDESIGN_PURE_PYTHON`` is set to a non-empty value,
the numpy implementation is used. Both expose the same function.
"""

import os

import numpy as np

from . import _moments_py

if os.environ.get("MBTDESIGN_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _moments as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "numpy"


def weighted_tensor_power_sum(rhos, weights, t: int, backend: str | None = None):
    """Batched sum_i w_i rho_{s,i}^{(x) t} for an (S, M, 2, 2) stack of states."""
    backend = backend or BACKEND
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled.weighted_tensor_power_sum(
            np.ascontiguousarray(rhos, dtype=np.complex128),
            np.ascontiguousarray(weights, dtype=np.float64),
            int(t),
        )
    if backend == "numpy":
        return _moments_py.weighted_tensor_power_sum(rhos, weights, t)
    raise ValueError(f"unknown backend {backend!r}")
