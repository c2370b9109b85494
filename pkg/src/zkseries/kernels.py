"""Kernel selection: compiled extension when importable, else pure Python.

Set ``ZKSERIES_PURE=1`` to force the fallback.  Instances whose worst-case
cost would not fit in int64 are always routed to the pure kernels.
"""
import os

import numpy as np

from zkseries import _pykernels

_ext = None
if os.environ.get("ZKSERIES_PURE") != "1":
    try:
        from zkseries import _ckernels as _ext
    except ImportError:  # extension not built
        _ext = None

BACKEND = "compiled" if _ext is not None else "python"
INT64_SAFE = 1 << 62


def has_compiled():
    return _ext is not None


def _fits_int64(x, y, local_kind, lam):
    top = int(max(int(x.max(initial=0)), int(y.max(initial=0))))
    m = x.shape[1]
    if local_kind == _pykernels.SQUARED_EUCLIDEAN:
        per = m * top * top
    elif local_kind == _pykernels.MANHATTAN:
        per = m * top
    else:
        per = top
    worst = (x.shape[0] + y.shape[0]) * (int(lam) + 2 * per)
    return worst < INT64_SAFE


def warp(x, y, local_kind, series_kind, lam=0, band=-1, backend=None):
    """Optimal coupling for DTW / Frechet / TWED.

    ``x`` and ``y`` are 2-D int64 arrays.  Returns ``(distance, ii, jj)``.
    """
    use = backend or BACKEND
    if use == "compiled" and _ext is not None and _fits_int64(x, y, local_kind, lam):
        return _ext.warp(x, y, local_kind, series_kind, int(lam), band)
    return _pykernels.warp(x.tolist(), y.tolist(), local_kind, series_kind, int(lam), band)


def sweep_three_squares(n, table, table_list=None, backend=None):
    use = backend or BACKEND
    if use == "compiled" and _ext is not None and n < INT64_SAFE:
        return _ext.sweep_three_squares(n, table)
    return _pykernels.sweep_three_squares(n, table_list if table_list is not None else table)


def as_table(values):
    return np.ascontiguousarray(values, dtype=np.int32)
