"""Hot sparse kernels with a numba path and a numpy/scipy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``TFP_DISABLE_NUMBA`` is unset (or set to ``0``/``false``).  Both
paths take the raw CSR arrays so callers never depend on which one ran.

Every numba kernel parallelizes over output rows only; each output row is
accumulated by a single thread in a fixed order, so results are
bit-reproducible for a given backend regardless of thread count.
"""

import contextlib
import os

import numpy as np
import scipy.sparse as sp

try:
    import numba
    from numba import njit, prange

    HAS_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # skip the TBB probe; old system TBB builds only produce a warning
        try:
            from numba.np.ufunc import omppool  # noqa: F401

            numba.config.THREADING_LAYER = "omp"
        except ImportError:
            numba.config.THREADING_LAYER = "workqueue"
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False


def _env_disabled():
    flag = os.environ.get("TFP_DISABLE_NUMBA", "").strip().lower()
    return flag not in ("", "0", "false", "no")


_USE_NUMBA = HAS_NUMBA and not _env_disabled()


def backend():
    """Name of the active kernel backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if _USE_NUMBA else "numpy"


def set_backend(name):
    global _USE_NUMBA
    if name == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("numba is not importable")
        _USE_NUMBA = True
    elif name == "numpy":
        _USE_NUMBA = False
    else:
        raise ValueError(f"unknown backend {name!r}")


@contextlib.contextmanager
def use_backend(name):
    previous = backend()
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def set_num_threads(n):
    if HAS_NUMBA and n is not None:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


if HAS_NUMBA:

    @njit(parallel=True, cache=True)
    def _spmm_nb(indptr, indices, data, x, out):
        n_rows = indptr.shape[0] - 1
        n_cols = x.shape[1]
        for i in prange(n_rows):
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                v = data[p]
                for c in range(n_cols):
                    out[i, c] += v * x[j, c]

    @njit(parallel=True, cache=True)
    def _slice_product_nb(indptr, indices, values, x, out):
        # out[i, s*d + c] = sum_p values[p, s] * x[indices[p], c]
        n_rows = indptr.shape[0] - 1
        n_slices = values.shape[1]
        d = x.shape[1]
        for i in prange(n_rows):
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                for s in range(n_slices):
                    v = values[p, s]
                    base = s * d
                    for c in range(d):
                        out[i, base + c] += v * x[j, c]


def _result_dtype(a, b):
    return np.result_type(a.dtype, b.dtype, np.float32)


def csr_spmm(indptr, indices, data, shape, x):
    """Product of the CSR matrix ``(indptr, indices, data)`` with dense ``x``."""
    n_rows, n_cols = shape
    dtype = _result_dtype(data, x)
    if _USE_NUMBA:
        x = np.ascontiguousarray(x, dtype=dtype)
        out = np.zeros((n_rows, x.shape[1]), dtype=dtype)
        if indices.size and x.shape[1]:
            _spmm_nb(indptr, indices, data.astype(dtype, copy=False), x, out)
        return out
    m = sp.csr_matrix((data, indices, indptr), shape=(n_rows, n_cols))
    return np.ascontiguousarray(m @ x, dtype=dtype)


def csr_slice_product(indptr, indices, values, n_rows, x):
    """Concatenated products of CSR slices that share one sparsity pattern.

    ``values`` has one column per slice; slice ``s`` is the CSR matrix with
    pattern ``(indptr, indices)`` and data ``values[:, s]``.  Returns the
    row-wise concatenation ``[S_0 @ x | S_1 @ x | ...]``.
    """
    n_slices = values.shape[1]
    d = x.shape[1]
    dtype = _result_dtype(values, x)
    out = np.zeros((n_rows, n_slices * d), dtype=dtype)
    if indices.size == 0 or n_slices == 0 or d == 0:
        return out
    if _USE_NUMBA:
        _slice_product_nb(
            indptr,
            indices,
            np.ascontiguousarray(values, dtype=dtype),
            np.ascontiguousarray(x, dtype=dtype),
            out,
        )
        return out
    n_cols = x.shape[0]
    for s in range(n_slices):
        m = sp.csr_matrix((values[:, s], indices, indptr), shape=(n_rows, n_cols))
        out[:, s * d:(s + 1) * d] = m @ x
    return out
