"""Compressed sparse row matrices and the dense feature-matrix helpers.

Feature matrices are plain 2-D numpy arrays (row-major).  ``SparseMatrix``
is a thin immutable CSR container whose arrays feed straight into the
kernels in :mod:`tfpdecode._kernels`.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import DomainError, ShapeError

INDEX_DTYPE = np.int64


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """CSR matrix with sorted, duplicate-free column indices and no stored zeros.

    ``indptr`` has length ``n_rows + 1``; row ``i`` owns the entries
    ``indices[indptr[i]:indptr[i+1]]`` / ``data[indptr[i]:indptr[i+1]]``.
    Build instances through :meth:`from_coo` or :meth:`from_dense`, which
    enforce those invariants.
    """

    shape: tuple
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    @classmethod
    def from_coo(cls, rows, cols, values, shape, dtype=np.float64):
        """Assemble from coordinate triplets; duplicate coordinates are summed."""
        n_rows, n_cols = (int(s) for s in shape)
        rows = np.asarray(rows, dtype=INDEX_DTYPE).ravel()
        cols = np.asarray(cols, dtype=INDEX_DTYPE).ravel()
        values = np.broadcast_to(np.asarray(values, dtype=dtype), rows.shape)
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
            raise ShapeError(f"row index out of range for shape {shape}")
        if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
            raise ShapeError(f"column index out of range for shape {shape}")
        m = sp.coo_matrix((values, (rows, cols)), shape=(n_rows, n_cols)).tocsr()
        return cls._from_scipy_csr(m, dtype)

    @classmethod
    def from_dense(cls, a, dtype=np.float64):
        a = np.asarray(a, dtype=dtype)
        if a.ndim != 2:
            raise ShapeError("dense input must be 2-D")
        return cls._from_scipy_csr(sp.csr_matrix(a), dtype)

    @classmethod
    def from_scipy(cls, m, dtype=None):
        m = sp.csr_matrix(m)
        return cls._from_scipy_csr(m, dtype or m.dtype)

    @classmethod
    def _from_scipy_csr(cls, m, dtype):
        m = m.copy()
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        return cls(
            shape=(int(m.shape[0]), int(m.shape[1])),
            indptr=np.ascontiguousarray(m.indptr, dtype=INDEX_DTYPE),
            indices=np.ascontiguousarray(m.indices, dtype=INDEX_DTYPE),
            data=np.ascontiguousarray(m.data, dtype=dtype),
        )

    @classmethod
    def identity(cls, n, dtype=np.float64):
        idx = np.arange(n)
        return cls.from_coo(idx, idx, np.ones(n), (n, n), dtype=dtype)

    @classmethod
    def zeros(cls, n_rows, n_cols, dtype=np.float64):
        return cls(
            shape=(int(n_rows), int(n_cols)),
            indptr=np.zeros(n_rows + 1, dtype=INDEX_DTYPE),
            indices=np.zeros(0, dtype=INDEX_DTYPE),
            data=np.zeros(0, dtype=dtype),
        )

    @property
    def n_rows(self):
        return self.shape[0]

    @property
    def n_cols(self):
        return self.shape[1]

    @property
    def nnz(self):
        return int(self.indices.size)

    @property
    def dtype(self):
        return self.data.dtype

    def row_ids(self):
        """Row index of every stored entry (COO expansion of ``indptr``)."""
        return np.repeat(np.arange(self.n_rows, dtype=INDEX_DTYPE), np.diff(self.indptr))

    def row_sums(self):
        return np.bincount(self.row_ids(), weights=self.data, minlength=self.n_rows).astype(
            self.dtype, copy=False
        )

    def to_scipy(self):
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=self.shape)

    def to_dense(self):
        return self.to_scipy().toarray()

    def transpose(self):
        return SparseMatrix.from_scipy(self.to_scipy().T, dtype=self.dtype)

    @property
    def T(self):
        return self.transpose()

    def astype(self, dtype):
        return SparseMatrix(self.shape, self.indptr, self.indices, self.data.astype(dtype))

    def is_symmetric(self, tol=0.0):
        if self.n_rows != self.n_cols:
            return False
        diff = self.to_scipy() - self.to_scipy().T
        return diff.nnz == 0 or float(np.abs(diff.data).max()) <= tol

    def submatrix(self, rows, cols):
        m = self.to_scipy()[np.asarray(rows)][:, np.asarray(cols)]
        return SparseMatrix.from_scipy(m, dtype=self.dtype)

    def __matmul__(self, x):
        return spmm(self, x)

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None

    def __repr__(self):
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz}, dtype={self.dtype})"


def as_features(x, dtype=None):
    """Coerce ``x`` to a C-contiguous 2-D float array."""
    x = np.asarray(x)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ShapeError(f"feature matrix must be 2-D, got ndim={x.ndim}")
    if dtype is None:
        dtype = x.dtype if np.issubdtype(x.dtype, np.floating) else np.float64
    return np.ascontiguousarray(x, dtype=dtype)


def spmm(m, x):
    """Sparse-dense product ``m @ x``."""
    x = as_features(x)
    if m.n_cols != x.shape[0]:
        raise ShapeError(f"cannot multiply {m.shape} sparse by {x.shape} dense")
    return _kernels.csr_spmm(m.indptr, m.indices, m.data, m.shape, x)


def row_normalize(m):
    """Divide every row by its sum; all-zero rows are left as zero rows."""
    if m.nnz and m.data.min() < 0:
        raise DomainError("row_normalize requires non-negative entries")
    # divide rather than multiply by 1/sum, which overflows for subnormal sums
    data = m.data / np.repeat(m.row_sums(), np.diff(m.indptr))
    return SparseMatrix(m.shape, m.indptr, m.indices, data)


def sym_normalize(a):
    """Symmetric normalization with self-loop-augmented degrees.

    Returns ``(D + I)^{-1/2} A (D + I)^{-1/2}`` where ``D`` holds the row sums
    of ``a``.  The ``+ I`` keeps isolated nodes finite and bounds the spectrum
    of the result strictly inside (-1, 1).
    """
    if a.n_rows != a.n_cols:
        raise ShapeError(f"sym_normalize needs a square matrix, got {a.shape}")
    if a.nnz and a.data.min() < 0:
        raise DomainError("sym_normalize requires non-negative entries")
    scale = 1.0 / np.sqrt(a.row_sums() + 1.0)
    data = a.data * scale[a.row_ids()] * scale[a.indices]
    return SparseMatrix(a.shape, a.indptr, a.indices, data)


def concat_columns(parts):
    """Stack feature matrices side by side, preserving block order."""
    parts = [as_features(p) for p in parts]
    if not parts:
        raise ShapeError("concat_columns needs at least one part")
    n = parts[0].shape[0]
    for p in parts[1:]:
        if p.shape[0] != n:
            raise ShapeError(f"row count mismatch: {p.shape[0]} != {n}")
    if len(parts) == 1:
        return parts[0]
    return np.hstack(parts)


def l2_normalize_rows(x):
    x = as_features(x)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    out = np.zeros_like(x)
    nz = norms[:, 0] > 0
    out[nz] = x[nz] / norms[nz]
    return out
