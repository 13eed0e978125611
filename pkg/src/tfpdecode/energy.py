"""Dirichlet energy and label homophily diagnostics."""

import numpy as np

from .errors import DomainError, ShapeError, UndefinedResultError
from .sparse import as_features


def dirichlet_energy(x, a):
    """Degree-scaled Dirichlet energy of ``x`` on the symmetric graph ``a``.

        E(x) = 1/2 * sum_ij a_ij || x_i / sqrt(d_i + 1) - x_j / sqrt(d_j + 1) ||^2

    with ``d`` the row sums of ``a``.  Equivalent to
    ``tr(x.T @ (I - S) @ x)`` where ``S = (D+I)^{-1/2} (A+I) (D+I)^{-1/2}``.
    """
    x = as_features(x, dtype=np.float64)
    if a.n_rows != a.n_cols or a.n_rows != x.shape[0]:
        raise ShapeError(f"adjacency {a.shape} does not match features {x.shape}")
    if not a.is_symmetric(tol=1e-12):
        raise DomainError("dirichlet_energy requires a symmetric adjacency")
    if a.nnz and a.data.min() < 0:
        raise DomainError("dirichlet_energy requires non-negative weights")
    scaled = x / np.sqrt(a.row_sums() + 1.0)[:, None]
    rows = a.row_ids()
    diff = scaled[rows] - scaled[a.indices]
    return float(0.5 * np.dot(a.data, np.einsum("ij,ij->i", diff, diff)))


def homophily(a, labels):
    """Mean fraction of same-label in-neighbors, over nodes with any in-neighbor.

    ``a[i, j] != 0`` is read as a directed edge ``i -> j``, so the
    in-neighbors of ``j`` are the nonzero rows of column ``j``.
    """
    labels = np.asarray(labels)
    if labels.shape[0] != a.n_rows or a.n_rows != a.n_cols:
        raise ShapeError("labels must have one entry per node of a square adjacency")
    src = a.row_ids()
    dst = a.indices
    n = a.n_rows
    in_deg = np.bincount(dst, minlength=n)
    same = np.bincount(dst, weights=(labels[src] == labels[dst]).astype(float), minlength=n)
    has_in = in_deg > 0
    if not has_in.any():
        raise UndefinedResultError("homophily is undefined when no node has an in-neighbor")
    return float(np.mean(same[has_in] / in_deg[has_in]))
