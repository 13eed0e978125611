"""Feature reconstruction with seed rows held fixed.

The non-seed features ``x_o`` of a graph with normalized Laplacian ``L``
minimize the Dirichlet energy when ``L_oo x_o = -L_os x_s``.  This module
solves that system directly (dense LU or conjugate gradients) and by the
explicit Euler iteration ``X <- A_tilde X`` with seed rows reset after each
step, which converges to the same point.
"""

import logging

import numpy as np
import scipy.linalg
import scipy.sparse.csgraph as csgraph

from .errors import ParameterError, ShapeError, SingularSystemError
from .sparse import SparseMatrix, as_features, spmm

log = logging.getLogger(__name__)

DENSE_SOLVE_LIMIT = 4096
RESIDUAL_TOL = 1e-8
CONVERGENCE_TOL = 1e-7


class SeedMask:
    """Boolean marker of the rows whose features stay fixed."""

    __slots__ = ("is_seed",)

    def __init__(self, is_seed):
        is_seed = np.asarray(is_seed, dtype=bool).ravel().copy()
        is_seed.setflags(write=False)
        self.is_seed = is_seed

    @classmethod
    def from_indices(cls, n, seeds):
        m = np.zeros(n, dtype=bool)
        m[np.asarray(seeds, dtype=np.int64)] = True
        return cls(m)

    def __len__(self):
        return self.is_seed.size

    @property
    def seeds(self):
        return np.flatnonzero(self.is_seed)

    @property
    def others(self):
        return np.flatnonzero(~self.is_seed)

    def __repr__(self):
        return f"SeedMask(n={len(self)}, seeds={int(self.is_seed.sum())})"


def _as_mask(mask, n):
    if not isinstance(mask, SeedMask):
        mask = SeedMask(mask)
    if len(mask) != n:
        raise ShapeError(f"mask has {len(mask)} entries for {n} rows")
    return mask


def seedless_components(m, mask):
    """Connected components of ``m``'s pattern that hold no seed, as node arrays."""
    n_comp, labels = csgraph.connected_components(m.to_scipy(), directed=False)
    seeded = np.zeros(n_comp, dtype=bool)
    seeded[labels[mask.is_seed]] = True
    return [np.flatnonzero(labels == c) for c in range(n_comp) if not seeded[c]]


def conjugate_gradient(matvec, b, tol=1e-10, maxiter=None, x0=None):
    """Column-wise conjugate gradients for SPD systems with a block right-hand side.

    Every column runs its own CG recursion; iteration stops once the largest
    absolute residual entry is at most ``tol``.  Returns ``(x, n_iters)``.
    """
    b = np.asarray(b, dtype=np.float64)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    n = b.shape[0]
    maxiter = maxiter or 10 * n + 100
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64).reshape(b.shape)
    r = b - matvec(x)
    p = r.copy()
    rs = np.einsum("ij,ij->j", r, r)
    k = 0
    while k < maxiter and np.abs(r).max(initial=0.0) > tol:
        ap = matvec(p)
        pap = np.einsum("ij,ij->j", p, ap)
        active = pap > 0
        alpha = np.where(active, rs / np.where(active, pap, 1.0), 0.0)
        x += alpha * p
        r -= alpha * ap
        rs_new = np.einsum("ij,ij->j", r, r)
        beta = np.where(rs > 0, rs_new / np.where(rs > 0, rs, 1.0), 0.0)
        p = r + beta * p
        rs = rs_new
        k += 1
    return (x[:, 0] if squeeze else x), k


def direct_solve(laplacian, x0, mask, unseeded="raise"):
    """Exact boundary-value reconstruction ``x_o = -L_oo^{-1} L_os x_s``.

    Seed rows are copied from ``x0``.  A connected component with no seed
    raises :class:`SingularSystemError` unless ``unseeded="keep"``, in which
    case its rows are passed through from ``x0`` unchanged.
    """
    x0 = as_features(x0)
    n = laplacian.n_rows
    if laplacian.n_cols != n or x0.shape[0] != n:
        raise ShapeError(f"laplacian {laplacian.shape} does not match features {x0.shape}")
    mask = _as_mask(mask, n)
    out = x0.copy()

    free = ~mask.is_seed
    orphans = seedless_components(laplacian, mask)
    for comp_id, nodes in enumerate(orphans):
        if unseeded == "raise":
            preview = nodes[:10].tolist()
            raise SingularSystemError(
                f"connected component #{comp_id} with {nodes.size} node(s) {preview}"
                f"{'...' if nodes.size > 10 else ''} contains no seed",
                component=comp_id,
                nodes=nodes,
            )
        if unseeded != "keep":
            raise ParameterError(f"unseeded must be 'raise' or 'keep', got {unseeded!r}")
        log.warning("component with %d node(s) has no seed; features kept", nodes.size)
        free[nodes] = False

    o = np.flatnonzero(free)
    s = mask.seeds
    if o.size == 0:
        return out
    l_oo = laplacian.submatrix(o, o)
    l_os = laplacian.submatrix(o, s)
    rhs = -spmm(l_os, x0[s]).astype(np.float64)
    if o.size <= DENSE_SOLVE_LIMIT:
        x_o = scipy.linalg.solve(l_oo.to_dense(), rhs, assume_a="pos")
    else:
        x_o, _ = conjugate_gradient(lambda v: spmm(l_oo, v), rhs, tol=RESIDUAL_TOL * 1e-2)
    residual = np.abs(spmm(l_oo, x_o) - rhs).max(initial=0.0)
    if residual > RESIDUAL_TOL:
        log.warning("direct_solve residual %.3g above %.1g", residual, RESIDUAL_TOL)
    out[o] = x_o
    return out


def iterate_fp(a_tilde, x0, mask, n_iters, tol=None):
    """Run ``X <- a_tilde @ X`` then reset seed rows, ``n_iters`` times.

    With ``tol`` set, stops early once the largest entry change of a step
    falls below it.
    """
    x0 = as_features(x0)
    n = a_tilde.n_rows
    if a_tilde.n_cols != n or x0.shape[0] != n:
        raise ShapeError(f"adjacency {a_tilde.shape} does not match features {x0.shape}")
    if n_iters < 0:
        raise ParameterError("n_iters must be >= 0")
    mask = _as_mask(mask, n)
    seeds = mask.seeds
    x_s = x0[seeds]
    x = x0.copy()
    for _ in range(n_iters):
        nxt = spmm(a_tilde, x)
        nxt[seeds] = x_s
        if tol is not None and np.abs(nxt - x).max(initial=0.0) < tol:
            return nxt
        x = nxt
    return x


def euler_step(laplacian, x, mask, h):
    """One explicit Euler step of the seed-clamped heat equation."""
    if not 0.0 <= h <= 1.0:
        raise ParameterError(f"step size must lie in [0, 1], got {h}")
    x = as_features(x)
    mask = _as_mask(mask, x.shape[0])
    out = x.copy()
    if h == 0.0:
        return out
    o = mask.others
    out[o] = x[o] - h * spmm(laplacian, x)[o]
    return out


def a_tilde_from_laplacian(laplacian):
    """``I - L``, with the zero diagonal dropped."""
    n = laplacian.n_rows
    eye = SparseMatrix.identity(n, dtype=laplacian.dtype).to_scipy()
    return SparseMatrix.from_scipy(eye - laplacian.to_scipy(), dtype=laplacian.dtype)
