"""Alignment search: cosine similarity, Sinkhorn assignment, greedy, CSLS."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import NumericError, ParameterError, ShapeError
from .sparse import as_features, l2_normalize_rows


class SimilarityMatrix(np.ndarray):
    """Dense score matrix that remembers the shape it had before padding.

    ``orig_shape`` is ``(n_src, n_tgt)`` of the unpadded block; rows and
    columns beyond it are phantom padding.
    """

    def __new__(cls, values, orig_shape=None):
        obj = np.asarray(values, dtype=np.float64).view(cls)
        if obj.ndim != 2:
            raise ShapeError("similarity matrix must be 2-D")
        obj.orig_shape = tuple(orig_shape) if orig_shape is not None else obj.shape
        return obj

    def __array_finalize__(self, obj):
        if obj is None:
            return
        # slicing or reshaping invalidates the padding record
        if getattr(obj, "shape", None) == self.shape and hasattr(obj, "orig_shape"):
            self.orig_shape = obj.orig_shape
        else:
            self.orig_shape = self.shape

    @property
    def n_src(self):
        return self.orig_shape[0]

    @property
    def n_tgt(self):
        return self.orig_shape[1]

    @property
    def is_padded(self):
        return tuple(self.orig_shape) != tuple(self.shape)

    def unpadded(self):
        n, m = self.orig_shape
        return SimilarityMatrix(np.asarray(self)[:n, :m])


@dataclass(frozen=True)
class Assignment:
    """``match[i]`` is the target index chosen for source ``i``, or -1 for none."""

    match: np.ndarray
    scores: np.ndarray = None

    NONE = -1

    def pairs(self):
        src = np.flatnonzero(self.match != self.NONE)
        return np.column_stack([src, self.match[src]])

    def is_one_to_one(self):
        m = self.match[self.match != self.NONE]
        return np.unique(m).size == m.size

    def total_score(self, sim):
        sim = np.asarray(sim)
        p = self.pairs()
        return float(sim[p[:, 0], p[:, 1]].sum()) if p.size else 0.0


def _unpad_match(match, sim):
    n, m = getattr(sim, "orig_shape", np.shape(sim))
    match = np.asarray(match, dtype=np.int64)[:n].copy()
    match[match >= m] = Assignment.NONE
    return match


def cosine_sim(x_src, x_tgt):
    x_src, x_tgt = as_features(x_src, np.float64), as_features(x_tgt, np.float64)
    if x_src.shape[1] != x_tgt.shape[1]:
        raise ShapeError(f"column mismatch: {x_src.shape[1]} vs {x_tgt.shape[1]}")
    s = l2_normalize_rows(x_src) @ l2_normalize_rows(x_tgt).T
    np.clip(s, -1.0, 1.0, out=s)
    return SimilarityMatrix(s)


def pad_square(sim):
    """Zero-pad to ``max(n_src, n_tgt)`` squared, recording the original shape."""
    sim = sim if isinstance(sim, SimilarityMatrix) else SimilarityMatrix(sim)
    n, m = sim.shape
    k = max(n, m)
    if n == m:
        return sim
    out = np.zeros((k, k))
    out[:n, :m] = sim
    return SimilarityMatrix(out, orig_shape=sim.orig_shape)


def sinkhorn(sim, tau=0.05, iters=10):
    """Alternate row then column normalization of ``exp(sim / tau)``.

    ``iters = 0`` returns the raw ``exp(sim / tau)``.  For ``iters >= 1`` the
    recursion runs on log-scores, which is exact thanks to the scale
    invariance of the normalizations and cannot overflow for small ``tau``.
    """
    if tau <= 0:
        raise ParameterError("tau must be positive")
    if iters < 0:
        raise ParameterError("iters must be >= 0")
    s = np.asarray(sim, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ShapeError(f"sinkhorn needs a square matrix, got {s.shape}")
    orig = getattr(sim, "orig_shape", s.shape)
    if iters == 0:
        with np.errstate(over="raise"):
            try:
                out = np.exp(s / tau)
            except FloatingPointError:
                raise NumericError("exp(sim / tau) overflows; use iters >= 1", stage="sinkhorn") from None
        return SimilarityMatrix(out, orig)
    if s.size == 0:
        return SimilarityMatrix(s.copy(), orig)
    log_s = s / tau
    log_s -= log_s.max()
    for _ in range(iters):
        log_s -= _logsumexp(log_s, axis=1)
        log_s -= _logsumexp(log_s, axis=0)
    return SimilarityMatrix(np.exp(log_s), orig)


def _logsumexp(x, axis):
    m = x.max(axis=axis, keepdims=True)
    return m + np.log(np.exp(x - m).sum(axis=axis, keepdims=True))


def greedy_match(sim):
    """Row-wise argmax (lowest column wins ties); may map several rows to one column."""
    s = np.asarray(sim)
    match = np.argmax(s, axis=1) if s.shape[1] else np.full(s.shape[0], Assignment.NONE)
    return Assignment(_unpad_match(match, sim))


def csls(sim, k=10):
    """Cross-domain similarity local scaling: ``2 s_ij - r_tgt(i) - r_src(j)``.

    ``r_tgt(i)`` is the mean of row ``i``'s top-``k`` similarities and
    ``r_src(j)`` the mean of column ``j``'s.
    """
    s = np.asarray(sim, dtype=np.float64)
    if not 1 <= k <= min(s.shape):
        raise ParameterError(f"k must be in [1, {min(s.shape)}], got {k}")
    r_tgt = -np.partition(-s, k - 1, axis=1)[:, :k].mean(axis=1)
    r_src = -np.partition(-s, k - 1, axis=0)[:k, :].mean(axis=0)
    return SimilarityMatrix(2.0 * s - r_tgt[:, None] - r_src[None, :], getattr(sim, "orig_shape", s.shape))


def exact_assignment(sim):
    """Permutation maximizing total similarity (O(n^3) Jonker-Volgenant solver)."""
    s = np.asarray(sim, dtype=np.float64)
    if s.shape[0] != s.shape[1]:
        raise ShapeError(f"exact_assignment needs a square matrix, got {s.shape}")
    _, cols = linear_sum_assignment(s, maximize=True)
    return Assignment(_unpad_match(cols, sim))


def sinkhorn_match(sim, tau=0.05, iters=10):
    """Pad, run Sinkhorn, and read off the row-argmax as an assignment."""
    padded = pad_square(sim)
    scores = sinkhorn(padded, tau, iters)
    match = np.argmax(np.asarray(scores), axis=1)
    return Assignment(_unpad_match(match, padded), scores=scores.unpadded())
