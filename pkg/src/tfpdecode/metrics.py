"""Hits@k and mean reciprocal rank."""

import numpy as np

from .errors import ParameterError, UndefinedResultError


def ranks(sim, truth):
    """1-based rank of the true target in each truth pair's row.

    Counts the columns scoring strictly higher than the true one, so ties
    resolve in the truth's favor.
    """
    s = np.asarray(sim)
    truth = np.asarray(truth, dtype=np.int64).reshape(-1, 2)
    n, m = getattr(sim, "orig_shape", s.shape)
    if truth.size:
        if truth[:, 0].min() < 0 or truth[:, 0].max() >= n:
            raise IndexError("truth pair source index out of range")
        if truth[:, 1].min() < 0 or truth[:, 1].max() >= m:
            raise IndexError("truth pair target index out of range")
    rows = s[truth[:, 0], :m]
    correct = s[truth[:, 0], truth[:, 1]]
    return 1 + (rows > correct[:, None]).sum(axis=1)


def _check(r):
    r = np.asarray(r)
    if r.size == 0:
        raise UndefinedResultError("metrics are undefined for an empty rank list")
    return r


def hits_at_k(r, k):
    r = _check(r)
    if k < 1:
        raise ParameterError("k must be >= 1")
    return float(np.mean(r <= k))


def mrr(r):
    r = _check(r)
    return float(np.mean(1.0 / r))


def assignment_hits_at_1(assignment, truth):
    """Fraction of truth pairs the one-to-one assignment gets right."""
    truth = np.asarray(truth, dtype=np.int64).reshape(-1, 2)
    if truth.size == 0:
        raise UndefinedResultError("metrics are undefined for an empty truth set")
    return float(np.mean(assignment.match[truth[:, 0]] == truth[:, 1]))
