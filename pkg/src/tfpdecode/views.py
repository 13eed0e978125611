"""Generalized adjacency matrices built from a knowledge graph's triples."""

from dataclasses import dataclass

import numpy as np

from .sparse import SparseMatrix, row_normalize, sym_normalize


def build_proximal(kg, dtype=np.float64):
    """Entity-to-relation indicator, ``|E| x |R|``: 1 where ``h`` heads a triple with ``r``."""
    pairs = np.unique(kg.triples[:, [0, 1]], axis=0) if kg.n_triples else np.zeros((0, 2), np.int64)
    return SparseMatrix.from_coo(pairs[:, 0], pairs[:, 1], 1.0, (kg.n_entities, kg.n_relations), dtype)


def build_distal(kg, dtype=np.float64):
    """Relation-to-entity indicator, ``|R| x |E|``: 1 where ``r`` points at tail ``t``."""
    pairs = np.unique(kg.triples[:, [1, 2]], axis=0) if kg.n_triples else np.zeros((0, 2), np.int64)
    return SparseMatrix.from_coo(pairs[:, 0], pairs[:, 1], 1.0, (kg.n_relations, kg.n_entities), dtype)


def build_integral(kg, dtype=np.float64):
    """Entity-to-entity counts, ``|E| x |E|``, directed.

    The diagonal holds the number of triples each entity takes part in (a
    self-loop triple counts once); off-diagonal ``(h, t)`` holds the number
    of triples from ``h`` to ``t``.  Both terms are added into one matrix,
    so a self-loop triple also adds its pair count to the diagonal.
    """
    n = kg.n_entities
    h, t = kg.heads, kg.tails
    involvement = np.bincount(h, minlength=n) + np.bincount(t, minlength=n)
    # a self-loop is one triple, not two involvements
    involvement -= np.bincount(h[h == t], minlength=n)
    diag = np.arange(n)
    rows = np.concatenate([diag, h])
    cols = np.concatenate([diag, t])
    vals = np.concatenate([involvement, np.ones(kg.n_triples)]).astype(dtype)
    return SparseMatrix.from_coo(rows, cols, vals, (n, n), dtype)


def build_tri_rel(kg, dtype=np.float64):
    """Triple-to-relation one-hot, ``|T| x |R|``, rows in canonical triple order."""
    m = kg.n_triples
    return SparseMatrix.from_coo(np.arange(m), kg.relations, 1.0, (m, kg.n_relations), dtype)


def undirected_adjacency(kg, dtype=np.float64):
    """Binary symmetric entity graph: an edge wherever any triple links the pair."""
    n = kg.n_entities
    h, t = kg.heads, kg.tails
    m = SparseMatrix.from_coo(np.concatenate([h, t]), np.concatenate([t, h]), 1.0, (n, n), dtype)
    return SparseMatrix(m.shape, m.indptr, m.indices, np.ones_like(m.data))


def build_laplacian(kg, dtype=np.float64):
    """Normalized Laplacian ``I - sym_normalize(A)`` of the undirected entity graph."""
    a_tilde = sym_normalize(undirected_adjacency(kg, dtype))
    n = kg.n_entities
    rows = np.concatenate([np.arange(n), a_tilde.row_ids()])
    cols = np.concatenate([np.arange(n), a_tilde.indices])
    vals = np.concatenate([np.ones(n, dtype=dtype), -a_tilde.data])
    return SparseMatrix.from_coo(rows, cols, vals, (n, n), dtype)


@dataclass(frozen=True)
class Views:
    """Row-normalized propagation views plus the raw triple-to-relation matrix."""

    proximal: SparseMatrix
    distal: SparseMatrix
    integral: SparseMatrix
    tri_rel: SparseMatrix


def build_views(kg, dtype=np.float64):
    return Views(
        proximal=row_normalize(build_proximal(kg, dtype)),
        distal=row_normalize(build_distal(kg, dtype)),
        integral=row_normalize(build_integral(kg, dtype)),
        tri_rel=build_tri_rel(kg, dtype),
    )
