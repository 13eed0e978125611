import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from tfpdecode import KnowledgeGraph

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def toy_kg():
    # 3 entities, 2 relations
    return KnowledgeGraph(3, 2, [(0, 0, 1), (0, 1, 2), (1, 0, 2)])


def random_kg(rng, max_entities=12, max_relations=4, max_triples=30, self_loops=True):
    n = int(rng.integers(1, max_entities + 1))
    r = int(rng.integers(1, max_relations + 1))
    m = int(rng.integers(0, max_triples + 1))
    t = np.column_stack([rng.integers(0, n, m), rng.integers(0, r, m), rng.integers(0, n, m)])
    if not self_loops:
        t = t[t[:, 0] != t[:, 2]]
    return KnowledgeGraph(n, r, t.reshape(-1, 3))


@st.composite
def kgs(draw, max_entities=12, max_relations=4, max_triples=30):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_kg(np.random.default_rng(seed), max_entities, max_relations, max_triples)


def random_connected_adjacency(rng, n, extra_edge_prob=0.15):
    """Dense 0/1 symmetric adjacency of a random spanning tree plus extra edges."""
    a = np.zeros((n, n))
    order = rng.permutation(n)
    for k in range(1, n):
        i, j = order[k], order[rng.integers(0, k)]
        a[i, j] = a[j, i] = 1
    extra = np.triu(rng.random((n, n)) < extra_edge_prob, 1)
    a = np.maximum(a, extra + extra.T)
    np.fill_diagonal(a, 0)
    return a


def dense_sym_normalize(a):
    d = 1.0 / np.sqrt(a.sum(axis=1) + 1.0)
    return d[:, None] * a * d[None, :]
