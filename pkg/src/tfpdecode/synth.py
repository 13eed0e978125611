"""Synthetic KG pairs with a known ground-truth alignment."""

import numpy as np

from .errors import ParameterError
from .kg import DatasetPair, KnowledgeGraph, SeedAlignment

TRAIN_FRACTION = 0.3


def generate_kg(n_entities, n_relations, n_triples, rng_seed=0):
    """Uniformly sample ``n_triples`` distinct triples without self-loops."""
    if min(n_entities, n_relations, n_triples) < 0:
        raise ParameterError("counts must be non-negative")
    capacity = n_entities * max(n_entities - 1, 0) * n_relations
    if n_triples > capacity:
        raise ParameterError(
            f"cannot draw {n_triples} distinct loop-free triples from "
            f"{n_entities} entities and {n_relations} relations (max {capacity})"
        )
    if n_triples == 0:
        return KnowledgeGraph(n_entities, n_relations, np.zeros((0, 3), np.int64))
    rng = np.random.default_rng(rng_seed)
    codes = rng.choice(capacity, size=n_triples, replace=False)
    # code -> (h, r, t') with t' indexing the n-1 entities other than h
    h, rest = np.divmod(codes, n_relations * (n_entities - 1))
    r, t = np.divmod(rest, n_entities - 1)
    t = t + (t >= h)
    return KnowledgeGraph(n_entities, n_relations, np.column_stack([h, r, t]))


def make_pair(kg, dropout=0.0, noise_sigma=0.0, embed_dim=32, rng_seed=0, permute=True):
    """Derive a noisy, relabeled target KG and encoder-like embeddings for both sides.

    Each source entity ``e`` gets a latent unit vector; its source embedding
    and the embedding of its counterpart ``perm[e]`` are that latent plus
    independent Gaussian noise.  The target keeps each triple with
    probability ``1 - dropout``.  All pairs ``(e, perm[e])`` are shuffled and
    split 30/70 into train/test.
    """
    if not 0.0 <= dropout < 1.0:
        raise ParameterError("dropout must lie in [0, 1)")
    if noise_sigma < 0:
        raise ParameterError("noise_sigma must be >= 0")
    if embed_dim < 1:
        raise ParameterError("embed_dim must be >= 1")
    rng = np.random.default_rng(rng_seed)
    n = kg.n_entities
    perm = rng.permutation(n) if permute else np.arange(n)

    keep = rng.random(kg.n_triples) >= dropout
    kept = kg.triples[keep]
    tgt_triples = np.column_stack([perm[kept[:, 0]], kept[:, 1], perm[kept[:, 2]]])
    target = KnowledgeGraph(n, kg.n_relations, tgt_triples)

    latent = rng.standard_normal((n, embed_dim))
    latent /= np.linalg.norm(latent, axis=1, keepdims=True)
    x_src = latent + noise_sigma * rng.standard_normal((n, embed_dim))
    x_tgt = np.empty_like(latent)
    x_tgt[perm] = latent + noise_sigma * rng.standard_normal((n, embed_dim))

    order = rng.permutation(n)
    pairs = np.column_stack([order, perm[order]])
    alignment = SeedAlignment.split(pairs, TRAIN_FRACTION)
    return DatasetPair(kg, target, alignment, x_src, x_tgt)
