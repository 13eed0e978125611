"""Triple feature propagation: multi-view propagation and triple-tensor features.

Pipeline for a pair of KGs decoded on their disjoint union:

1. build row-normalized proximal / distal / integral views and the
   triple-to-relation one-hot matrix;
2. propagate ``X_r = distal @ X_e``, ``X_e <- integral @ X_e + proximal @ X_r``
   for K steps, resetting seed rows after every step;
3. concatenate the entity history (or keep the last iterate);
4. project relation features to ``d_r`` and entity features to ``d_e`` with
   random unit-column matrices shared by both KGs;
5. spread projected relation features onto triples, fold them into ``d_r``
   sparse entity-by-entity slices, and concatenate ``slice_i @ X_e``.
"""

import contextlib
import logging
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NumericError, ParameterError, ShapeError
from .flow import SeedMask
from .kg import KnowledgeGraph
from .sparse import INDEX_DTYPE, SparseMatrix, as_features, concat_columns, spmm
from .views import build_views

log = logging.getLogger(__name__)

HISTORY_MODES = ("concat_history", "last_iterate")
SEED_FEATURE_MODES = ("shared", "separate")


@dataclass(frozen=True)
class DecodeConfig:
    iterations: int = 10
    relation_dim: int = 512
    entity_dim: int = 16
    rng_seed: int = 0
    history_mode: str = "concat_history"
    sinkhorn_tau: float = 0.05
    sinkhorn_iters: int = 10
    seed_features: str = "shared"
    dtype: str = "float64"

    def __post_init__(self):
        if self.iterations < 1:
            raise ParameterError("iterations must be >= 1")
        if self.relation_dim < 1 or self.entity_dim < 1:
            raise ParameterError("projection dimensions must be >= 1")
        if self.history_mode not in HISTORY_MODES:
            raise ParameterError(f"history_mode must be one of {HISTORY_MODES}")
        if self.seed_features not in SEED_FEATURE_MODES:
            raise ParameterError(f"seed_features must be one of {SEED_FEATURE_MODES}")
        if self.sinkhorn_tau <= 0:
            raise ParameterError("sinkhorn_tau must be positive")
        if self.sinkhorn_iters < 0:
            raise ParameterError("sinkhorn_iters must be >= 0")
        if np.dtype(self.dtype) not in (np.float32, np.float64):
            raise ParameterError("dtype must be float32 or float64")


@dataclass(frozen=True)
class JointIndex:
    """Offsets placing the target KG after the source KG in every id space."""

    n_src_entities: int
    n_tgt_entities: int
    n_src_relations: int
    n_tgt_relations: int
    n_src_triples: int
    n_tgt_triples: int

    @classmethod
    def for_pair(cls, source, target):
        return cls(
            source.n_entities, target.n_entities,
            source.n_relations, target.n_relations,
            source.n_triples, target.n_triples,
        )

    @property
    def n_entities(self):
        return self.n_src_entities + self.n_tgt_entities

    @property
    def n_relations(self):
        return self.n_src_relations + self.n_tgt_relations

    @property
    def entity_offset(self):
        return self.n_src_entities

    @property
    def relation_offset(self):
        return self.n_src_relations

    def src_entity(self, ids):
        return np.asarray(ids, dtype=np.int64)

    def tgt_entity(self, ids):
        return np.asarray(ids, dtype=np.int64) + self.n_src_entities

    def to_local(self, joint_id):
        """Map a joint entity id back to ``(side, local_id)`` with side 0=source."""
        joint_id = int(joint_id)
        if not 0 <= joint_id < self.n_entities:
            raise IndexError(joint_id)
        if joint_id < self.n_src_entities:
            return 0, joint_id
        return 1, joint_id - self.n_src_entities

    def merge(self, source, target):
        """Disjoint union of the two KGs; no edges cross between them."""
        shifted = target.triples + np.array(
            [self.n_src_entities, self.n_src_relations, self.n_src_entities], dtype=np.int64
        )
        return KnowledgeGraph(
            self.n_entities, self.n_relations, np.vstack([source.triples, shifted])
        )

    def split(self, x):
        """Split joint rows back into (source, target) views."""
        return x[: self.n_src_entities], x[self.n_src_entities:]


def _check_finite(x, stage):
    if not np.isfinite(x).all():
        raise NumericError("non-finite value produced", stage=stage)


def share_seed_features(x, src_rows, tgt_rows):
    """Give both rows of every seed pair their mean feature, in place.

    Seed pairs are the only link between the two graphs; with separate
    features nothing ties the propagated features of one KG to the other.
    """
    mean = 0.5 * (x[src_rows] + x[tgt_rows])
    x[src_rows] = mean
    x[tgt_rows] = mean
    return x


def propagate_step(x_e, views, seed_rows, x_seed):
    """One propagation step over the three normalized views.

    Returns ``(x_e_next, x_r)`` where ``x_r = distal @ x_e`` and
    ``x_e_next = integral @ x_e + proximal @ x_r`` with seed rows overwritten
    by ``x_seed``.  ``x_seed`` may hold either every row (only seed rows are
    read) or exactly the seed rows in ascending order.
    """
    x_e = as_features(x_e)
    mask = seed_rows if isinstance(seed_rows, SeedMask) else SeedMask(seed_rows)
    n = x_e.shape[0]
    if len(mask) != n:
        raise ShapeError(f"seed mask has {len(mask)} rows, features have {n}")
    if views.integral.shape != (n, n) or views.distal.n_cols != n or views.proximal.n_rows != n:
        raise ShapeError("views do not match the entity feature matrix")
    seeds = mask.seeds
    x_seed = np.asarray(x_seed)
    if x_seed.shape[0] == n:
        x_seed = x_seed[seeds]
    elif x_seed.shape[0] != seeds.size:
        raise ShapeError(f"x_seed has {x_seed.shape[0]} rows for {seeds.size} seeds")
    x_r = spmm(views.distal, x_e)
    x_next = spmm(views.integral, x_e)
    x_next += spmm(views.proximal, x_r)
    x_next[seeds] = x_seed
    return x_next, x_r


def run_propagation(x0, views, mask, cfg):
    """Apply :func:`propagate_step` ``cfg.iterations`` times.

    Returns ``(history, x_r_final)`` where ``history = [X^(0), ..., X^(K)]``.
    """
    x0 = as_features(x0)
    mask = mask if isinstance(mask, SeedMask) else SeedMask(mask)
    x_seed = x0[mask.seeds]
    history = [x0]
    x_r = None
    for _ in range(cfg.iterations):
        x_next, x_r = propagate_step(history[-1], views, mask, x_seed)
        history.append(x_next)
    return history, x_r


def concat_history(history):
    if not history:
        raise ShapeError("history is empty")
    return concat_columns(history)


def random_projection(x, out_dim, rng_seed):
    """Project ``x`` with a matrix of independent uniform unit-sphere columns.

    ``rng_seed`` is anything :func:`numpy.random.default_rng` accepts.
    """
    if out_dim < 1:
        raise ParameterError("out_dim must be >= 1")
    x = as_features(x)
    rng = np.random.default_rng(rng_seed)
    r = rng.standard_normal((x.shape[1], out_dim))
    norms = np.linalg.norm(r, axis=0)
    norms[norms == 0] = 1.0
    r /= norms
    return x @ r.astype(x.dtype, copy=False)


def triple_features(x_r, tri_rel):
    """Give each triple the (projected) feature of its relation."""
    return spmm(tri_rel, x_r)


@dataclass(frozen=True, eq=False)
class TripleTensor:
    """``d_r`` sparse ``|E| x |E|`` slices that share one (head, tail) pattern.

    Slice ``i`` has value ``values[p, i]`` at pattern position ``p``.  Behaves
    as a read-only sequence of :class:`SparseMatrix` slices.
    """

    shape: tuple
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    def __len__(self):
        return self.values.shape[1]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        rows = np.repeat(np.arange(self.shape[0], dtype=INDEX_DTYPE), np.diff(self.indptr))
        return SparseMatrix.from_coo(rows, self.indices, self.values[:, i], self.shape, self.values.dtype)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def n_pairs(self):
        return int(self.indices.size)


def build_triple_slices(kg, x_t):
    """Fold per-triple features into the (head, tail) slices.

    Triples sharing a (head, tail) pair are summed into the same entry.
    """
    x_t = as_features(x_t)
    if x_t.shape[0] != kg.n_triples:
        raise ShapeError(f"x_t has {x_t.shape[0]} rows for {kg.n_triples} triples")
    n = kg.n_entities
    d_r = x_t.shape[1]
    if kg.n_triples == 0:
        return TripleTensor(
            (n, n), np.zeros(n + 1, INDEX_DTYPE), np.zeros(0, INDEX_DTYPE), np.zeros((0, d_r), x_t.dtype)
        )
    h, t = kg.heads, kg.tails
    order = np.lexsort((kg.relations, t, h))
    hs, ts = h[order], t[order]
    starts = np.flatnonzero(np.r_[True, (hs[1:] != hs[:-1]) | (ts[1:] != ts[:-1])])
    values = np.add.reduceat(x_t[order], starts, axis=0)
    heads = hs[starts]
    indptr = np.zeros(n + 1, dtype=INDEX_DTYPE)
    np.cumsum(np.bincount(heads, minlength=n), out=indptr[1:])
    return TripleTensor((n, n), indptr, np.ascontiguousarray(ts[starts], INDEX_DTYPE), values)


def final_features(slices, x_e_proj):
    """Concatenate ``slice_i @ x_e_proj`` over all slices, in slice order."""
    x_e_proj = as_features(x_e_proj)
    if isinstance(slices, TripleTensor):
        if slices.shape[1] != x_e_proj.shape[0]:
            raise ShapeError(f"tensor {slices.shape} does not match features {x_e_proj.shape}")
        return _kernels.csr_slice_product(
            slices.indptr, slices.indices, slices.values, slices.shape[0], x_e_proj
        )
    slices = list(slices)
    if not slices:
        raise ShapeError("no slices given")
    return concat_columns([spmm(s, x_e_proj) for s in slices])


def decode(dataset, cfg=None, timings=None):
    """Run the full pipeline on a :class:`~tfpdecode.kg.DatasetPair`.

    Returns ``(x_out_src, x_out_tgt)``, each ``relation_dim * entity_dim``
    wide.  When ``timings`` is a dict it receives wall-clock seconds per stage.
    """
    cfg = cfg or DecodeConfig()
    dtype = np.dtype(cfg.dtype)
    with _stage(timings, "views"):
        joint = JointIndex.for_pair(dataset.source, dataset.target)
        kg = joint.merge(dataset.source, dataset.target)
        views = build_views(kg, dtype)

    with _stage(timings, "propagation"):
        x0 = np.vstack([dataset.source_embeddings, dataset.target_embeddings]).astype(dtype, copy=False)
        _check_finite(x0, "input")
        train = dataset.alignment.train_pairs
        src_ids, tgt_ids = joint.src_entity(train[:, 0]), joint.tgt_entity(train[:, 1])
        if cfg.seed_features == "shared":
            share_seed_features(x0, src_ids, tgt_ids)
        seeds = np.concatenate([src_ids, tgt_ids])
        mask = SeedMask.from_indices(joint.n_entities, seeds)
        history, x_r = run_propagation(x0, views, mask, cfg)
        if cfg.history_mode == "concat_history":
            x_e = concat_history(history)
        else:
            x_e = history[-1]
        del history
        _check_finite(x_e, "propagation")
        _check_finite(x_r, "propagation")

    with _stage(timings, "projection"):
        rel_seed, ent_seed = np.random.SeedSequence(cfg.rng_seed).spawn(2)
        x_r_proj = random_projection(x_r, cfg.relation_dim, rel_seed)
        x_e_proj = random_projection(x_e, cfg.entity_dim, ent_seed)
        del x_e
        _check_finite(x_r_proj, "projection")
        _check_finite(x_e_proj, "projection")

    with _stage(timings, "tensor"):
        x_t = triple_features(x_r_proj, views.tri_rel)
        tensor = build_triple_slices(kg, x_t)
        del x_t
        x_out = final_features(tensor, x_e_proj)
        _check_finite(x_out, "tensor")

    return joint.split(x_out)


@contextlib.contextmanager
def _stage(timings, name):
    t0 = time.perf_counter()
    try:
        yield
    finally:
        elapsed = time.perf_counter() - t0
        log.debug("stage %s: %.3fs", name, elapsed)
        if timings is not None:
            timings[name] = timings.get(name, 0.0) + elapsed
