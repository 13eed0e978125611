"""Knowledge-graph data model and the triple / pair / embedding file formats.

File formats
------------
triples     UTF-8 lines ``head<TAB>relation<TAB>tail`` (decimal ids);
            blank lines and lines starting with ``#`` are skipped.
pairs       lines ``src<TAB>tgt``.
embeddings  text: header ``n_rows n_cols`` then one whitespace-separated
            row per line.  binary: ``b"TFPE"``, uint32 LE ``n_rows``,
            uint32 LE ``n_cols``, then float32 LE payload, row-major.
"""

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, FormatError, OneToOneError, ParseError, RangeError, ShapeError

MAX_ID = 2**31 - 1
EMB_MAGIC = b"TFPE"
_HEADER = struct.Struct("<4sII")


@dataclass(frozen=True, eq=False)
class KnowledgeGraph:
    """Entities and relations are dense 0-based ids; ``triples`` is an (T, 3) int array.

    Triples are stored deduplicated and sorted lexicographically on
    ``(head, relation, tail)``; that order is what ``build_tri_rel`` and the
    triple tensor index against.
    """

    n_entities: int
    n_relations: int
    triples: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.triples, dtype=np.int64).reshape(-1, 3)
        if t.size:
            if t.min() < 0:
                raise RangeError("negative id in triples")
            if t[:, [0, 2]].max() >= self.n_entities:
                raise RangeError(f"entity id exceeds n_entities={self.n_entities}")
            if t[:, 1].max() >= self.n_relations:
                raise RangeError(f"relation id exceeds n_relations={self.n_relations}")
        t = canonical_triples(t)
        t.setflags(write=False)
        object.__setattr__(self, "triples", t)
        object.__setattr__(self, "n_entities", int(self.n_entities))
        object.__setattr__(self, "n_relations", int(self.n_relations))

    @classmethod
    def from_triples(cls, triples, n_entities=None, n_relations=None):
        t = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        if n_entities is None:
            n_entities = int(t[:, [0, 2]].max()) + 1 if t.size else 0
        if n_relations is None:
            n_relations = int(t[:, 1].max()) + 1 if t.size else 0
        return cls(n_entities, n_relations, t)

    @property
    def n_triples(self):
        return int(self.triples.shape[0])

    @property
    def heads(self):
        return self.triples[:, 0]

    @property
    def relations(self):
        return self.triples[:, 1]

    @property
    def tails(self):
        return self.triples[:, 2]

    def __eq__(self, other):
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return (
            self.n_entities == other.n_entities
            and self.n_relations == other.n_relations
            and np.array_equal(self.triples, other.triples)
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"KnowledgeGraph(n_entities={self.n_entities}, "
            f"n_relations={self.n_relations}, n_triples={self.n_triples})"
        )


def canonical_triples(t):
    """Deduplicate and sort triples on (head, relation, tail)."""
    t = np.asarray(t, dtype=np.int64).reshape(-1, 3)
    if t.shape[0] == 0:
        return np.zeros((0, 3), dtype=np.int64)
    return np.ascontiguousarray(np.unique(t, axis=0))


def _check_one_to_one(pairs, what="pairs"):
    if pairs.size == 0:
        return
    for side, name in ((0, "source"), (1, "target")):
        ids, counts = np.unique(pairs[:, side], return_counts=True)
        if (counts > 1).any():
            raise OneToOneError(f"{what}: {name} id {int(ids[counts > 1][0])} appears more than once")


@dataclass(frozen=True, eq=False)
class SeedAlignment:
    train_pairs: np.ndarray
    test_pairs: np.ndarray

    def __post_init__(self):
        train = np.asarray(self.train_pairs, dtype=np.int64).reshape(-1, 2)
        test = np.asarray(self.test_pairs, dtype=np.int64).reshape(-1, 2)
        _check_one_to_one(train, "train pairs")
        _check_one_to_one(test, "test pairs")
        for side in (0, 1):
            if np.intersect1d(train[:, side], test[:, side]).size:
                raise OneToOneError("train and test pairs share an entity")
        object.__setattr__(self, "train_pairs", train)
        object.__setattr__(self, "test_pairs", test)

    @classmethod
    def split(cls, pairs, train_fraction=0.3):
        """Split ordered pairs: the first ``round(train_fraction * n)`` become train."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        n_train = int(round(train_fraction * len(pairs)))
        return cls(pairs[:n_train], pairs[n_train:])

    def __eq__(self, other):
        if not isinstance(other, SeedAlignment):
            return NotImplemented
        return np.array_equal(self.train_pairs, other.train_pairs) and np.array_equal(
            self.test_pairs, other.test_pairs
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DatasetPair:
    source: KnowledgeGraph
    target: KnowledgeGraph
    alignment: SeedAlignment
    source_embeddings: np.ndarray = field(repr=False)
    target_embeddings: np.ndarray = field(repr=False)

    def __post_init__(self):
        xs, xt = self.source_embeddings, self.target_embeddings
        if xs.ndim != 2 or xt.ndim != 2:
            raise ShapeError("embeddings must be 2-D")
        if xs.shape[0] != self.source.n_entities:
            raise ShapeError(f"source embeddings have {xs.shape[0]} rows, KG has {self.source.n_entities} entities")
        if xt.shape[0] != self.target.n_entities:
            raise ShapeError(f"target embeddings have {xt.shape[0]} rows, KG has {self.target.n_entities} entities")
        if xs.shape[1] != xt.shape[1]:
            raise ShapeError(f"embedding widths differ: {xs.shape[1]} vs {xt.shape[1]}")
        for side, kg in ((0, self.source), (1, self.target)):
            for pairs in (self.alignment.train_pairs, self.alignment.test_pairs):
                if pairs.size and pairs[:, side].max() >= kg.n_entities:
                    raise RangeError("alignment references an entity outside its KG")

    def __eq__(self, other):
        if not isinstance(other, DatasetPair):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and self.alignment == other.alignment
            and np.array_equal(self.source_embeddings, other.source_embeddings)
            and np.array_equal(self.target_embeddings, other.target_embeddings)
        )

    __hash__ = None


# -- triples ---------------------------------------------------------------

def _parse_int_fields(line, n_fields, path, lineno):
    fields = line.split("\t")
    if len(fields) != n_fields:
        raise ParseError(f"expected {n_fields} tab-separated fields, got {len(fields)}", path, lineno)
    try:
        values = [int(f.strip()) for f in fields]
    except ValueError:
        raise ParseError(f"non-integer field in {line!r}", path, lineno) from None
    for v in values:
        if v < 0:
            raise ParseError(f"negative id {v}", path, lineno)
        if v > MAX_ID:
            raise RangeError(f"{path}:{lineno}: id {v} exceeds {MAX_ID}")
    return values


def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line


def load_ids(path):
    """Read an ``id<TAB>name`` file and return ``{id: name}``."""
    names = {}
    for lineno, line in _data_lines(path):
        key, sep, name = line.partition("\t")
        try:
            names[int(key)] = name if sep else ""
        except ValueError:
            raise ParseError(f"bad id {key!r}", path, lineno) from None
    return names


def load_triples(path, n_entities=None, n_relations=None, ids_path=None):
    """Parse a triple file into a :class:`KnowledgeGraph`.

    Entity / relation counts default to ``1 + max id`` seen in the file; an
    explicit count (or an ``id<TAB>uri`` companion file via ``ids_path``)
    covers entities that appear in no triple.
    """
    rows = [_parse_int_fields(line, 3, path, lineno) for lineno, line in _data_lines(path)]
    t = np.asarray(rows, dtype=np.int64).reshape(-1, 3)
    if ids_path is not None and n_entities is None:
        ids = load_ids(ids_path)
        n_entities = max(ids) + 1 if ids else 0
    seen_e = int(t[:, [0, 2]].max()) + 1 if t.size else 0
    seen_r = int(t[:, 1].max()) + 1 if t.size else 0
    if n_entities is None:
        n_entities = seen_e
    elif seen_e > n_entities:
        raise RangeError(f"{path}: entity id {seen_e - 1} >= declared count {n_entities}")
    if n_relations is None:
        n_relations = seen_r
    elif seen_r > n_relations:
        raise RangeError(f"{path}: relation id {seen_r - 1} >= declared count {n_relations}")
    return KnowledgeGraph(n_entities, n_relations, t)


def write_triples(path, kg):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for h, r, t in kg.triples.tolist():
            fh.write(f"{h}\t{r}\t{t}\n")


# -- pairs -----------------------------------------------------------------

def load_pairs(path):
    """Read ``src<TAB>tgt`` lines; raises OneToOneError on any repeated id."""
    rows = [_parse_int_fields(line, 2, path, lineno) for lineno, line in _data_lines(path)]
    pairs = np.asarray(rows, dtype=np.int64).reshape(-1, 2)
    _check_one_to_one(pairs, str(path))
    return pairs


def write_pairs(path, pairs):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s, t in np.asarray(pairs, dtype=np.int64).reshape(-1, 2).tolist():
            fh.write(f"{s}\t{t}\n")


# -- embeddings ------------------------------------------------------------

def _check_finite(x, path):
    if not np.isfinite(x).all():
        bad = np.argwhere(~np.isfinite(x))[0]
        raise DataError(f"{path}: non-finite value at row {bad[0]}, column {bad[1]}")


def load_embeddings(path, dtype=np.float64):
    """Load a feature matrix from either embedding format (sniffed by magic bytes)."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == EMB_MAGIC:
        x = _load_binary(path)
    else:
        x = _load_text(path)
    _check_finite(x, path)
    return np.ascontiguousarray(x, dtype=dtype)


def _load_binary(path):
    size = os.path.getsize(path)
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        _, n_rows, n_cols = _HEADER.unpack(header)
        expected = _HEADER.size + 4 * n_rows * n_cols
        if size != expected:
            raise FormatError(f"{path}: header declares {n_rows}x{n_cols} but file has {size} bytes, expected {expected}")
        x = np.fromfile(fh, dtype="<f4", count=n_rows * n_cols)
    return x.reshape(n_rows, n_cols)


def _load_text(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise FormatError(f"{path}: first line must be 'n_rows n_cols'")
        try:
            n_rows, n_cols = int(header[0]), int(header[1])
        except ValueError:
            raise FormatError(f"{path}: bad header {header}") from None
        rows = []
        for lineno, line in enumerate(fh, start=2):
            # a zero-width matrix is written as empty rows
            if not line.strip() and n_cols > 0:
                continue
            parts = line.split()
            if len(parts) != n_cols:
                raise FormatError(f"{path}:{lineno}: expected {n_cols} values, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise ParseError(f"non-numeric value in {line.strip()!r}", path, lineno) from None
    if len(rows) != n_rows:
        raise FormatError(f"{path}: header declares {n_rows} rows, found {len(rows)}")
    return np.asarray(rows, dtype=np.float64).reshape(n_rows, n_cols)


def write_embeddings(path, x, fmt="binary"):
    """Write ``x`` in the binary (float32) or text (full float64 precision) format."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise ShapeError("embeddings must be 2-D")
    _check_finite(x, path)
    n_rows, n_cols = x.shape
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(EMB_MAGIC, n_rows, n_cols))
            np.ascontiguousarray(x, dtype="<f4").tofile(fh)
    elif fmt == "text":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{n_rows} {n_cols}\n")
            for row in np.asarray(x, dtype=np.float64):
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
    else:
        raise ValueError(f"unknown embedding format {fmt!r}")


# -- dataset directories ----------------------------------------------------

DATASET_FILES = {
    "src_triples": "triples_src.tsv",
    "tgt_triples": "triples_tgt.tsv",
    "train_pairs": "train_pairs.tsv",
    "test_pairs": "test_pairs.tsv",
    "src_emb": "emb_src.bin",
    "tgt_emb": "emb_tgt.bin",
}


def write_dataset(directory, dataset):
    os.makedirs(directory, exist_ok=True)
    p = {k: os.path.join(directory, v) for k, v in DATASET_FILES.items()}
    write_triples(p["src_triples"], dataset.source)
    write_triples(p["tgt_triples"], dataset.target)
    write_pairs(p["train_pairs"], dataset.alignment.train_pairs)
    write_pairs(p["test_pairs"], dataset.alignment.test_pairs)
    write_embeddings(p["src_emb"], dataset.source_embeddings)
    write_embeddings(p["tgt_emb"], dataset.target_embeddings)
    return p


def load_dataset(directory, dtype=np.float64, n_relations=None):
    """Load a dataset directory written by :func:`write_dataset`.

    Entity counts come from the embedding row counts, so entities without
    triples survive the round trip.  Relation counts are inferred unless
    given as a ``(n_src, n_tgt)`` tuple.
    """
    p = {k: os.path.join(directory, v) for k, v in DATASET_FILES.items()}
    xs = load_embeddings(p["src_emb"], dtype=dtype)
    xt = load_embeddings(p["tgt_emb"], dtype=dtype)
    nr_s, nr_t = n_relations if n_relations is not None else (None, None)
    src = load_triples(p["src_triples"], n_entities=xs.shape[0], n_relations=nr_s)
    tgt = load_triples(p["tgt_triples"], n_entities=xt.shape[0], n_relations=nr_t)
    alignment = SeedAlignment(load_pairs(p["train_pairs"]), load_pairs(p["test_pairs"]))
    return DatasetPair(src, tgt, alignment, xs, xt)
