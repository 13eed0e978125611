import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from conftest import kgs
from tfpdecode import (
    DatasetPair,
    KnowledgeGraph,
    SeedAlignment,
    load_embeddings,
    load_pairs,
    load_triples,
    write_embeddings,
    write_triples,
)
from tfpdecode.errors import DataError, FormatError, OneToOneError, ParseError, RangeError, ShapeError


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_knowledge_graph_rejects_out_of_range_ids():
    with pytest.raises(RangeError):
        KnowledgeGraph(2, 1, [(0, 0, 2)])
    with pytest.raises(RangeError):
        KnowledgeGraph(3, 1, [(0, 1, 2)])


def test_knowledge_graph_drops_duplicates_and_sorts():
    kg = KnowledgeGraph(3, 2, [(1, 0, 2), (0, 1, 2), (0, 0, 1), (1, 0, 2)])
    assert kg.triples.tolist() == [[0, 0, 1], [0, 1, 2], [1, 0, 2]]


def test_load_triples_example(tmp_path):
    kg = load_triples(write(tmp_path / "t.tsv", "0\t0\t1\n0\t1\t2\n1\t0\t2\n"))
    assert (kg.n_entities, kg.n_relations, kg.n_triples) == (3, 2, 3)


def test_load_triples_empty(tmp_path):
    kg = load_triples(write(tmp_path / "t.tsv", ""))
    assert (kg.n_entities, kg.n_relations, kg.n_triples) == (0, 0, 0)


def test_load_triples_duplicates_comments_blank(tmp_path):
    kg = load_triples(write(tmp_path / "t.tsv", "# header\n0\t0\t1\n\n0\t0\t1\n"))
    assert kg.n_triples == 1


def test_load_triples_parse_error_line_number(tmp_path):
    with pytest.raises(ParseError) as info:
        load_triples(write(tmp_path / "t.tsv", "0\t0\t1\n0\tx\t2\n"))
    assert info.value.line == 2
    with pytest.raises(ParseError) as info:
        load_triples(write(tmp_path / "t.tsv", "0\t0\n"))
    assert info.value.line == 1


def test_load_triples_id_overflow(tmp_path):
    with pytest.raises(RangeError):
        load_triples(write(tmp_path / "t.tsv", f"0\t0\t{2**40}\n"))


def test_load_triples_ids_file(tmp_path):
    write(tmp_path / "ids.tsv", "0\thttp://a\n1\thttp://b\n4\thttp://e\n")
    kg = load_triples(write(tmp_path / "t.tsv", "0\t0\t1\n"), ids_path=tmp_path / "ids.tsv")
    assert kg.n_entities == 5


def test_load_triples_order_independent(tmp_path):
    lines = ["0\t0\t1", "2\t1\t0", "1\t1\t2", "2\t0\t2"]
    a = load_triples(write(tmp_path / "a.tsv", "\n".join(lines) + "\n"))
    b = load_triples(write(tmp_path / "b.tsv", "\n".join(lines[::-1]) + "\n"))
    assert a == b


@given(kgs())
def test_triple_round_trip(tmp_path_factory, kg):
    path = tmp_path_factory.mktemp("rt") / "t.tsv"
    write_triples(path, kg)
    assert load_triples(path, n_entities=kg.n_entities, n_relations=kg.n_relations) == kg


def test_load_pairs(tmp_path):
    assert load_pairs(write(tmp_path / "p.tsv", "0\t5\n1\t6\n")).tolist() == [[0, 5], [1, 6]]
    with pytest.raises(OneToOneError):
        load_pairs(write(tmp_path / "p.tsv", "0\t5\n0\t6\n"))
    with pytest.raises(OneToOneError):
        load_pairs(write(tmp_path / "p.tsv", "0\t5\n1\t5\n"))


def test_split_thirty_seventy():
    pairs = np.column_stack([np.arange(15000), np.arange(15000)])
    seeds = SeedAlignment.split(pairs)
    assert len(seeds.train_pairs) == 4500 and len(seeds.test_pairs) == 10500


def test_seed_alignment_disjoint():
    with pytest.raises(OneToOneError):
        SeedAlignment([(0, 1)], [(0, 2)])
    with pytest.raises(OneToOneError):
        SeedAlignment([(0, 1)], [(3, 1)])


def test_dataset_pair_validation():
    kg = KnowledgeGraph(2, 1, [(0, 0, 1)])
    seeds = SeedAlignment([(0, 0)], [(1, 1)])
    DatasetPair(kg, kg, seeds, np.zeros((2, 3)), np.zeros((2, 3)))
    with pytest.raises(ShapeError):
        DatasetPair(kg, kg, seeds, np.zeros((3, 3)), np.zeros((2, 3)))
    with pytest.raises(ShapeError):
        DatasetPair(kg, kg, seeds, np.zeros((2, 3)), np.zeros((2, 4)))


def test_load_text_embeddings(tmp_path):
    x = load_embeddings(write(tmp_path / "e.txt", "2 2\n1 0\n0 1\n"))
    np.testing.assert_array_equal(x, np.eye(2))


def test_load_binary_embeddings(tmp_path):
    path = tmp_path / "e.bin"
    path.write_bytes(b"TFPE" + (1).to_bytes(4, "little") + (3).to_bytes(4, "little")
                     + np.array([0.5, -0.5, 1.0], "<f4").tobytes())
    np.testing.assert_array_equal(load_embeddings(path), [[0.5, -0.5, 1.0]])


def test_embedding_format_errors(tmp_path):
    with pytest.raises(FormatError):
        load_embeddings(write(tmp_path / "a.txt", "2 2\n1 0\n"))
    with pytest.raises(FormatError):
        load_embeddings(write(tmp_path / "b.txt", "1 2\n1 0 3\n"))
    with pytest.raises(DataError):
        load_embeddings(write(tmp_path / "c.txt", "1 2\n1 nan\n"))
    bad = tmp_path / "d.bin"
    bad.write_bytes(b"TFPE" + (2).to_bytes(4, "little") + (2).to_bytes(4, "little") + b"\0" * 12)
    with pytest.raises(FormatError):
        load_embeddings(bad)


@given(hnp.arrays(np.float32, st.tuples(st.integers(0, 6), st.integers(0, 5)),
                  elements=st.floats(-1e6, 1e6, width=32)))
def test_embedding_round_trip(tmp_path_factory, x):
    d = tmp_path_factory.mktemp("emb")
    write_embeddings(d / "x.bin", x)
    np.testing.assert_array_equal(load_embeddings(d / "x.bin", dtype=np.float32), x)
    write_embeddings(d / "x.txt", x.astype(np.float64), fmt="text")
    np.testing.assert_array_equal(load_embeddings(d / "x.txt"), x.astype(np.float64))
