import json
import math

import numpy as np
import pytest

from breachdrill.backends import MockEmbeddingBackend
from breachdrill.copilot import (
    BloomTag,
    CorruptIndex,
    DimensionMismatch,
    DuplicateSnippetId,
    KnowledgeSnippet,
    VectorIndex,
    VersionMismatch,
    ZeroVector,
    build_index,
    cosine,
    load_index,
    save_index,
)

TAGS = list(BloomTag)


def brute_force_rank(snippets, query, k, bloom=None):
    """Independent oracle: per-snippet cosine with plain loops, same
    documented tie-break (descending score, then lexicographic id)."""
    qn = math.sqrt(sum(float(x) * float(x) for x in query))
    scored = []
    for s in snippets:
        if bloom is not None and s.bloom_tag is not bloom:
            continue
        dot = sum(float(a) * float(b) for a, b in zip(s.embedding, query))
        norm = math.sqrt(sum(float(a) * float(a) for a in s.embedding))
        scored.append((s.snippet_id, dot / (norm * qn)))
    scored.sort(key=lambda p: (-p[1], p[0]))
    return scored[:k]


def make_snippet(i, dim=16, rng=None, tag=None, embedding=None):
    rng = rng or np.random.default_rng(i)
    return KnowledgeSnippet(
        snippet_id=f"sn{i:04d}",
        doc_id=f"doc{i % 7}",
        text=f"snippet text {i}",
        bloom_tag=tag or TAGS[i % 4],
        metadata={"card_id": None, "name": f"n{i}", "type": None,
                  "description": None, "tools": None, "detection": None},
        embedding=embedding if embedding is not None else rng.standard_normal(dim),
    )


# -- cosine ---------------------------------------------------------------------


def test_cosine_identity():
    v = np.array([0.3, -1.2, 4.0])
    assert cosine(v, v) == pytest.approx(1.0, abs=1e-9)


def test_cosine_orthogonal_unit_vectors():
    e1 = np.array([1.0, 0.0, 0.0])
    e2 = np.array([0.0, 1.0, 0.0])
    assert cosine(e1, e2) == pytest.approx(0.0, abs=1e-9)


def test_cosine_hand_arithmetic():
    # (1,2,2)·(2,1,2) = 8, norms 3 and 3 -> 8/9
    assert cosine(np.array([1.0, 2.0, 2.0]), np.array([2.0, 1.0, 2.0])) == pytest.approx(
        8.0 / 9.0, abs=1e-9
    )


def test_cosine_errors():
    with pytest.raises(DimensionMismatch):
        cosine(np.ones(3), np.ones(4))
    with pytest.raises(ZeroVector):
        cosine(np.zeros(3), np.ones(3))


# -- index add/search --------------------------------------------------------------


def test_add_then_search_self_is_top_hit():
    idx = VectorIndex(dim=8)
    s = make_snippet(1, dim=8)
    idx.add(s)
    results = idx.search(s.embedding, k=1)
    assert results[0][0] == s.snippet_id
    assert results[0][1] == pytest.approx(1.0, abs=1e-9)


def test_duplicate_snippet_id_rejected():
    idx = VectorIndex(dim=8)
    idx.add(make_snippet(1, dim=8))
    with pytest.raises(DuplicateSnippetId):
        idx.add(make_snippet(1, dim=8))


def test_dimension_mismatch_on_add_and_search():
    idx = VectorIndex(dim=8)
    with pytest.raises(DimensionMismatch):
        idx.add(make_snippet(1, dim=9))
    idx.add(make_snippet(1, dim=8))
    with pytest.raises(DimensionMismatch):
        idx.search(np.ones(9))


def test_zero_query_vector_rejected():
    idx = VectorIndex(dim=4)
    idx.add(make_snippet(1, dim=4))
    with pytest.raises(ZeroVector):
        idx.search(np.zeros(4))


def test_search_matches_brute_force_for_all_k():
    rng = np.random.default_rng(42)
    snippets = [make_snippet(i, dim=16, rng=rng) for i in range(100)]
    idx = build_index(snippets, dim=16)
    for trial in range(10):
        query = rng.standard_normal(16)
        for k in (1, 3, 10, 50, 100):
            got = idx.search(query, k=k)
            expected = brute_force_rank(snippets, query, k)
            assert [g[0] for g in got] == [e[0] for e in expected]
            for (gid, gscore), (eid, escore) in zip(got, expected):
                assert gscore == pytest.approx(escore, abs=1e-9)


def test_search_with_k_larger_than_index_returns_everything():
    snippets = [make_snippet(i, dim=8) for i in range(3)]
    idx = build_index(snippets, dim=8)
    assert len(idx.search(np.ones(8), k=10)) == 3


def test_default_k_caps_at_ten():
    snippets = [make_snippet(i, dim=8) for i in range(25)]
    idx = build_index(snippets, dim=8)
    assert len(idx.search(np.ones(8))) == 10


def test_bloom_filter_restricts_candidates():
    rng = np.random.default_rng(7)
    snippets = [make_snippet(i, dim=16, rng=rng) for i in range(40)]
    idx = build_index(snippets, dim=16)
    query = rng.standard_normal(16)
    got = idx.search(query, k=40, bloom_filter=BloomTag.PROCEDURAL)
    assert got, "mixed corpus has procedural snippets"
    for sid, _ in got:
        assert idx.get(sid).bloom_tag is BloomTag.PROCEDURAL
    expected = brute_force_rank(snippets, query, 40, bloom=BloomTag.PROCEDURAL)
    assert [g[0] for g in got] == [e[0] for e in expected]


def test_exact_tie_breaks_lexicographically():
    shared = np.array([1.0, 1.0, 0.0, 0.0])
    a = make_snippet(2, dim=4, embedding=shared.copy())
    b = make_snippet(1, dim=4, embedding=shared.copy())
    c = make_snippet(3, dim=4, embedding=shared * 2.5)  # same direction, same cosine
    idx = build_index([a, b, c], dim=4)
    got = idx.search(np.array([2.0, 2.0, 0.0, 0.0]), k=3)
    assert [g[0] for g in got] == ["sn0001", "sn0002", "sn0003"]
    assert got[0][1] == got[1][1] == pytest.approx(got[2][1], abs=1e-12)


# -- save/load ----------------------------------------------------------------------


def test_round_trip_100_snippets_exact(tmp_path):
    rng = np.random.default_rng(5)
    snippets = [make_snippet(i, dim=12, rng=rng) for i in range(100)]
    idx = build_index(snippets, dim=12)
    path = tmp_path / "corpus.idx"
    save_index(idx, path)
    loaded = load_index(path)
    assert len(loaded) == 100
    for s in snippets:
        t = loaded.get(s.snippet_id)
        assert t.doc_id == s.doc_id
        assert t.text == s.text
        assert t.bloom_tag is s.bloom_tag
        assert t.metadata == s.metadata
        assert np.array_equal(t.embedding, s.embedding)  # bit-exact


def test_search_identical_after_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    snippets = [make_snippet(i, dim=16, rng=rng) for i in range(60)]
    idx = build_index(snippets, dim=16)
    path = tmp_path / "corpus.idx"
    idx.save(path)
    loaded = load_index(path)
    for _ in range(20):
        query = rng.standard_normal(16)
        assert idx.search(query, k=10) == loaded.search(query, k=10)


def test_truncated_file_is_corrupt(tmp_path):
    idx = build_index([make_snippet(i, dim=8) for i in range(5)], dim=8)
    path = tmp_path / "x.idx"
    idx.save(path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) - 30])
    with pytest.raises(CorruptIndex):
        load_index(path)


def test_not_an_index_file(tmp_path):
    path = tmp_path / "junk.idx"
    path.write_text('{"something": "else"}\n')
    with pytest.raises(CorruptIndex):
        load_index(path)
    path.write_text("")
    with pytest.raises(CorruptIndex):
        load_index(path)


def test_version_mismatch(tmp_path):
    idx = build_index([make_snippet(1, dim=8)], dim=8)
    path = tmp_path / "x.idx"
    idx.save(path)
    lines = path.read_text().splitlines()
    manifest = json.loads(lines[0])
    manifest["version"] = 99
    path.write_text("\n".join([json.dumps(manifest)] + lines[1:]) + "\n")
    with pytest.raises(VersionMismatch):
        load_index(path)


def test_count_mismatch_is_corrupt(tmp_path):
    idx = build_index([make_snippet(i, dim=8) for i in range(4)], dim=8)
    path = tmp_path / "x.idx"
    idx.save(path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")  # drop a full record
    with pytest.raises(CorruptIndex):
        load_index(path)


# -- mock embeddings ------------------------------------------------------------------


def test_mock_embedding_deterministic_unit_norm():
    backend = MockEmbeddingBackend(dim=1536)
    a = backend.embed("what is lateral movement")
    b = backend.embed("what is lateral movement")
    c = backend.embed("a different text")
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-9)
    assert a.shape == (1536,)
