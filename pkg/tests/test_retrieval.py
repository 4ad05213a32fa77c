import math
import random
import string

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbqa.corpus import Chunk
from gbqa.retrieval import (
    EmbedderMismatch,
    EmptyInput,
    SearchHit,
    TrigramEmbedder,
    VectorIndex,
    assemble_context,
    build_index,
    load_index,
    score_all,
    search,
)


def make_chunks(texts, kind="textbook"):
    return [
        Chunk(f"doc#{i:04d}", "doc", kind, t, i * 100) for i, t in enumerate(texts)
    ]


def random_texts(n, rng, length=(20, 120)):
    alphabet = string.ascii_lowercase + "     "
    return [
        "".join(rng.choice(alphabet) for _ in range(rng.randint(*length)))
        for _ in range(n)
    ]


def oracle_scores(index, qvec):
    """Independent cosine computation: exact pairwise sums in plain Python."""
    out = []
    nb = math.sqrt(math.fsum(b * b for b in qvec)) or 1.0
    for row in index.matrix:
        dot = math.fsum(a * b for a, b in zip(row, qvec))
        na = math.sqrt(math.fsum(a * a for a in row)) or 1.0
        out.append(dot / (na * nb))
    return out


def oracle_topk(ids, scores, k):
    """Independent selection: repeated scan for the best remaining entry,
    higher score first, chunk_id ascending on exact ties."""
    remaining = list(range(len(ids)))
    out = []
    while remaining and len(out) < k:
        best = remaining[0]
        for i in remaining[1:]:
            if scores[i] > scores[best] or (
                scores[i] == scores[best] and ids[i] < ids[best]
            ):
                best = i
        out.append(ids[best])
        remaining.remove(best)
    return out


def check_against_oracles(index, query, k, emb):
    scores = score_all(index, query, emb)
    pure = oracle_scores(index, emb.embed([query])[0])
    assert max(abs(s - p) for s, p in zip(scores, pure)) <= 1e-9
    hits = search(index, query, k, emb)
    assert [h.chunk_id for h in hits] == oracle_topk(index.chunk_ids, list(scores), k)
    by_id = dict(zip(index.chunk_ids, scores))
    for h in hits:
        assert h.score == float(by_id[h.chunk_id])


# --- embedder ---------------------------------------------------------------


def test_embed_deterministic():
    emb = TrigramEmbedder()
    a = emb.embed(["green roofs reduce runoff", "green roofs reduce runoff"])
    assert np.array_equal(a[0], a[1])
    b = emb.embed(["green roofs reduce runoff"])
    assert np.array_equal(a[0], b[0])


def test_embed_unit_norm():
    emb = TrigramEmbedder()
    vecs = emb.embed(["daylighting", "x", "", "thermal mass and night purge"])
    for v in vecs:
        assert abs(np.linalg.norm(v) - 1.0) < 1e-9


def test_embed_cardinality_and_dim():
    vecs = TrigramEmbedder().embed(["a", "b", "c"])
    assert vecs.shape == (3, 256)


def test_embed_empty_input():
    with pytest.raises(EmptyInput):
        TrigramEmbedder().embed([])


def test_embed_case_folding():
    emb = TrigramEmbedder()
    a, b = emb.embed(["LEED Gold", "leed gold"])
    assert np.array_equal(a, b)


# --- index build / persistence ----------------------------------------------


def test_build_index_counts():
    chunks = make_chunks([f"text number {i}" for i in range(10)])
    index = build_index(chunks, TrigramEmbedder())
    assert len(index) == 10
    assert index.embedder_id == "trigram-crc32-256"


def test_build_empty_rejected():
    with pytest.raises(EmptyInput):
        build_index([], TrigramEmbedder())


def test_persist_roundtrip(tmp_path):
    chunks = make_chunks(["alpha beta", "gamma delta", "epsilon zeta"])
    path = tmp_path / "index.jsonl"
    index = build_index(chunks, TrigramEmbedder(), path=path)
    assert path.exists()
    loaded = load_index(path)
    assert loaded == index
    assert np.all(np.abs(loaded.matrix - index.matrix) <= 1e-9)


def test_load_rejects_foreign_file(tmp_path):
    p = tmp_path / "junk.jsonl"
    p.write_text('{"kind": "something-else", "version": 9}\n')
    with pytest.raises(ValueError):
        load_index(p)


def test_persisted_search_scores_identical(tmp_path):
    rng = random.Random(11)
    chunks = make_chunks(random_texts(40, rng))
    emb = TrigramEmbedder()
    path = tmp_path / "i.jsonl"
    index = build_index(chunks, emb, path=path)
    loaded = load_index(path)
    for q in random_texts(10, rng):
        before = search(index, q, 5, emb)
        after = search(loaded, q, 5, emb)
        assert [h.chunk_id for h in before] == [h.chunk_id for h in after]
        for x, y in zip(before, after):
            assert abs(x.score - y.score) <= 1e-9


# --- search -----------------------------------------------------------------


def test_self_similarity_rank_one():
    texts = ["solar chimney ventilation", "green facade design", "brise soleil shading"]
    index = build_index(make_chunks(texts), TrigramEmbedder())
    hits = search(index, "green facade design", 3, TrigramEmbedder())
    assert hits[0].chunk_id == "doc#0001"
    assert abs(hits[0].score - 1.0) <= 1e-9
    assert [h.rank for h in hits] == [1, 2, 3]


def test_fewer_hits_than_k():
    index = build_index(make_chunks(["one", "two"]), TrigramEmbedder())
    assert len(search(index, "one", 3, TrigramEmbedder())) == 2


def test_k_must_be_positive():
    index = build_index(make_chunks(["one"]), TrigramEmbedder())
    with pytest.raises(ValueError):
        search(index, "one", 0, TrigramEmbedder())


def test_embedder_mismatch():
    index = build_index(make_chunks(["one"]), TrigramEmbedder())

    class Other:
        embedder_id = "other"
        dim = 256

        def embed(self, texts):
            return np.zeros((len(texts), 256))

    with pytest.raises(EmbedderMismatch):
        search(index, "one", 1, Other())


def test_tie_break_on_chunk_id():
    # identical texts embed identically -> exact score tie
    chunks = [
        Chunk("doc#0002", "doc", "manual", "same words here", 0),
        Chunk("doc#0001", "doc", "manual", "same words here", 0),
        Chunk("doc#0003", "doc", "manual", "different thing", 0),
    ]
    index = build_index(chunks, TrigramEmbedder())
    hits = search(index, "same words here", 2, TrigramEmbedder())
    assert [h.chunk_id for h in hits] == ["doc#0001", "doc#0002"]


def test_brute_force_equivalence_small():
    rng = random.Random(3)
    chunks = make_chunks(random_texts(100, rng))
    emb = TrigramEmbedder()
    index = build_index(chunks, emb)
    for q in random_texts(5, rng):
        check_against_oracles(index, q, 5, emb)


def test_scaling_invariance():
    rng = random.Random(5)
    chunks = make_chunks(random_texts(30, rng))
    emb = TrigramEmbedder()
    index = build_index(chunks, emb)
    q = "thermal comfort in atria"
    base = [h.chunk_id for h in search(index, q, 10, emb)]
    scaled = VectorIndex(
        index.embedder_id,
        index.dim,
        list(index.chunk_ids),
        list(index.sources),
        index.matrix * 7.3,
    )
    assert [h.chunk_id for h in search(scaled, q, 10, emb)] == base


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_brute_force_property(seed, k):
    rng = random.Random(seed)
    chunks = make_chunks(random_texts(rng.randint(5, 40), rng))
    emb = TrigramEmbedder()
    index = build_index(chunks, emb)
    q = random_texts(1, rng)[0]
    check_against_oracles(index, q, k, emb)


# --- context assembly -------------------------------------------------------


def ctx_fixture():
    chunks = {
        "a#0000": Chunk("a#0000", "a", "textbook", "first chunk text", 0),
        "b#0000": Chunk("b#0000", "b", "standard", "second chunk text", 0),
        "c#0000": Chunk("c#0000", "c", "manual", "third chunk text", 0),
    }
    hits = [
        SearchHit("a#0000", 0.9, 1),
        SearchHit("b#0000", 0.8, 2),
        SearchHit("c#0000", 0.7, 3),
    ]
    return hits, chunks


def test_assemble_all_fit():
    hits, chunks = ctx_fixture()
    block = assemble_context(hits, chunks, budget=10_000)
    assert block.index("first") < block.index("second") < block.index("third")
    assert "(standard: b)" in block


def test_assemble_budget_cuts_at_boundary():
    hits, chunks = ctx_fixture()
    one = f"[1] (textbook: a)\n{chunks['a#0000'].text}"
    block = assemble_context(hits, chunks, budget=len(one) + 3)
    assert block == one


def test_assemble_empty_hits():
    assert assemble_context([], {}, budget=100) == ""


def test_assemble_bad_budget():
    with pytest.raises(ValueError):
        assemble_context([], {}, budget=0)
