import math
import random
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import write_corpus
from courseqa.corpus import ingest
from courseqa.errors import IndexFormatError, InputError
from courseqa.index import VectorIndex, build_index, load, save, search
from courseqa.providers import MOCK_DIM, EmbeddingVector, ProviderConfig, embed


def brute_force(idx: VectorIndex, query: EmbeddingVector, k: int):
    """Independent oracle: full score list via plain python dots, sorted by
    (-score, chunk_id)."""
    scored = []
    for i, cid in enumerate(idx.chunk_ids):
        row = [float(x) for x in idx.matrix[i]]
        score = sum(a * b for a, b in zip(row, query.values))
        scored.append((cid, score))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[: min(k, len(scored))]


def two_d_index(entries: dict[str, list[float]]) -> VectorIndex:
    ids = sorted(entries)
    return VectorIndex(
        dim=2, chunk_ids=ids, matrix=np.array([entries[i] for i in ids], dtype=np.float32),
        kb_digest="t",
    )


@pytest.fixture
def small_kb(tmp_path, mock_embed_cfg):
    manifest = write_corpus(
        tmp_path,
        [("d1", "slide", "alpha beta"), ("d2", "quiz", "gamma delta"), ("d3", "other", "epsilon")],
    )
    return ingest(manifest)


class TestBuild:
    def test_three_entries_dim64(self, small_kb, mock_embed_cfg):
        idx = build_index(small_kb, mock_embed_cfg)
        assert len(idx) == 3
        assert idx.dim == MOCK_DIM
        assert idx.chunk_ids == ["d1#0", "d2#0", "d3#0"]

    def test_empty_kb_rejected(self, small_kb, mock_embed_cfg):
        small_kb.chunks.clear()
        with pytest.raises(InputError):
            build_index(small_kb, mock_embed_cfg)

    def test_rebuild_bit_identical(self, small_kb, mock_embed_cfg, tmp_path):
        save(build_index(small_kb, mock_embed_cfg), tmp_path / "a.vidx")
        save(build_index(small_kb, mock_embed_cfg), tmp_path / "b.vidx")
        assert (tmp_path / "a.vidx").read_bytes() == (tmp_path / "b.vidx").read_bytes()


class TestSearch:
    def test_hand_computed_two_dim(self):
        s = math.sqrt(0.5)
        idx = two_d_index({"A": [1.0, 0.0], "B": [0.0, 1.0], "C": [s, s]})
        hits = search(idx, EmbeddingVector(dim=2, values=[1.0, 0.0]), k=2)
        assert [h.chunk_id for h in hits] == ["A", "C"]
        assert [h.rank for h in hits] == [1, 2]
        assert hits[0].score == pytest.approx(1.0, abs=1e-6)
        assert hits[1].score == pytest.approx(0.7071, abs=1e-4)

    def test_identity_query_ranks_first(self, small_kb, mock_embed_cfg):
        idx = build_index(small_kb, mock_embed_cfg)
        query = EmbeddingVector(dim=idx.dim, values=[float(x) for x in idx.matrix[1]], normalized=False)
        hits = search(idx, query, k=1)
        assert hits[0].chunk_id == "d2#0"
        assert hits[0].score == pytest.approx(1.0, abs=1e-6)

    def test_tie_breaks_by_ascending_id(self):
        idx = two_d_index({"zz": [1.0, 0.0], "aa": [1.0, 0.0]})
        hits = search(idx, EmbeddingVector(dim=2, values=[1.0, 0.0]), k=1)
        assert hits[0].chunk_id == "aa"

    def test_dim_mismatch(self, small_kb, mock_embed_cfg):
        idx = build_index(small_kb, mock_embed_cfg)
        with pytest.raises(InputError):
            search(idx, EmbeddingVector(dim=2, values=[1.0, 0.0]), k=1)

    def test_k_capped_at_entry_count(self, small_kb, mock_embed_cfg):
        idx = build_index(small_kb, mock_embed_cfg)
        (query,) = embed(["alpha"], mock_embed_cfg)
        assert len(search(idx, query, k=10)) == 3

    @given(seed=st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=30, deadline=None)
    def test_oracle_equivalence(self, seed):
        rng = random.Random(seed)
        cfg = ProviderConfig(kind="mock")
        n = rng.randint(1, 20)
        texts = [" ".join(rng.choice("red green blue cyan puce".split()) for _ in range(3)) for _ in range(n)]
        vectors = embed(texts, cfg)
        ids = sorted(f"c{i:03d}#{rng.randint(0,1)}" for i in range(n))
        idx = VectorIndex(
            dim=MOCK_DIM, chunk_ids=ids,
            matrix=np.array([v.values for v in vectors], dtype=np.float32), kb_digest="",
        )
        (query,) = embed([" ".join(rng.choice("red mauve blue".split()) for _ in range(2))], cfg)
        k = rng.randint(1, n + 2)
        hits = search(idx, query, k=k)
        expected = brute_force(idx, query, k)
        assert [(h.chunk_id, h.rank) for h in hits] == [(cid, r + 1) for r, (cid, _) in enumerate(expected)]
        for h, (_, score) in zip(hits, expected):
            assert h.score == pytest.approx(score, abs=1e-12)
        # monotone scores within bounds
        for a, b in zip(hits, hits[1:]):
            assert a.score >= b.score
        assert all(-1 - 1e-6 <= h.score <= 1 + 1e-6 for h in hits)


class TestSerialization:
    def build(self, tmp_path, n=50):
        rng = random.Random(7)
        cfg = ProviderConfig(kind="mock")
        texts = [" ".join(f"w{rng.randint(0, 200)}" for _ in range(4)) for _ in range(n)]
        vecs = embed(texts, cfg)
        ids = sorted(f"doc{i:04d}#0" for i in range(n))
        return VectorIndex(
            dim=MOCK_DIM, chunk_ids=ids,
            matrix=np.array([v.values for v in vecs], dtype=np.float32), kb_digest="d1",
        )

    def test_round_trip_preserves_everything(self, tmp_path):
        idx = self.build(tmp_path)
        path = tmp_path / "i.vidx"
        save(idx, path)
        loaded = load(path, kb_digest="d1")
        assert loaded == idx
        save(loaded, tmp_path / "again.vidx")
        assert (tmp_path / "again.vidx").read_bytes() == path.read_bytes()

    def test_round_trip_search_identical(self, tmp_path, mock_embed_cfg):
        idx = self.build(tmp_path)
        path = tmp_path / "i.vidx"
        save(idx, path)
        loaded = load(path)
        for q in ("w1 w2", "w50", "w199 w3 w77"):
            (query,) = embed([q], mock_embed_cfg)
            assert search(idx, query, k=5) == search(loaded, query, k=5)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.vidx"
        path.write_bytes(b"NOPE" + b"\x00" * 20)
        with pytest.raises(IndexFormatError) as excinfo:
            load(path)
        assert excinfo.value.offset == 0

    def test_bad_version(self, tmp_path):
        idx = self.build(tmp_path, n=2)
        path = tmp_path / "i.vidx"
        save(idx, path)
        raw = bytearray(path.read_bytes())
        struct.pack_into("<I", raw, 4, 99)
        path.write_bytes(bytes(raw))
        with pytest.raises(IndexFormatError, match="version"):
            load(path)

    def test_truncation(self, tmp_path):
        idx = self.build(tmp_path, n=3)
        path = tmp_path / "i.vidx"
        save(idx, path)
        full = path.read_bytes()
        for cut in (3, 10, 21, len(full) - 5):
            path.write_bytes(full[:cut])
            with pytest.raises(IndexFormatError):
                load(path)

    def test_crc_mismatch(self, tmp_path):
        idx = self.build(tmp_path, n=3)
        path = tmp_path / "i.vidx"
        save(idx, path)
        raw = bytearray(path.read_bytes())
        raw[40] ^= 0xFF  # inside the first entry's float data
        path.write_bytes(bytes(raw))
        with pytest.raises(IndexFormatError, match="crc32"):
            load(path)

    def test_trailing_garbage(self, tmp_path):
        idx = self.build(tmp_path, n=2)
        path = tmp_path / "i.vidx"
        save(idx, path)
        path.write_bytes(path.read_bytes() + b"junk")
        with pytest.raises(IndexFormatError):
            load(path)
