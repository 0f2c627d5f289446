"""Exact top-k cosine index over chunk embeddings.

Vectors are held as float32 rows sorted by ascending chunk_id; a search is a
full scan (scores computed in float64), sorted by score descending with ties
broken by ascending chunk_id. Exactness keeps the retrieval contract testable
against a brute-force oracle; an ANN backend could slot in behind the same
surface later.

On-disk format (all integers little-endian):
    magic "VIDX" | u32 version=1 | u32 dim | u64 count
    per entry: u16 id byte-length | UTF-8 id | dim * f32
    trailing u32 CRC32 of all preceding bytes
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import KnowledgeBase
from .errors import CourseQAError, IndexFormatError, InputError
from .providers import EmbeddingVector, ProviderConfig, embed

MAGIC = b"VIDX"
VERSION = 1

# Embedding a large KB goes through the provider in slices of this size.
EMBED_BATCH = 64


@dataclass
class SearchHit:
    chunk_id: str
    score: float
    rank: int


class VectorIndex:
    """Immutable after construction; safe for concurrent searches."""

    def __init__(self, dim: int, chunk_ids: list[str], matrix: np.ndarray, kb_digest: str):
        if matrix.shape != (len(chunk_ids), dim):
            raise InputError(f"matrix shape {matrix.shape} does not match {len(chunk_ids)}x{dim}")
        if len(set(chunk_ids)) != len(chunk_ids):
            raise InputError("duplicate chunk_ids in index")
        if sorted(chunk_ids) != chunk_ids:
            order = sorted(range(len(chunk_ids)), key=lambda i: chunk_ids[i])
            chunk_ids = [chunk_ids[i] for i in order]
            matrix = matrix[order]
        self.dim = dim
        self.chunk_ids = chunk_ids
        self.matrix = np.ascontiguousarray(matrix, dtype=np.float32)
        self.kb_digest = kb_digest

    def __len__(self) -> int:
        return len(self.chunk_ids)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VectorIndex):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.kb_digest == other.kb_digest
            and self.chunk_ids == other.chunk_ids
            and np.array_equal(self.matrix, other.matrix)
        )


def build_index(kb: KnowledgeBase, embed_cfg: ProviderConfig) -> VectorIndex:
    """Embed every chunk and assemble the index; deterministic under mock."""
    if not kb.chunks:
        raise InputError("cannot build an index over an empty knowledge base")
    ordered = sorted(kb.chunks, key=lambda c: c.chunk_id)
    vectors: list[EmbeddingVector] = []
    for lo in range(0, len(ordered), EMBED_BATCH):
        batch = ordered[lo : lo + EMBED_BATCH]
        try:
            vectors.extend(embed([c.text for c in batch], embed_cfg))
        except CourseQAError as exc:
            exc.args = (f"embedding failed in batch starting at {batch[0].chunk_id}: {exc}",)
            raise
    dim = vectors[0].dim
    matrix = np.array([v.values for v in vectors], dtype=np.float32)
    return VectorIndex(dim=dim, chunk_ids=[c.chunk_id for c in ordered], matrix=matrix, kb_digest=kb.manifest_digest)


def search(idx: VectorIndex, query_vec: EmbeddingVector, k: int = 3) -> list[SearchHit]:
    """Exact top-k by cosine (dot product of normalized vectors)."""
    if query_vec.dim != idx.dim:
        raise InputError(f"query dim {query_vec.dim} != index dim {idx.dim}")
    if k < 1:
        raise InputError("k must be >= 1")
    scores = idx.matrix.astype(np.float64) @ np.asarray(query_vec.values, dtype=np.float64)
    # Entries are stored in ascending chunk_id order, so a stable sort on
    # descending score realizes the tie rule for free.
    order = np.argsort(-scores, kind="stable")[: min(k, len(idx))]
    return [
        SearchHit(chunk_id=idx.chunk_ids[i], score=float(scores[i]), rank=r + 1)
        for r, i in enumerate(order)
    ]


def save(idx: VectorIndex, path: str | Path) -> None:
    parts = [MAGIC, struct.pack("<IIQ", VERSION, idx.dim, len(idx))]
    for i, cid in enumerate(idx.chunk_ids):
        raw = cid.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise InputError(f"chunk_id too long to serialize: {cid[:40]}...")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(idx.matrix[i].astype("<f4").tobytes())
    body = b"".join(parts)
    Path(path).write_bytes(body + struct.pack("<I", zlib.crc32(body)))


def _need(buf: bytes, offset: int, count: int, what: str) -> None:
    if offset + count > len(buf):
        raise IndexFormatError(f"truncated file: expected {what}", offset=offset)


def load(path: str | Path, kb_digest: str = "") -> VectorIndex:
    """Parse a VIDX file. The file format carries no digest, so callers that
    track the source KB pass its digest to re-bind the loaded index."""
    buf = Path(path).read_bytes()
    _need(buf, 0, 4, "magic")
    if buf[:4] != MAGIC:
        raise IndexFormatError(f"bad magic {buf[:4]!r}", offset=0)
    _need(buf, 4, 16, "header")
    version, dim, count = struct.unpack_from("<IIQ", buf, 4)
    if version != VERSION:
        raise IndexFormatError(f"unsupported version {version}", offset=4)
    if dim == 0:
        raise IndexFormatError("dim must be positive", offset=8)
    vec_bytes = dim * 4
    # cheap bound before allocating anything: every entry needs at least its
    # id-length field plus the vector
    if 20 + count * (2 + vec_bytes) + 4 > len(buf):
        raise IndexFormatError(f"count {count} exceeds file size", offset=8)
    offset = 20
    chunk_ids: list[str] = []
    rows = np.empty((count, dim), dtype=np.float32)
    for i in range(count):
        _need(buf, offset, 2, "id length")
        (id_len,) = struct.unpack_from("<H", buf, offset)
        offset += 2
        _need(buf, offset, id_len, "id bytes")
        try:
            chunk_ids.append(buf[offset : offset + id_len].decode("utf-8"))
        except UnicodeDecodeError:
            raise IndexFormatError("chunk_id is not valid UTF-8", offset=offset) from None
        offset += id_len
        _need(buf, offset, vec_bytes, "vector")
        rows[i] = np.frombuffer(buf, dtype="<f4", count=dim, offset=offset)
        offset += vec_bytes
    _need(buf, offset, 4, "crc32")
    (stored_crc,) = struct.unpack_from("<I", buf, offset)
    if stored_crc != zlib.crc32(buf[:offset]):
        raise IndexFormatError("crc32 mismatch", offset=offset)
    if offset + 4 != len(buf):
        raise IndexFormatError("trailing bytes after crc32", offset=offset + 4)
    return VectorIndex(dim=dim, chunk_ids=chunk_ids, matrix=rows, kb_digest=kb_digest)
