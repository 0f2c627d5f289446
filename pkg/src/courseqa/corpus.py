"""Course corpus loading, tokenization, and 512-token chunking.

The tokenizer is a fixed, deterministic stand-in (whitespace split, then
leading/trailing punctuation peeled off as separate tokens) so chunk
boundaries are reproducible across machines and independent of any model
backend. Token offsets into the source text are recorded, which makes every
chunk's text an exact slice of its document.
"""

from __future__ import annotations

import hashlib
import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, IngestError, ManifestError

MAX_CHUNK_TOKENS = 512
CHUNK_OVERLAP = 64

DOCUMENT_KINDS = ("qa_pair", "slide", "assignment", "quiz", "project", "other")


@dataclass
class SourceDocument:
    doc_id: str
    course_id: str
    kind: str
    text: str
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in DOCUMENT_KINDS:
            raise ManifestError(f"document {self.doc_id!r} has unknown kind {self.kind!r}")
        if not self.text:
            raise ManifestError(f"document {self.doc_id!r} has empty text")


@dataclass
class Chunk:
    chunk_id: str
    doc_id: str
    seq: int
    token_start: int
    token_end: int
    text: str


@dataclass
class KnowledgeBase:
    kb_id: str
    chunks: list[Chunk]
    manifest_digest: str


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize_with_offsets(text: str) -> list[tuple[str, int, int]]:
    """Tokenize, returning (token, start, end) character offsets.

    Guarantees text[start:end] == token for every entry.
    """
    out: list[tuple[str, int, int]] = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        # Peel leading punctuation characters.
        k = i
        while k < j and _is_punct(text[k]):
            out.append((text[k], k, k + 1))
            k += 1
        # Find where trailing punctuation starts.
        t = j
        while t > k and _is_punct(text[t - 1]):
            t -= 1
        if t > k:
            out.append((text[k:t], k, t))
        for p in range(t, j):
            out.append((text[p], p, p + 1))
        i = j
    return out


def tokenize(text: str) -> list[str]:
    """Deterministic tokens: whitespace split plus peeled edge punctuation."""
    return [tok for tok, _, _ in tokenize_with_offsets(text)]


def chunk_document(
    doc: SourceDocument,
    max_tokens: int = MAX_CHUNK_TOKENS,
    overlap: int = CHUNK_OVERLAP,
) -> list[Chunk]:
    """Split a document into overlapping token windows.

    Windows start at multiples of (max_tokens - overlap); the last window is
    clamped to the token count, so documents of <= max_tokens tokens yield
    exactly one chunk.
    """
    if not (0 <= overlap < max_tokens):
        raise ConfigError(f"overlap {overlap} must satisfy 0 <= overlap < max_tokens {max_tokens}")
    toks = tokenize_with_offsets(doc.text)
    n = len(toks)
    stride = max_tokens - overlap
    chunks: list[Chunk] = []
    start = 0
    while True:
        end = min(start + max_tokens, n)
        if end > start:
            span_text = doc.text[toks[start][1] : toks[end - 1][2]]
        else:
            span_text = ""
        seq = len(chunks)
        chunks.append(
            Chunk(
                chunk_id=f"{doc.doc_id}#{seq}",
                doc_id=doc.doc_id,
                seq=seq,
                token_start=start,
                token_end=end,
                text=span_text,
            )
        )
        if end >= n:
            break
        start += stride
    return chunks


def expected_chunk_count(n_tokens: int, max_tokens: int = MAX_CHUNK_TOKENS, overlap: int = CHUNK_OVERLAP) -> int:
    """Closed form for the number of windows over an n-token stream."""
    if n_tokens <= max_tokens:
        return 1
    stride = max_tokens - overlap
    return -(-(n_tokens - max_tokens) // stride) + 1


def _whole_chunk(doc: SourceDocument) -> list[Chunk]:
    toks = tokenize_with_offsets(doc.text)
    text = doc.text[toks[0][1] : toks[-1][2]] if toks else ""
    return [
        Chunk(
            chunk_id=f"{doc.doc_id}#0",
            doc_id=doc.doc_id,
            seq=0,
            token_start=0,
            token_end=len(toks),
            text=text,
        )
    ]


def _load_manifest(manifest_path: Path) -> tuple[str, list[dict], bytes]:
    try:
        raw = manifest_path.read_bytes()
    except OSError as exc:
        raise IngestError(f"cannot read manifest {manifest_path}: {exc}") from exc
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ManifestError(f"manifest {manifest_path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "documents" not in data:
        raise ManifestError(f"manifest {manifest_path} lacks a 'documents' list")
    docs = data["documents"]
    if not isinstance(docs, list):
        raise ManifestError("'documents' must be a list")
    return str(data.get("kb_id", manifest_path.stem)), docs, raw


def ingest(
    manifest_path: str | Path,
    max_tokens: int = MAX_CHUNK_TOKENS,
    overlap: int = CHUNK_OVERLAP,
) -> KnowledgeBase:
    """Build a KnowledgeBase from a JSON manifest of text documents.

    Manifest: {"kb_id": ..., "documents": [{"doc_id","course_id","kind","path",
    "metadata"}...]} with paths relative to the manifest's directory. QA-pair
    documents are kept whole as a single chunk up to max_tokens; longer ones
    fall back to windowed chunking like any other text.
    """
    manifest_path = Path(manifest_path)
    kb_id, entries, raw = _load_manifest(manifest_path)
    digest = hashlib.sha256(raw).hexdigest()

    seen: set[str] = set()
    chunks: list[Chunk] = []
    for entry in entries:
        doc_id = entry.get("doc_id", "")
        if not doc_id:
            raise ManifestError("manifest entry without doc_id")
        if doc_id in seen:
            raise ManifestError(f"duplicate doc_id {doc_id!r}")
        seen.add(doc_id)
        path = manifest_path.parent / entry.get("path", "")
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise IngestError(f"cannot read document file {path}: {exc}") from exc
        doc = SourceDocument(
            doc_id=doc_id,
            course_id=entry.get("course_id", ""),
            kind=entry.get("kind", "other"),
            text=text,
            metadata=dict(entry.get("metadata", {})),
        )
        if doc.kind == "qa_pair" and len(tokenize(doc.text)) <= max_tokens:
            # Curated QA pairs are kept whole; only oversized ones get windowed.
            chunks.extend(_whole_chunk(doc))
        else:
            chunks.extend(chunk_document(doc, max_tokens=max_tokens, overlap=overlap))
    return KnowledgeBase(kb_id=kb_id, chunks=chunks, manifest_digest=digest)


def save_kb(kb: KnowledgeBase, path: str | Path) -> None:
    payload = {
        "kb_id": kb.kb_id,
        "manifest_digest": kb.manifest_digest,
        "chunks": [
            {
                "chunk_id": c.chunk_id,
                "doc_id": c.doc_id,
                "seq": c.seq,
                "token_start": c.token_start,
                "token_end": c.token_end,
                "text": c.text,
            }
            for c in kb.chunks
        ],
    }
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=1), encoding="utf-8")


def load_kb(path: str | Path) -> KnowledgeBase:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IngestError(f"cannot read knowledge base {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"knowledge base {path} is not valid JSON: {exc}") from exc
    chunks = [Chunk(**c) for c in data["chunks"]]
    return KnowledgeBase(kb_id=data["kb_id"], chunks=chunks, manifest_digest=data["manifest_digest"])
