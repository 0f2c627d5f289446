"""Embedding and completion backends behind one uniform call surface.

Two kinds are supported:

* ``mock`` — fully deterministic, for tests and offline runs. Embeddings are
  a 64-dim FNV-1a bag-of-tokens scheme; completions come from a script table
  keyed by marker substrings, with an optional echo fallback.
* ``http`` — a JSON POST protocol against any OpenAI-style backend. The
  response field locations are configurable as dot-paths so different vendors
  can be used without code changes.

API keys are only ever read from the environment at call time; they are never
stored on the config object, so configs are safe to log or serialize.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field

import httpx

from .errors import ConfigError, InputError, ProviderError

MOCK_DIM = 64
RETRY_BACKOFF_SECONDS = 0.25

DEFAULT_COMPLETION_MODEL = "Llama 3.3 70B"
DEFAULT_EMBEDDING_MODEL = "BAAI-Bge-Large-1.5"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass
class ProviderConfig:
    kind: str = "mock"
    base_url: str = ""
    api_key_env: str = ""
    model_id: str = ""
    timeout_ms: int = 30_000
    max_retries: int = 2
    # Dot-paths into the JSON response; the first numeric segment of the
    # embedding path is replaced by the item index for batched inputs.
    embedding_path: str = "data.0.embedding"
    completion_path: str = "choices.0.text"
    # Mock-only knobs: marker substring -> canned response, echo fallback.
    script: dict[str, str] = field(default_factory=dict)
    echo: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("mock", "http"):
            raise ConfigError(f"unknown provider kind {self.kind!r}")
        if self.timeout_ms <= 0:
            raise ConfigError("timeout_ms must be positive")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be non-negative")
        if self.kind == "http" and (not self.base_url or not self.model_id):
            raise ConfigError("http provider requires base_url and model_id")

    def api_key(self) -> str:
        return os.environ.get(self.api_key_env, "") if self.api_key_env else ""


@dataclass
class CompletionParams:
    temperature: float = 0.0
    max_tokens: int = 512


@dataclass
class EmbeddingVector:
    dim: int
    values: list[float]
    normalized: bool = True

    def __post_init__(self) -> None:
        if self.dim <= 0 or len(self.values) != self.dim:
            raise InputError(f"vector has {len(self.values)} values, dim={self.dim}")
        if not all(math.isfinite(v) for v in self.values):
            raise InputError("vector contains non-finite values")
        if self.normalized:
            norm = math.sqrt(sum(v * v for v in self.values))
            if abs(norm - 1.0) > 1e-6:
                raise InputError(f"vector flagged normalized but |v| = {norm}")

    def dot(self, other: "EmbeddingVector") -> float:
        if other.dim != self.dim:
            raise InputError(f"dim mismatch: {self.dim} vs {other.dim}")
        return sum(a * b for a, b in zip(self.values, other.values))


def _mock_embed_one(text: str) -> EmbeddingVector:
    # Bag of whitespace tokens: each token contributes +/-1 at its hash slot
    # (sign from bit 6), so token order never matters.
    raw = [0.0] * MOCK_DIM
    for tok in text.split():
        h = fnv1a64(tok.encode("utf-8"))
        raw[h % MOCK_DIM] += -1.0 if (h >> 6) & 1 else 1.0
    norm = math.sqrt(sum(v * v for v in raw))
    if norm == 0.0:
        # All token contributions cancelled; fall back to a unit vector keyed
        # on the sorted token multiset so the result stays deterministic AND
        # order-insensitive.
        key = " ".join(sorted(text.split()))
        raw = [0.0] * MOCK_DIM
        raw[fnv1a64(key.encode("utf-8")) % MOCK_DIM] = 1.0
        norm = 1.0
    return EmbeddingVector(dim=MOCK_DIM, values=[v / norm for v in raw])


def _extract_path(payload: object, path: str, item_index: int | None = None):
    """Walk a dot-path like "data.0.embedding" through dicts and lists.

    When item_index is given, the first numeric segment is replaced by it so
    one path string addresses every item of a batched response.
    """
    node = payload
    substituted = False
    for seg in path.split("."):
        if seg.isdigit():
            if item_index is not None and not substituted:
                seg = str(item_index)
                substituted = True
            if not isinstance(node, list) or int(seg) >= len(node):
                raise ProviderError(f"response path {path!r} missing at segment {seg!r}")
            node = node[int(seg)]
        else:
            if not isinstance(node, dict) or seg not in node:
                raise ProviderError(f"response path {path!r} missing at segment {seg!r}")
            node = node[seg]
    return node


def _post_json(cfg: ProviderConfig, payload: dict) -> dict:
    """POST with bearer auth and fixed-backoff retries; raises ProviderError."""
    headers = {}
    key = cfg.api_key()
    if key:
        headers["Authorization"] = f"Bearer {key}"
    attempts = cfg.max_retries + 1
    last_exc: Exception | None = None
    for attempt in range(attempts):
        if attempt:
            time.sleep(RETRY_BACKOFF_SECONDS)
        try:
            resp = httpx.post(
                cfg.base_url,
                json=payload,
                headers=headers,
                timeout=cfg.timeout_ms / 1000.0,
            )
            resp.raise_for_status()
            return resp.json()
        except (httpx.HTTPError, ValueError) as exc:
            last_exc = exc
    raise ProviderError(
        f"provider request failed after {attempts} attempts: {last_exc}",
        attempts=attempts,
    )


def embed(texts: list[str], cfg: ProviderConfig) -> list[EmbeddingVector]:
    """Embed texts, preserving order; all outputs share one dim, L2-normalized."""
    if not texts:
        raise InputError("embed() requires at least one text")
    for i, t in enumerate(texts):
        if not t.strip():
            raise InputError(f"embed() input {i} is empty")

    if cfg.kind == "mock":
        return [_mock_embed_one(t) for t in texts]

    data = _post_json(cfg, {"model": cfg.model_id, "input": texts})
    out: list[EmbeddingVector] = []
    dim: int | None = None
    for i in range(len(texts)):
        values = _extract_path(data, cfg.embedding_path, item_index=i)
        if not isinstance(values, list) or not values:
            raise ProviderError(f"embedding {i} is not a non-empty list")
        floats = [float(v) for v in values]
        if dim is None:
            dim = len(floats)
        elif len(floats) != dim:
            raise ProviderError(f"embedding {i} has dim {len(floats)}, expected {dim}")
        norm = math.sqrt(sum(v * v for v in floats))
        if norm == 0.0:
            raise ProviderError(f"embedding {i} is the zero vector")
        out.append(EmbeddingVector(dim=dim, values=[v / norm for v in floats]))
    return out


def complete(prompt: str, cfg: ProviderConfig, params: CompletionParams | None = None) -> str:
    """Run one completion. Returns the model text with trailing whitespace stripped."""
    if not prompt:
        raise InputError("complete() requires a non-empty prompt")
    params = params or CompletionParams()

    if cfg.kind == "mock":
        for marker, response in cfg.script.items():
            if marker in prompt:
                return response.rstrip()
        if cfg.echo:
            lines = [ln for ln in prompt.rstrip().splitlines() if ln.strip()]
            return lines[-1].rstrip() if lines else ""
        raise ProviderError("mock completion: no scripted marker matched and echo is off")

    data = _post_json(
        cfg,
        {
            "model": cfg.model_id,
            "prompt": prompt,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        },
    )
    text = _extract_path(data, cfg.completion_path)
    if not isinstance(text, str):
        raise ProviderError("completion response field is not a string")
    return text.rstrip()
