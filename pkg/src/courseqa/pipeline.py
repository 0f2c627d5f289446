"""Per-request orchestration of the three-stage pipeline:
interpret -> retrieve -> generate -> validate, then persist.

The stages for one request run strictly in order (the data flow demands it);
the index, knowledge base, and ontology are immutable shared state, so any
number of requests can run concurrently against one Pipeline.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from . import corpus, index as index_mod, intent, generate as generate_mod, validate as validate_mod
from .errors import ConfigError, InputError, ProviderError, ValidationUnavailableError
from .providers import (
    DEFAULT_COMPLETION_MODEL,
    DEFAULT_EMBEDDING_MODEL,
    ProviderConfig,
    embed,
)
from .session import InteractionRecord, SessionStore

MAX_QUESTION_CHARS = 4096
REJECTION_MESSAGE = "This answer could not be validated against the course ontology."

STAGES = ("intent", "retrieve", "generate", "validate")


@dataclass
class PipelineConfig:
    kb_path: str = ""
    index_path: str = ""
    ontology_path: str = ""
    db_path: str = ""
    port: int = 8000
    k_history: int = intent.DEFAULT_HISTORY_WINDOW
    top_k: int = 3
    validation_threshold: float = validate_mod.DEFAULT_THRESHOLD
    grounding_floor: float = generate_mod.GROUNDING_FLOOR
    completion: ProviderConfig = field(default_factory=lambda: ProviderConfig(model_id=DEFAULT_COMPLETION_MODEL))
    embedding: ProviderConfig = field(default_factory=lambda: ProviderConfig(model_id=DEFAULT_EMBEDDING_MODEL))

    def __post_init__(self) -> None:
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        if not (0.0 <= self.validation_threshold <= 1.0):
            raise ConfigError("validation_threshold must be in [0,1]")
        if self.k_history < 1:
            raise ConfigError("k_history must be >= 1")

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc

        def provider(key: str, default_model: str) -> ProviderConfig:
            raw = dict(data.get(key, {}))
            raw.setdefault("model_id", default_model)
            try:
                return ProviderConfig(**raw)
            except TypeError as exc:
                raise ConfigError(f"bad {key} provider config: {exc}") from exc

        base = path.parent

        def resolve(key: str) -> str:
            value = data.get(key, "")
            return str(base / value) if value else ""

        return cls(
            kb_path=resolve("kb_path"),
            index_path=resolve("index_path"),
            ontology_path=resolve("ontology_path"),
            db_path=resolve("db_path"),
            port=int(data.get("port", 8000)),
            k_history=int(data.get("k_history", intent.DEFAULT_HISTORY_WINDOW)),
            top_k=int(data.get("top_k", 3)),
            validation_threshold=float(data.get("validation_threshold", validate_mod.DEFAULT_THRESHOLD)),
            grounding_floor=float(data.get("grounding_floor", generate_mod.GROUNDING_FLOOR)),
            completion=provider("completion_provider", DEFAULT_COMPLETION_MODEL),
            embedding=provider("embedding_provider", DEFAULT_EMBEDDING_MODEL),
        )


@dataclass
class PipelineResult:
    record_id: str
    session_id: str
    rewritten_question: str
    verdict: dict
    sources: list[dict]
    timings_ms: dict[str, float]
    grounded: bool
    answer: str | None = None
    rejection_message: str | None = None

    def to_dict(self) -> dict:
        out: dict = {
            "record_id": self.record_id,
            "session_id": self.session_id,
            "rewritten_question": self.rewritten_question,
        }
        if self.answer is not None:
            out["answer"] = self.answer
        else:
            out["rejection_message"] = self.rejection_message
        out["verdict"] = self.verdict
        out["sources"] = self.sources
        out["grounded"] = self.grounded
        out["timings_ms"] = self.timings_ms
        return out


class Pipeline:
    def __init__(
        self,
        config: PipelineConfig,
        kb: corpus.KnowledgeBase,
        idx: index_mod.VectorIndex,
        ontology: validate_mod.Ontology,
        store: SessionStore,
    ):
        self.config = config
        self.kb = kb
        self.index = idx
        self.ontology = ontology
        self.store = store
        self._chunks = {c.chunk_id: c for c in kb.chunks}

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "Pipeline":
        for label, p in (
            ("kb_path", config.kb_path),
            ("index_path", config.index_path),
            ("ontology_path", config.ontology_path),
        ):
            if not p:
                raise ConfigError(f"{label} is required")
            if not Path(p).exists():
                raise ConfigError(f"{label} does not exist: {p}")
        if not config.db_path:
            raise ConfigError("db_path is required")
        kb = corpus.load_kb(config.kb_path)
        idx = index_mod.load(config.index_path, kb_digest=kb.manifest_digest)
        ontology = validate_mod.load_ontology(config.ontology_path)
        store = SessionStore(config.db_path)
        return cls(config, kb, idx, ontology, store)

    def history_for(self, user_id: str, session_id: str) -> intent.ConversationHistory:
        """Conversation memory holds what the user actually saw: the accepted
        answer, or the rejection message for gated turns."""
        hist = intent.ConversationHistory(k=self.config.k_history)
        last_ts = 0.0
        for rec in self.store.session_records(user_id, session_id):
            ts = max(_parse_ts(rec.created_at), last_ts)
            last_ts = ts
            hist.append("student", rec.question, ts)
            shown = rec.answer if rec.verdict.get("accepted") else REJECTION_MESSAGE
            hist.append("assistant", shown, ts)
        return hist

    def answer_question(self, user_id: str, session_id: str, q: str) -> PipelineResult:
        if not q or not q.strip():
            raise InputError("question must be non-empty")
        if len(q) > MAX_QUESTION_CHARS:
            raise InputError(f"question exceeds {MAX_QUESTION_CHARS} characters")

        timings: dict[str, float] = {}

        t0 = time.perf_counter()
        history = self.history_for(user_id, session_id)
        cq = intent.interpret(q, history, self.config.completion)
        timings["intent"] = _ms_since(t0)

        t0 = time.perf_counter()
        qvec = embed([cq.rewritten], self.config.embedding)[0]
        hits = index_mod.search(self.index, qvec, k=self.config.top_k)
        ctx = generate_mod.RetrievedContext(
            hits=hits, texts=[self._chunks[h.chunk_id].text for h in hits]
        )
        timings["retrieve"] = _ms_since(t0)

        # Generation failures propagate: there is no answer to log or gate.
        t0 = time.perf_counter()
        draft = generate_mod.generate(
            ctx, cq.rewritten, self.config.completion, grounding_floor=self.config.grounding_floor
        )
        timings["generate"] = _ms_since(t0)

        t0 = time.perf_counter()
        try:
            verdict = validate_mod.verify(
                cq.rewritten,
                draft.text,
                self.ontology,
                self.config.completion,
                threshold=self.config.validation_threshold,
            )
        except (ValidationUnavailableError, ProviderError):
            verdict = validate_mod.ValidationVerdict(
                result=validate_mod.VerdictResult.NOT_PASS,
                confidence=0.0,
                reasoning=validate_mod.VERIFIER_UNAVAILABLE_REASON,
                accepted=False,
                raw="",
            )
        timings["validate"] = _ms_since(t0)

        sources = [
            {
                "chunk_id": h.chunk_id,
                "score": h.score,
                "doc_id": self._chunks[h.chunk_id].doc_id,
            }
            for h in hits
        ]
        record = InteractionRecord(
            user_id=user_id,
            session_id=session_id,
            turn_index=self.store.next_turn_index(user_id, session_id),
            question=q,
            rewritten=cq.rewritten,
            chunks=[{"chunk_id": h.chunk_id, "score": h.score} for h in hits],
            answer=draft.text,
            verdict=verdict.summary(),
        )
        record_id = self.store.append_interaction(record)

        result = PipelineResult(
            record_id=record_id,
            session_id=session_id,
            rewritten_question=cq.rewritten,
            verdict=verdict.summary(),
            sources=sources,
            timings_ms=timings,
            grounded=draft.grounded,
        )
        if verdict.accepted:
            result.answer = draft.text
        else:
            result.rejection_message = REJECTION_MESSAGE
        return result


def _ms_since(t0: float) -> float:
    return round((time.perf_counter() - t0) * 1000.0, 3)


def _parse_ts(created_at: str | None) -> float:
    if not created_at:
        return 0.0
    try:
        return datetime.fromisoformat(created_at).timestamp()
    except ValueError:
        return 0.0
