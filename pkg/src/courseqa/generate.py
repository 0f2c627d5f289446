"""Document-grounded answer generation."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from . import prompts
from .errors import GenerationError, InputError, ProviderError
from .index import SearchHit
from .providers import CompletionParams, ProviderConfig, complete

GROUNDING_FLOOR = 0.15
EMPTY_CONTEXT_SENTINEL = "NO DOCUMENT RETRIEVED"


@dataclass
class RetrievedContext:
    hits: list[SearchHit] = field(default_factory=list)
    texts: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.hits) != len(self.texts):
            raise InputError(f"{len(self.hits)} hits but {len(self.texts)} texts")

    @property
    def rendered(self) -> str:
        """Chunk texts in rank order, blank-line separated."""
        return "\n\n".join(self.texts)

    def top_score(self) -> float:
        return max((h.score for h in self.hits), default=float("-inf"))


@dataclass
class DraftAnswer:
    text: str
    prompt_digest: str
    grounded: bool


def assemble_prompt(ctx: RetrievedContext, q_c: str) -> str:
    if not q_c:
        raise InputError("question must be non-empty")
    document = ctx.rendered if ctx.texts else EMPTY_CONTEXT_SENTINEL
    return prompts.ANSWER_PROMPT.replace("{document}", document).replace("{question}", q_c)


def generate(
    ctx: RetrievedContext,
    q_c: str,
    cfg: ProviderConfig,
    grounding_floor: float = GROUNDING_FLOOR,
) -> DraftAnswer:
    """Produce the draft answer for a query over its retrieved context."""
    prompt = assemble_prompt(ctx, q_c)
    try:
        text = complete(prompt, cfg, CompletionParams(temperature=0.0)).strip()
    except ProviderError as exc:
        raise GenerationError(f"completion provider failed: {exc}") from exc
    if not text:
        raise GenerationError("provider returned an empty completion")
    return DraftAnswer(
        text=text,
        prompt_digest=hashlib.sha256(prompt.encode("utf-8")).hexdigest(),
        grounded=ctx.top_score() >= grounding_floor,
    )
