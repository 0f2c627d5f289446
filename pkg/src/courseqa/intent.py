"""Multi-turn query interpretation: decide when a turn needs rewriting and
rewrite it into a self-contained query using recent history.

The classifier is rule-based and cheap: R1 anaphora, R2 very short query,
R3 no content overlap with the history window. Every verdict carries the tag
of the rule that fired so sessions can be audited.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import prompts
from .corpus import tokenize
from .errors import InputError, ProviderError
from .providers import CompletionParams, ProviderConfig, complete

DEFAULT_HISTORY_WINDOW = 5
MAX_REWRITE_TOKENS = 128

ANAPHORS = frozenset(
    "it this that these those they them one ones above previous former latter".split()
)

# Fixed 50-word list; content tokens are non-stopwords of length >= 3.
STOPWORDS = frozenset(
    """a an the and or but if of to in on at by for with about into from up down
    is are was were be been being am do does did have has had what which who
    how why when where not no so than then too very can will""".split()
)

ROLES = ("student", "assistant")


@dataclass
class Turn:
    role: str
    text: str
    timestamp: float

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise InputError(f"unknown turn role {self.role!r}")


@dataclass
class ConversationHistory:
    turns: list[Turn] = field(default_factory=list)
    k: int = DEFAULT_HISTORY_WINDOW

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InputError("history window k must be positive")
        for prev, cur in zip(self.turns, self.turns[1:]):
            if cur.timestamp < prev.timestamp:
                raise InputError("history turns must be time-ordered")

    def append(self, role: str, text: str, timestamp: float | None = None) -> None:
        ts = time.time() if timestamp is None else timestamp
        if self.turns and ts < self.turns[-1].timestamp:
            raise InputError("history turns must be time-ordered")
        self.turns.append(Turn(role=role, text=text, timestamp=ts))

    def window(self) -> list[Turn]:
        """At most the k most recent turns, oldest first."""
        return self.turns[-self.k :]


@dataclass
class ConversationQuery:
    original: str
    rewritten: str
    was_rewritten: bool
    rationale: str

    def __post_init__(self) -> None:
        if not self.rewritten:
            raise InputError("rewritten query must be non-empty")
        if not self.was_rewritten and self.rewritten != self.original:
            raise InputError("unrewritten query must equal the original")


def needs_rewrite(q: str, history: ConversationHistory) -> tuple[bool, str]:
    """Pure rule check; returns (verdict, tag of the rule that fired)."""
    if not q:
        raise InputError("question must be non-empty")
    window = history.window()
    if not window:
        return False, "empty-history"
    q_tokens = tokenize(q)
    lowered = [t.lower() for t in q_tokens]
    if any(t in ANAPHORS for t in lowered):
        return True, "R1"
    if len(q_tokens) < 6:
        return True, "R2"
    content = {t for t in lowered if len(t) >= 3 and t not in STOPWORDS}
    window_tokens = {t.lower() for t in tokenize(" ".join(t.text for t in window))}
    if not content & window_tokens:
        return True, "R3"
    return False, "-"


def render_memory(history: ConversationHistory) -> str:
    return "\n".join(f"{t.role.upper()}: {t.text}" for t in history.window())


def build_rewrite_prompt(q: str, history: ConversationHistory) -> str:
    return prompts.REWRITE_PROMPT.replace("{memory}", render_memory(history)).replace(
        "{current_question}", q
    )


def rewrite(
    q: str,
    history: ConversationHistory,
    cfg: ProviderConfig,
    rule_tag: str = "-",
) -> ConversationQuery:
    """Rewrite q via the completion provider; falls back to the original on
    empty/oversized completions or provider failure (a bad rewrite must never
    block answering)."""
    prompt = build_rewrite_prompt(q, history)
    try:
        text = complete(prompt, cfg, CompletionParams(temperature=0.0, max_tokens=256)).strip()
    except ProviderError:
        return ConversationQuery(original=q, rewritten=q, was_rewritten=False, rationale="provider-error")
    if not text:
        return ConversationQuery(original=q, rewritten=q, was_rewritten=False, rationale="fallback-empty")
    if len(tokenize(text)) > MAX_REWRITE_TOKENS:
        return ConversationQuery(original=q, rewritten=q, was_rewritten=False, rationale="fallback-long")
    return ConversationQuery(original=q, rewritten=text, was_rewritten=True, rationale=rule_tag)


def interpret(q: str, history: ConversationHistory, cfg: ProviderConfig) -> ConversationQuery:
    """Full intent step: classify, then rewrite only when a rule fires."""
    fired, tag = needs_rewrite(q, history)
    if not fired:
        return ConversationQuery(original=q, rewritten=q, was_rewritten=False, rationale=tag)
    return rewrite(q, history, cfg, rule_tag=tag)
