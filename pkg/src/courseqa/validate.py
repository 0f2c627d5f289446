"""Ontology-backed answer validation.

The verifier prompt asks the completion model for a strict JSON verdict
("Pass"/"Not Pass" plus a confidence in [0,1]); the gate only accepts answers
whose verdict is Pass AND whose confidence clears the threshold. Every
transport or parse failure path must end in rejection, never in an
unvalidated answer reaching a user.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from . import prompts
from .errors import InputError, OntologyError, ValidationUnavailableError, VerdictParseError
from .providers import CompletionParams, ProviderConfig, complete

DEFAULT_THRESHOLD = 0.5
VERIFIER_UNAVAILABLE_REASON = "verifier-unavailable"

_FENCE_RE = re.compile(r"^```[a-zA-Z0-9_-]*\s*\n?(.*?)\n?```$", re.DOTALL)
_PLACEHOLDER_RE = re.compile(r"\{(question|answer|ontology_text)\}")


class VerdictResult(str, Enum):
    PASS = "Pass"
    NOT_PASS = "Not Pass"


@dataclass
class Ontology:
    name: str
    triples: list[tuple[str, str, str]]
    rendered_text: str

    def entities(self) -> set[str]:
        """Distinct heads and tails, case-insensitive."""
        out: set[str] = set()
        for head, _, tail in self.triples:
            out.add(head.lower())
            out.add(tail.lower())
        return out


@dataclass
class ValidationVerdict:
    result: VerdictResult
    confidence: float
    reasoning: str
    accepted: bool
    raw: str

    def __post_init__(self) -> None:
        if not (0.0 <= self.confidence <= 1.0):
            raise InputError(f"confidence {self.confidence} outside [0,1]")

    def summary(self) -> dict:
        return {
            "result": self.result.value,
            "confidence": self.confidence,
            "accepted": self.accepted,
            "reasoning": self.reasoning,
        }


def load_ontology(path: str | Path) -> Ontology:
    """Parse "head | relation | tail" lines; '#' comments and blanks ignored."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise OntologyError(f"cannot read ontology {path}: {exc}") from exc
    triples: list[tuple[str, str, str]] = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = [p.strip() for p in stripped.split("|")]
        if len(parts) != 3 or not all(parts):
            raise OntologyError(f"line {lineno}: expected 'head | relation | tail', got {line!r}")
        triples.append((parts[0], parts[1], parts[2]))
    if not triples:
        raise OntologyError(f"ontology {path} contains no triples")
    rendered = "\n".join(f"{h} | {r} | {t}" for h, r, t in triples)
    return Ontology(name=path.stem, triples=triples, rendered_text=rendered)


def parse_verdict(raw: str) -> tuple[VerdictResult, float, str]:
    """Parse the strict JSON verdict, tolerating a fenced code block or
    surrounding whitespace and nothing else."""
    text = raw.strip()
    fenced = _FENCE_RE.match(text)
    if fenced:
        text = fenced.group(1).strip()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise VerdictParseError(f"not valid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise VerdictParseError("verdict JSON is not an object")

    for key in ("validation_result", "confidence_score", "reasoning"):
        if key not in data:
            raise VerdictParseError(f"missing field {key!r}")

    result_raw = data["validation_result"]
    if not isinstance(result_raw, str):
        raise VerdictParseError("validation_result is not a string")
    normalized = re.sub(r"\s+", "", result_raw).lower()
    if normalized == "pass":
        result = VerdictResult.PASS
    elif normalized == "notpass":
        result = VerdictResult.NOT_PASS
    else:
        raise VerdictParseError(f"unrecognized result {result_raw!r}")

    confidence = data["confidence_score"]
    if isinstance(confidence, bool) or not isinstance(confidence, (int, float)):
        raise VerdictParseError("confidence is not numeric")
    confidence = float(confidence)
    if not (0.0 <= confidence <= 1.0):
        raise VerdictParseError(f"confidence {confidence} out of range [0,1]")

    reasoning = data["reasoning"]
    if not isinstance(reasoning, str):
        raise VerdictParseError("reasoning is not a string")
    return result, confidence, reasoning


def gate(result: VerdictResult, confidence: float, threshold: float) -> bool:
    return result is VerdictResult.PASS and confidence >= threshold


def build_verifier_prompt(q_c: str, answer: str, ontology: Ontology) -> str:
    mapping = {"question": q_c, "answer": answer, "ontology_text": ontology.rendered_text}
    # Single-pass substitution so placeholder-like text inside the answer is
    # never re-expanded.
    return _PLACEHOLDER_RE.sub(lambda m: mapping[m.group(1)], prompts.VERIFIER_PROMPT)


def verify(
    q_c: str,
    answer: str,
    ontology: Ontology,
    cfg: ProviderConfig,
    threshold: float = DEFAULT_THRESHOLD,
) -> ValidationVerdict:
    """Run the verifier model and apply the gate.

    One extra provider call is made if the first response fails to parse; a
    second parse failure raises ValidationUnavailableError so the caller can
    fail closed.
    """
    if not answer:
        raise InputError("answer must be non-empty")
    prompt = build_verifier_prompt(q_c, answer, ontology)
    last_error: VerdictParseError | None = None
    raw = ""
    for _ in range(2):
        raw = complete(prompt, cfg, CompletionParams(temperature=0.0))
        try:
            result, confidence, reasoning = parse_verdict(raw)
        except VerdictParseError as exc:
            last_error = exc
            continue
        return ValidationVerdict(
            result=result,
            confidence=confidence,
            reasoning=reasoning,
            accepted=gate(result, confidence, threshold),
            raw=raw,
        )
    raise ValidationUnavailableError(f"two consecutive unparseable verdicts: {last_error}")


def heuristic_score(answer: str, ontology: Ontology) -> float:
    """Deterministic offline stand-in for the model verifier: the fraction of
    distinct ontology entities found verbatim (case-insensitive) in the
    answer, over min(5, total entities), clamped to [0,1]."""
    entities = ontology.entities()
    if not entities:
        return 0.0
    lowered = answer.lower()
    matches = sum(1 for e in entities if e in lowered)
    return min(1.0, matches / min(5, len(entities)))
