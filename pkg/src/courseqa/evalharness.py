"""Answer-quality and retrieval metrics over a JSONL evaluation set.

QA-side metrics: ROUGE-1/2 (multiset n-gram F1), METEOR-lite (exact-match
unigram alignment with the 10PR/(R+9P) mean and the cubic fragmentation
penalty; no stem/synonym modules), and a greedy token-embedding similarity
score. Retrieval-side: context precision/recall against gold chunk ids.
Faithfulness and answer-relevancy judges need a completion model and are
opt-in; they never run in deterministic test setups.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .corpus import tokenize
from .errors import InputError
from .providers import CompletionParams, ProviderConfig, complete, embed

logger = logging.getLogger(__name__)

CATEGORIES = ("ZS", "FS", "OD")

QA_METRICS = ("embed_score", "meteor_lite", "rouge_1", "rouge_2")
RAG_METRICS = ("context_precision", "context_recall")
JUDGE_METRICS = ("faithfulness", "answer_relevancy")

METRIC_LABELS = {
    "embed_score": "EmbedScore",
    "meteor_lite": "METEOR-lite",
    "rouge_1": "ROUGE-1",
    "rouge_2": "ROUGE-2",
    "context_precision": "Context Precision",
    "context_recall": "Context Recall",
    "faithfulness": "Faithfulness",
    "answer_relevancy": "Answer Relevancy",
}

_CATEGORY_ALIASES = {
    "zs": "ZS",
    "zero-shot": "ZS",
    "zero_shot": "ZS",
    "zeroshot": "ZS",
    "fs": "FS",
    "few-shot": "FS",
    "few_shot": "FS",
    "fewshot": "FS",
    "od": "OD",
    "ontology-driven": "OD",
    "ontology_driven": "OD",
    "ontologydriven": "OD",
}

# Exact-search cap for the minimum-fragmentation alignment; inputs large
# enough to hit it fall back to a greedy leftmost alignment.
_METEOR_NODE_CAP = 200_000


@dataclass
class EvalRecord:
    question: str
    reference_answer: str
    category: str
    gold_chunk_ids: list[str] | None = None

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise InputError(f"unknown category {self.category!r}")
        if not self.reference_answer:
            raise InputError("reference_answer must be non-empty")


@dataclass
class MetricReport:
    per_category: dict[str, dict[str, float | None]]
    avg: dict[str, float | None]
    counts: dict[str, int]
    skipped: int
    metrics: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "per_category": self.per_category,
            "avg": self.avg,
            "counts": self.counts,
            "skipped": self.skipped,
        }

    def to_markdown(self) -> str:
        def fmt(v: float | None) -> str:
            return "-" if v is None else f"{v:.3f}"

        lines = [
            "| Metric | ZS | FS | OD | AVG |",
            "| --- | --- | --- | --- | --- |",
            "| **QA-based Metrics** | | | | |",
        ]
        rag_rows = []
        for m in self.metrics:
            cells = [fmt(self.per_category[m].get(c)) for c in CATEGORIES] + [fmt(self.avg.get(m))]
            row = f"| {METRIC_LABELS.get(m, m)} | " + " | ".join(cells) + " |"
            if m in QA_METRICS:
                lines.append(row)
            else:
                rag_rows.append(row)
        if rag_rows:
            lines.append("| **RAG-based Metrics** | | | | |")
            lines.extend(rag_rows)
        return "\n".join(lines) + "\n"


# -- QA-based metrics -------------------------------------------------------


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: str, reference: str, n: int) -> dict[str, float]:
    """Multiset n-gram overlap precision/recall/F1."""
    if n not in (1, 2):
        raise InputError("n must be 1 or 2")
    cand = _ngrams(tokenize(candidate), n)
    ref = _ngrams(tokenize(reference), n)
    if not cand or not ref:
        return {"precision": 0.0, "recall": 0.0, "f1": 0.0}
    overlap = sum((cand & ref).values())
    precision = overlap / sum(cand.values())
    recall = overlap / sum(ref.values())
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def _greedy_chunks(cand: list[str], ref_positions: dict[str, list[int]], ref_len: int) -> int:
    """Chunk count of a greedy leftmost maximum matching."""
    used = [False] * ref_len
    chunks, prev_c, prev_r = 0, -2, -2
    for i, w in enumerate(cand):
        positions = [j for j in ref_positions.get(w, ()) if not used[j]]
        if not positions:
            continue
        j = next((p for p in positions if p == prev_r + 1), positions[0])
        used[j] = True
        if not (prev_c == i - 1 and prev_r == j - 1):
            chunks += 1
        prev_c, prev_r = i, j
    return chunks


def _alignment_chunks(cand: list[str], ref: list[str]) -> tuple[int, int]:
    """Max exact unigram matches m, and the minimum chunk count over all
    maximum alignments (exact search with pruning; greedy for inputs past the
    node cap or longer than 400 tokens)."""
    cand_counts = Counter(cand)
    ref_counts = Counter(ref)
    m = sum(min(c, ref_counts[w]) for w, c in cand_counts.items())
    if m == 0:
        return 0, 0

    ref_positions: dict[str, list[int]] = defaultdict(list)
    for j, w in enumerate(ref):
        ref_positions[w].append(j)

    if len(cand) > 400:
        return m, _greedy_chunks(cand, ref_positions, len(ref))

    skip_budget = {w: c - min(c, ref_counts[w]) for w, c in cand_counts.items()}
    best = m + 1  # any alignment has at most m chunks
    used = [False] * len(ref)
    nodes = 0
    exhausted = False

    def dfs(i: int, prev_c: int, prev_r: int, chunks: int, matched: int, budget: dict) -> None:
        nonlocal best, nodes, exhausted
        if exhausted or chunks >= best:
            return
        if matched == m:
            best = chunks
            return
        nodes += 1
        if nodes > _METEOR_NODE_CAP:
            exhausted = True
            return
        if i >= len(cand):
            return
        w = cand[i]
        candidates = ref_positions.get(w, ())
        # Try the chunk-continuing position first so pruning bites early.
        ordered = sorted((j for j in candidates if not used[j]), key=lambda j: (j != prev_r + 1, j))
        for j in ordered:
            used[j] = True
            inc = 0 if (prev_c == i - 1 and prev_r == j - 1) else 1
            dfs(i + 1, i, j, chunks + inc, matched + 1, budget)
            used[j] = False
        if not candidates or budget[w] > 0:
            if candidates:
                budget[w] -= 1
            dfs(i + 1, prev_c, prev_r, chunks, matched, budget)
            if candidates:
                budget[w] += 1

    dfs(0, -2, -2, 0, 0, dict(skip_budget))
    if best <= m:
        # Exact minimum unless the node cap was hit, in which case it is the
        # best alignment seen (still deterministic).
        return m, best
    return m, _greedy_chunks(cand, ref_positions, len(ref))


def meteor_lite(candidate: str, reference: str) -> float:
    """Exact-match unigram score with fragmentation penalty:
    Fmean = 10PR/(R+9P), penalty = 0.5*(chunks/m)^3, score = Fmean*(1-penalty)."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    m, chunks = _alignment_chunks(cand, ref)
    if m == 0:
        return 0.0
    precision = m / len(cand)
    recall = m / len(ref)
    fmean = 10 * precision * recall / (recall + 9 * precision)
    penalty = 0.5 * (chunks / m) ** 3
    return fmean * (1 - penalty)


def embed_sim_score(candidate: str, reference: str, embed_cfg: ProviderConfig) -> dict[str, float]:
    """Greedy token-embedding cosine matching.

    recall: mean over reference tokens of the best cosine against any
    candidate token; precision symmetric; f1 harmonic. Per-token best
    similarities are clamped to [0,1] (hash-based mock embeddings can produce
    negative cosines that sentence encoders would not).
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        raise InputError("embed_sim_score requires non-empty candidate and reference")
    distinct = sorted(set(cand) | set(ref))
    vectors = dict(zip(distinct, embed(distinct, embed_cfg)))

    def best_mean(side_a: list[str], side_b: list[str]) -> float:
        total = 0.0
        for tok in side_a:
            best = max(vectors[tok].dot(vectors[other]) for other in side_b)
            total += min(1.0, max(0.0, best))
        return total / len(side_a)

    precision = best_mean(cand, ref)
    recall = best_mean(ref, cand)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


# -- RAG-based metrics ------------------------------------------------------


def context_precision_recall(retrieved_ids: list[str], gold_ids: list[str]) -> dict[str, float | None]:
    """Set-overlap precision/recall of retrieved chunk ids against gold ids.

    Vacuously perfect when both sides are empty; with empty gold but
    non-empty retrieval, precision is computed and recall is not applicable
    (None). Retrieval must already be deduplicated.
    """
    if len(set(retrieved_ids)) != len(retrieved_ids):
        raise InputError("retrieved_ids must be deduplicated")
    gold = set(gold_ids)
    retrieved = set(retrieved_ids)
    if not gold and not retrieved:
        return {"precision": 1.0, "recall": 1.0}
    if not gold:
        return {"precision": len(retrieved & gold) / len(retrieved), "recall": None}
    if not retrieved:
        return {"precision": 0.0, "recall": 0.0}
    inter = len(retrieved & gold)
    return {"precision": inter / len(retrieved), "recall": inter / len(gold)}


# -- optional judge metrics -------------------------------------------------

_FAITHFULNESS_PROMPT = """Rate from 0 to 1 how fully the ANSWER is supported by the CONTEXT.
Respond with only the number.

CONTEXT:
{context}

ANSWER:
{answer}
"""

_RELEVANCY_PROMPT = """Rate from 0 to 1 how directly the ANSWER addresses the QUESTION.
Respond with only the number.

QUESTION:
{question}

ANSWER:
{answer}
"""


def judge_score(prompt: str, cfg: ProviderConfig) -> float | None:
    """One judge call; returns None when the reply is not a number in [0,1]."""
    try:
        raw = complete(prompt, cfg, CompletionParams(temperature=0.0, max_tokens=8)).strip()
        value = float(raw.split()[0])
    except Exception:
        return None
    return value if 0.0 <= value <= 1.0 else None


# -- dataset + report -------------------------------------------------------


def _parse_record(data: dict) -> EvalRecord:
    question = data.get("question") or data.get("Question")
    reference = (
        data.get("reference_answer")
        or data.get("reference")
        or data.get("answer")
        or data.get("Answer")
    )
    raw_cat = data.get("category") or data.get("type") or data.get("Category") or ""
    category = _CATEGORY_ALIASES.get(str(raw_cat).strip().lower())
    if not question or not reference or category is None:
        raise InputError(f"record missing question/reference/category: {sorted(data)}")
    gold = data.get("gold_chunk_ids") or data.get("gold_chunks")
    return EvalRecord(
        question=str(question),
        reference_answer=str(reference),
        category=category,
        gold_chunk_ids=[str(g) for g in gold] if gold else None,
    )


def load_dataset(path: str | Path) -> tuple[list[EvalRecord], int]:
    """Read a JSONL dataset; malformed lines are skipped with a warning."""
    records: list[EvalRecord] = []
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(_parse_record(json.loads(line)))
            except (json.JSONDecodeError, InputError) as exc:
                skipped += 1
                logger.warning("skipping dataset line %d: %s", lineno, exc)
    return records, skipped


def load_answers(path: str | Path, expected: int) -> list[dict]:
    """Precomputed answers, one JSON object per dataset line, in order."""
    rows: list[dict] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    if len(rows) != expected:
        raise InputError(f"answers file has {len(rows)} rows for {expected} records")
    return rows


def _aggregate(values: dict[str, dict[str, list[float]]], metrics: list[str]) -> MetricReport:
    per_category: dict[str, dict[str, float | None]] = {}
    avg: dict[str, float | None] = {}
    for metric in metrics:
        per_category[metric] = {}
        weighted, total = 0.0, 0
        for cat in CATEGORIES:
            vals = values[metric][cat]
            if vals:
                mean = sum(vals) / len(vals)
                per_category[metric][cat] = mean
                weighted += mean * len(vals)
                total += len(vals)
            else:
                per_category[metric][cat] = None
        avg[metric] = weighted / total if total else None
    return MetricReport(per_category=per_category, avg=avg, counts={}, skipped=0, metrics=metrics)


def run_eval(
    dataset_path: str | Path,
    *,
    embed_cfg: ProviderConfig,
    answer_fn: Callable[[EvalRecord], dict] | None = None,
    answers_path: str | Path | None = None,
    report_path: str | Path | None = None,
    judge_cfg: ProviderConfig | None = None,
) -> MetricReport:
    """Score a dataset and emit the per-category report.

    Answers come either from answers_path (JSONL rows {"answer", optional
    "retrieved_chunk_ids"} aligned with the dataset) or from answer_fn, which
    maps a record to the same row shape (e.g. by running the live pipeline).
    """
    if (answer_fn is None) == (answers_path is None):
        raise InputError("provide exactly one of answer_fn or answers_path")
    records, skipped = load_dataset(dataset_path)
    if answers_path is not None:
        rows = load_answers(answers_path, len(records))
    else:
        rows = [answer_fn(rec) for rec in records]

    metrics = list(QA_METRICS + RAG_METRICS)
    if judge_cfg is not None:
        metrics += list(JUDGE_METRICS)
    values: dict[str, dict[str, list[float]]] = {
        m: {c: [] for c in CATEGORIES} for m in metrics
    }
    counts = {c: 0 for c in CATEGORIES}

    for rec, row in zip(records, rows):
        answer = str(row.get("answer", ""))
        counts[rec.category] += 1
        cat = rec.category
        values["rouge_1"][cat].append(rouge_n(answer, rec.reference_answer, 1)["f1"])
        values["rouge_2"][cat].append(rouge_n(answer, rec.reference_answer, 2)["f1"])
        values["meteor_lite"][cat].append(meteor_lite(answer, rec.reference_answer))
        if answer.strip():
            values["embed_score"][cat].append(
                embed_sim_score(answer, rec.reference_answer, embed_cfg)["f1"]
            )
        retrieved = row.get("retrieved_chunk_ids")
        if rec.gold_chunk_ids is not None and retrieved is not None:
            cpr = context_precision_recall([str(r) for r in retrieved], rec.gold_chunk_ids)
            values["context_precision"][cat].append(cpr["precision"])
            if cpr["recall"] is not None:
                values["context_recall"][cat].append(cpr["recall"])
        if judge_cfg is not None:
            context = str(row.get("context", ""))
            faith = judge_score(
                _FAITHFULNESS_PROMPT.replace("{context}", context).replace("{answer}", answer),
                judge_cfg,
            )
            if faith is not None:
                values["faithfulness"][cat].append(faith)
            rel = judge_score(
                _RELEVANCY_PROMPT.replace("{question}", rec.question).replace("{answer}", answer),
                judge_cfg,
            )
            if rel is not None:
                values["answer_relevancy"][cat].append(rel)

    report = _aggregate(values, metrics)
    report.counts = counts
    report.skipped = skipped

    if report_path is not None:
        base = Path(report_path)
        if base.suffix in (".json", ".md"):
            base = base.with_suffix("")
        base.parent.mkdir(parents=True, exist_ok=True)
        base.with_suffix(".json").write_text(
            json.dumps(report.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )
        base.with_suffix(".md").write_text(report.to_markdown(), encoding="utf-8")
    return report
