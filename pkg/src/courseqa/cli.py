"""Operator CLI: ingest a corpus, serve the API, one-shot ask, run the eval
harness, and export interaction logs.

Exit codes: 0 ok, 2 config error, 3 runtime error.
"""

from __future__ import annotations

import itertools
import json
import sys
from pathlib import Path

import click

from . import corpus, evalharness, index as index_mod
from .errors import ConfigError, CourseQAError
from .pipeline import Pipeline, PipelineConfig
from .providers import DEFAULT_EMBEDDING_MODEL, ProviderConfig

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_CONFIG if isinstance(exc, (ConfigError, OSError)) else EXIT_RUNTIME)


@click.group()
def main() -> None:
    """Ontology-gated retrieval-augmented QA service."""


@main.command()
@click.option("--manifest", required=True, type=click.Path(), help="Corpus manifest JSON.")
@click.option("--out-index", required=True, type=click.Path(), help="Output index file.")
@click.option("--out-kb", type=click.Path(), help="Output KB file (default: <out-index>.kb.json).")
@click.option("--embed", "embed_kind", type=click.Choice(["mock", "http"]), default="mock")
@click.option("--config", "config_path", type=click.Path(), help="Config supplying the http embedding provider.")
def ingest(manifest: str, out_index: str, out_kb: str | None, embed_kind: str, config_path: str | None) -> None:
    """Chunk the corpus, embed it, and write the KB + index files."""
    try:
        if embed_kind == "http":
            if not config_path:
                raise ConfigError("--embed http requires --config")
            embed_cfg = PipelineConfig.from_file(config_path).embedding
        else:
            embed_cfg = ProviderConfig(kind="mock", model_id=DEFAULT_EMBEDDING_MODEL)
        kb = corpus.ingest(manifest)
        idx = index_mod.build_index(kb, embed_cfg)
        kb_path = out_kb or f"{out_index}.kb.json"
        corpus.save_kb(kb, kb_path)
        index_mod.save(idx, out_index)
    except (CourseQAError, OSError) as exc:
        _fail(exc)
    click.echo(f"ingested {len(kb.chunks)} chunks -> {out_index} (kb: {kb_path})")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(config_path: str, host: str) -> None:
    """Serve the HTTP API; blocks until interrupted."""
    import uvicorn

    from .app import create_app

    try:
        config = PipelineConfig.from_file(config_path)
        pipeline = Pipeline.from_config(config)
    except (CourseQAError, OSError) as exc:
        _fail(exc)
    uvicorn.run(create_app(pipeline), host=host, port=config.port, log_level="warning")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--question", required=True)
@click.option("--session", "session_id", default="cli-session", show_default=True)
def ask(config_path: str, question: str, session_id: str) -> None:
    """One-shot pipeline pass without auth, for smoke testing."""
    try:
        config = PipelineConfig.from_file(config_path)
        pipeline = Pipeline.from_config(config)
        user_id = pipeline.store.ensure_user("cli")
        result = pipeline.answer_question(user_id, session_id, question)
    except (CourseQAError, OSError) as exc:
        _fail(exc)
    click.echo(json.dumps(result.to_dict(), indent=2, ensure_ascii=False))


@main.command(name="eval")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--dataset", required=True, type=click.Path())
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--answers", "answers_path", type=click.Path(), help="Precomputed answers JSONL; otherwise the live pipeline answers.")
@click.option("--judge/--no-judge", default=False, help="Also run model-judged metrics.")
def eval_cmd(config_path: str, dataset: str, report_path: str, answers_path: str | None, judge: bool) -> None:
    """Run the metric suite over a dataset and write report .json/.md files."""
    try:
        config = PipelineConfig.from_file(config_path)
        kwargs: dict = {
            "embed_cfg": config.embedding,
            "report_path": report_path,
            "judge_cfg": config.completion if judge else None,
        }
        if answers_path:
            report = evalharness.run_eval(dataset, answers_path=answers_path, **kwargs)
        else:
            pipeline = Pipeline.from_config(config)
            user_id = pipeline.store.ensure_user("eval")
            counter = itertools.count()

            def answer_fn(rec: evalharness.EvalRecord) -> dict:
                # Fresh session per record; rejected turns score as empty.
                result = pipeline.answer_question(user_id, f"eval-{next(counter)}", rec.question)
                return {
                    "answer": result.answer or "",
                    "retrieved_chunk_ids": [s["chunk_id"] for s in result.sources],
                }

            report = evalharness.run_eval(dataset, answer_fn=answer_fn, **kwargs)
    except (CourseQAError, OSError) as exc:
        _fail(exc)
    click.echo(report.to_markdown())
    click.echo(f"evaluated {sum(report.counts.values())} records, skipped {report.skipped}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
def export(config_path: str, out_path: str) -> None:
    """Dump all interaction logs as newline-delimited JSON."""
    from .session import SessionStore

    try:
        config = PipelineConfig.from_file(config_path)
        if not config.db_path or not Path(config.db_path).exists():
            raise ConfigError(f"db_path does not exist: {config.db_path}")
        store = SessionStore(config.db_path)
        count = store.export_interactions(out_path)
        store.close()
    except (CourseQAError, OSError) as exc:
        _fail(exc)
    click.echo(f"exported {count} records -> {out_path}")


if __name__ == "__main__":
    main()
