"""Command line surface: serve the API, index a corpus, simulate, report.

Every subcommand exits nonzero on validation failures, printing the error
to stderr; outputs that feed analysis (report, simulate) are byte-stable
for a fixed seed and input set.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from urllib.parse import urlparse

import click

from .agents import AgentKind, AgentProfile, load_concepts_dir, run_agent
from .config import config_path_from_env, load_config
from .errors import ScaffoldError
from .outlines import load_outline
from .reporting import build_report
from .scaffold import StrategyKind
from .search import Blacklist, LocalCorpusAdapter

DEFAULT_CONFIG = "service.yaml"

config_option = click.option(
    "--config",
    "config_path",
    default=DEFAULT_CONFIG,
    show_default=True,
    help="Service config file (SCAFFOLD_CONFIG overrides).",
)


def _load(config_path: str):
    return load_config(config_path_from_env(config_path))


@click.group()
def main():
    """Scaffolded search-session platform."""


@main.command()
@config_option
def serve(config_path):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    try:
        cfg = _load(config_path)
        app = create_app(cfg)
    except ScaffoldError as exc:
        raise click.ClickException(str(exc)) from None
    uvicorn.run(app, host=cfg.host, port=cfg.port)


@main.command("validate-outline")
@click.argument("path")
def validate_outline(path):
    """Check one outline file; print its subtopic counts."""
    p = Path(path)
    if not p.exists() and p.suffix not in (".yaml", ".yml"):
        for suffix in (".yaml", ".yml"):
            candidate = p.with_suffix(suffix)
            if candidate.exists():
                p = candidate
                break
    try:
        outline = load_outline(p)
    except (ScaffoldError, OSError) as exc:
        raise click.ClickException(str(exc)) from None
    l2 = sum(len(sub.children) for sub in outline.l1)
    click.echo(f"L1={len(outline.l1)} L2={l2}")


@main.command("index-corpus")
@click.argument("corpus_dir")
@click.option("--out", "out_path", default=None, help="Write an index manifest (JSON).")
def index_corpus(corpus_dir, out_path):
    """Build the in-memory index once and report corpus statistics."""
    try:
        adapter = LocalCorpusAdapter.from_dir(corpus_dir)
    except (ScaffoldError, OSError) as exc:
        raise click.ClickException(str(exc)) from None
    index = adapter.index
    if not index.doc_ids:
        raise click.ClickException(f"no documents found under {corpus_dir}")
    hosts = sorted({urlparse(doc_id).netloc for doc_id in index.doc_ids})
    manifest = {
        "documents": len(index.doc_ids),
        "hosts": hosts,
        "total_tokens": int(sum(index.doc_len.values())),
        "mean_doc_tokens": round(index.avgdl, 3),
    }
    if out_path:
        Path(out_path).write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    click.echo(f"indexed {manifest['documents']} documents across {len(hosts)} hosts")


@main.command()
@click.option("--profile", required=True, help="Agent profile (freeform, outline-follower, gauge-chaser).")
@click.option("--topic", required=True, help="Topic id; must have an outline and concepts.")
@click.option("--strategy", required=True, help="Scaffolding strategy for the session.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, help="Directory receiving the event log and meta file.")
@config_option
def simulate(profile, topic, strategy, seed, out_dir, config_path):
    """Drive one simulated session end to end against the local corpus."""
    try:
        cfg = _load(config_path)
        if cfg.corpus_dir is None:
            raise ScaffoldError("simulate needs a local corpus backend")
        kind = AgentKind.parse(profile)
        strat = StrategyKind.parse(strategy)
        outline = load_outline(cfg.outlines_dir / f"{topic}.yaml")
        concepts = load_concepts_dir(cfg.concepts_dir).get(topic)
        if not concepts:
            raise ScaffoldError(f"no concepts file for topic {topic!r}")
        backend = LocalCorpusAdapter.from_dir(cfg.corpus_dir)
        blacklist = Blacklist.from_file(cfg.blacklist_path)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        run = run_agent(
            AgentProfile(kind=kind, seed=seed),
            outline,
            strat,
            backend,
            blacklist,
            concepts,
            log_dir=out,
            session_config=cfg.session,
            scoring_config=cfg.scoring,
        )
    except (ScaffoldError, OSError) as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(f"{run.session_id}: {run.state.phase.value}")


@main.command()
@click.option("--logs", "logs_dir", required=True, help="Directory of .log/.meta.yaml pairs.")
@click.option("--outlines", "outlines_dir", required=True, help="Outline directory.")
@click.option("--out", "out_dir", required=True, help="Directory receiving sessions.jsonl and summary.csv.")
def report(logs_dir, outlines_dir, out_dir):
    """Aggregate recorded sessions into per-session and cohort exports."""
    try:
        paths = build_report(Path(logs_dir), Path(outlines_dir), Path(out_dir))
    except (ScaffoldError, OSError) as exc:
        raise click.ClickException(str(exc)) from None
    for p in paths:
        click.echo(f"wrote {p}")


if __name__ == "__main__":
    main()
