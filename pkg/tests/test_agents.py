from pathlib import Path

import pytest
import yaml

from searchscaffold.agents import (
    AgentKind,
    AgentProfile,
    load_concepts_dir,
    run_agent,
    synthetic_vks,
)
from searchscaffold.errors import ConfigurationError, ValidationError
from searchscaffold.metrics import behavior_report
from searchscaffold.outlines import load_outline, outline_term_set
from searchscaffold.reporting import collect_session_records
from searchscaffold.scaffold import StrategyKind
from searchscaffold.search import Blacklist, CorpusDoc, LocalCorpusAdapter
from searchscaffold.session import Phase, SessionDeps, replay
from searchscaffold.textnorm import term_set, tokenize

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="module")
def outline():
    return load_outline(FIXTURES / "outlines" / "ethics.yaml")


@pytest.fixture(scope="module")
def corpus_docs():
    entries = yaml.safe_load((FIXTURES / "corpus" / "ethics.yaml").read_text())
    return {e["doc_id"]: CorpusDoc(**e) for e in entries}


@pytest.fixture(scope="module")
def backend(corpus_docs):
    return LocalCorpusAdapter(corpus_docs)


@pytest.fixture(scope="module")
def blacklist():
    return Blacklist.from_file(FIXTURES / "blacklist.txt")


@pytest.fixture(scope="module")
def concepts():
    return yaml.safe_load((FIXTURES / "concepts" / "ethics.yaml").read_text())["concepts"]


def profile(kind, seed=1, **kw):
    return AgentProfile(kind, seed=seed, **kw)


def test_profile_validation():
    with pytest.raises(ConfigurationError):
        AgentProfile(AgentKind.FREE_FORM, seed=1, query_rate=0)
    with pytest.raises(ConfigurationError):
        AgentProfile(AgentKind.FREE_FORM, seed=1, dwell_mean=-1)


def test_kind_parsing():
    assert AgentKind.parse("free-form") is AgentKind.FREE_FORM
    assert AgentKind.parse("OutlineFollower") is AgentKind.OUTLINE_FOLLOWER
    assert AgentKind.parse("gauge_chaser") is AgentKind.GAUGE_CHASER
    with pytest.raises(ValidationError):
        AgentKind.parse("browser")


def test_same_seed_byte_identical_logs(outline, backend, blacklist, concepts, tmp_path):
    for sub in ("a", "b"):
        run_agent(
            profile(AgentKind.OUTLINE_FOLLOWER, seed=5),
            outline,
            StrategyKind.CURATED,
            backend,
            blacklist,
            concepts,
            log_dir=tmp_path / sub,
        )
    name = "sim-ethics-curated-outlinefollower-0005.log"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    meta = "sim-ethics-curated-outlinefollower-0005.meta.yaml"
    assert (tmp_path / "a" / meta).read_bytes() == (tmp_path / "b" / meta).read_bytes()


def test_different_seeds_differ(outline, backend, blacklist, concepts):
    a = run_agent(
        profile(AgentKind.FREE_FORM, seed=1),
        outline,
        StrategyKind.CONTROL,
        backend,
        blacklist,
        concepts,
    )
    b = run_agent(
        profile(AgentKind.FREE_FORM, seed=2),
        outline,
        StrategyKind.CONTROL,
        backend,
        blacklist,
        concepts,
    )
    assert [e.payload for e in a.state.event_log] != [e.payload for e in b.state.event_log]


@pytest.mark.parametrize(
    "kind,strategy",
    [
        (AgentKind.FREE_FORM, StrategyKind.CONTROL),
        (AgentKind.FREE_FORM, StrategyKind.AQE),
        (AgentKind.OUTLINE_FOLLOWER, StrategyKind.CURATED),
        (AgentKind.GAUGE_CHASER, StrategyKind.FEEDBACK),
    ],
)
def test_sessions_complete_and_replay(kind, strategy, outline, backend, blacklist, concepts):
    run = run_agent(profile(kind, seed=3), outline, strategy, backend, blacklist, concepts)
    assert run.state.phase is Phase.DONE
    rebuilt = replay(
        run.state.event_log,
        session_id=run.session_id,
        participant_id=run.state.participant_id,
        strategy=strategy,
        outline=outline,
        deps=SessionDeps(outline=outline, body=backend.fetch_body),
    )
    assert rebuilt.progress.sums == run.state.progress.sums
    assert rebuilt.query_history == run.state.query_history


def test_outline_follower_queries_lean_on_outline(outline, backend, blacklist, concepts):
    run = run_agent(
        profile(AgentKind.OUTLINE_FOLLOWER, seed=9),
        outline,
        StrategyKind.CURATED,
        backend,
        blacklist,
        concepts,
    )
    terms = outline_term_set(outline)
    for raw in run.state.query_history:
        toks = tokenize(raw)
        share = sum(1 for t in toks if t in terms) / len(toks)
        assert share >= 0.5


def test_freeform_vocabulary_comes_from_snippets(outline, backend, blacklist, concepts, corpus_docs):
    run = run_agent(
        profile(AgentKind.FREE_FORM, seed=4),
        outline,
        StrategyKind.CONTROL,
        backend,
        blacklist,
        concepts,
    )
    allowed = set(term_set(outline.title))  # the bootstrap task prompt
    for event in run.state.event_log:
        if event.kind == "QueryIssued":
            assert set(tokenize(event.payload["raw"])) <= allowed
        elif event.kind == "SerpShown":
            for doc_id in event.payload["doc_ids"]:
                doc = corpus_docs[doc_id]
                allowed |= term_set(f"{doc.title} {doc.snippet}")


def test_directional_contrasts_single_seed(outline, backend, blacklist, concepts):
    seed = 11
    reports = {}
    for kind, strategy in [
        (AgentKind.FREE_FORM, StrategyKind.CONTROL),
        (AgentKind.OUTLINE_FOLLOWER, StrategyKind.CURATED),
        (AgentKind.GAUGE_CHASER, StrategyKind.FEEDBACK),
    ]:
        run = run_agent(profile(kind, seed=seed), outline, strategy, backend, blacklist, concepts)
        reports[kind] = behavior_report(run.state.event_log, outline)
    assert (
        reports[AgentKind.OUTLINE_FOLLOWER].frac_query_terms_from_outline
        > reports[AgentKind.FREE_FORM].frac_query_terms_from_outline
    )
    assert (
        reports[AgentKind.GAUGE_CHASER].mean_doc_dwell_s
        < reports[AgentKind.OUTLINE_FOLLOWER].mean_doc_dwell_s
    )
    assert (
        reports[AgentKind.GAUGE_CHASER].unique_snippets_viewed
        > reports[AgentKind.OUTLINE_FOLLOWER].unique_snippets_viewed
    )


def test_synthetic_vks_is_well_formed(concepts):
    import random

    pre, post = synthetic_vks(profile(AgentKind.GAUGE_CHASER), concepts, random.Random(0))
    assert [r.concept for r in pre] == list(concepts)
    assert [r.concept for r in post] == list(concepts)
    for r in (*pre, *post):
        assert (r.definition is not None) == (r.level >= 3)
    # no regression: the post level never drops below pre
    for p, q in zip(pre, post):
        assert q.level >= p.level


def test_simulated_output_feeds_reporting(outline, backend, blacklist, concepts, tmp_path):
    run_agent(
        profile(AgentKind.GAUGE_CHASER, seed=2),
        outline,
        StrategyKind.FEEDBACK,
        backend,
        blacklist,
        concepts,
        log_dir=tmp_path,
    )
    records = collect_session_records(tmp_path, {"ethics": outline})
    (record,) = records
    assert record.strategy == "feedback"
    assert record.learning is not None
    assert record.behavior.query_count > 0


def test_load_concepts_dir():
    mapping = load_concepts_dir(FIXTURES / "concepts")
    assert len(mapping["ethics"]) == 10
    assert len(mapping) == 8  # seven study topics plus the attention topic
    with pytest.raises(ValidationError):
        load_concepts_dir(FIXTURES / "outlines" / "nowhere")
