"""Acceptance gate: every release-blocking property, one test each.

Each test here restates its contract from scratch — independent oracles,
hand-built inputs, byte comparisons against committed goldens — so a pass
means the property holds, not that the implementation agrees with itself.
Run with -v for one pass/fail line per criterion.
"""

from __future__ import annotations

import math
import random
import time
from collections import Counter
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from searchscaffold import kernels
from searchscaffold.agents import AgentKind, AgentProfile, run_agent
from searchscaffold.config import ServiceConfig
from searchscaffold.metrics import behavior_report, learning_report, VksRecord
from searchscaffold.outlines import load_outline
from searchscaffold.reporting import build_report
from searchscaffold.scaffold import SliceSchedule, StrategyKind, active_subtopic
from searchscaffold.scoring import (
    DEFAULT_EMBEDDING_DIM,
    DocumentText,
    HashedTfEmbedder,
    ProgressState,
    ScoringConfig,
    fill_fraction,
    record_view,
    similarity,
    subtopic_tokens,
    passes_filters,
)
from searchscaffold.search import Blacklist, LocalCorpusAdapter
from searchscaffold.service import create_app
from searchscaffold.session import SessionConfig

from .conftest import build_outline, build_subtopic

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# Expected L1/L2 shape of every committed topic outline.
TOPIC_SHAPES = {
    "business-cycle": (4, 15),
    "ethics": (6, 12),
    "genetically-modified-organisms": (5, 6),
    "irritable-bowel-syndrome": (10, 15),
    "noise-induced-hearing-loss": (8, 19),
    "radiocarbon-dating-considerations": (4, 8),
    "subprime-mortgage-crisis": (8, 19),
}


def test_outline_fidelity_exact_subtopic_counts():
    start = time.perf_counter()
    seen = {}
    for path in sorted((FIXTURES / "outlines").glob("*.yaml")):
        outline = load_outline(path)
        seen[outline.topic_id] = (
            len(outline.l1),
            sum(len(sub.children) for sub in outline.l1),
        )
    elapsed = time.perf_counter() - start
    assert seen == TOPIC_SHAPES
    assert elapsed < 1.0, f"outline parsing took {elapsed:.2f}s"


def test_aqe_schedule_equal_ordered_slices():
    # the canonical plan: six subtopics across half an hour, five minutes each
    outline = build_outline(
        "t", "Topic", [(f"Part {i}", []) for i in range(6)]
    )
    schedule = SliceSchedule.for_outline(outline, 1800.0)
    assert schedule.slice_length == 300.0
    order = [s.id for s in outline.l1]
    for k, sub_id in enumerate(order):
        assert active_subtopic(schedule, 300.0 * k) == sub_id  # boundary opens slice k
        assert active_subtopic(schedule, 300.0 * k + 299.999) == sub_id
    assert active_subtopic(schedule, 1800.0) == order[-1]  # overrun clamps

    # every feasible L1 count: shares equal, order preserved
    for n in range(1, 13):
        for planned in (1800.0, 1860.0, 937.5):
            outline_n = build_outline("t", "T", [(f"S {i}", []) for i in range(n)])
            sched = SliceSchedule.for_outline(outline_n, planned)
            assert sched.slice_length * n == pytest.approx(planned, abs=1e-12)
            ids = [s.id for s in outline_n.l1]
            midpoints = [(k + 0.5) * sched.slice_length for k in range(n)]
            assert [active_subtopic(sched, m) for m in midpoints] == ids


def tf_cosine(tokens_a, tokens_b) -> float:
    """Independent oracle: exact term-frequency cosine over raw tokens."""
    ca, cb = Counter(tokens_a), Counter(tokens_b)
    dot = sum(ca[t] * cb[t] for t in ca.keys() & cb.keys())
    na = math.sqrt(sum(v * v for v in ca.values()))
    nb = math.sqrt(sum(v * v for v in cb.values()))
    return 0.0 if na == 0 or nb == 0 else dot / (na * nb)


def collision_free_vocab(n, rng, dim=DEFAULT_EMBEDDING_DIM):
    vocab, used = [], set()
    while len(vocab) < n:
        tok = "w" + "".join(rng.choices("abcdefghijklmnopqrstuvwxyz", k=7))
        bucket = kernels.token_bucket(tok, dim)
        if bucket not in used:
            used.add(bucket)
            vocab.append(tok)
    return vocab


def test_similarity_gate_and_tf_cosine_oracle():
    rng = random.Random(20_26)
    cfg = ScoringConfig()
    emb = HashedTfEmbedder()
    vocab = collision_free_vocab(120, rng)

    passed = failed = 0
    for trial in range(1000):
        ref = rng.sample(vocab, rng.randint(5, 15))
        sub = build_subtopic("s1", 1, " ".join(rng.sample(vocab, 2)), " ".join(ref))
        length = rng.randint(20, 200)
        pool = ref + rng.sample(vocab, 40)
        doc = DocumentText.from_tokens(
            f"https://corpus.test/{trial}", [rng.choice(pool) for _ in range(length)]
        )
        score = similarity(doc, sub, cfg, emb)
        if score > 0.0:
            passed += 1
            assert passes_filters(doc, sub, cfg)  # gate implied by any positive score
            oracle = tf_cosine(list(doc.tokens), subtopic_tokens(sub))
            assert abs(score - min(1.0, max(0.0, oracle))) <= 1e-9
        else:
            failed += 1
            expected = 0.0 if not passes_filters(doc, sub, cfg) else tf_cosine(
                list(doc.tokens), subtopic_tokens(sub)
            )
            assert abs(score - expected) <= 1e-9
    assert passed >= 100 and failed >= 100  # both branches genuinely exercised

    # boundaries read as strict inequalities: equality scores zero
    ref = vocab[:10]
    sub = build_subtopic("s1", 1, "boundary case", " ".join(ref))
    at_token_floor = DocumentText.from_tokens("https://c.test/a", ref * 5)
    assert len(at_token_floor.tokens) == 50
    assert similarity(at_token_floor, sub, cfg, emb) == 0.0

    two_hits = ref[:2] + vocab[20:74]
    at_overlap_floor = DocumentText.from_tokens("https://c.test/b", two_hits)
    assert len(at_overlap_floor.tokens) == 56
    assert len(set(at_overlap_floor.tokens) & set(ref)) / len(ref) == 0.2
    assert similarity(at_overlap_floor, sub, cfg, emb) == 0.0

    above_both = ref[:3] + vocab[20:74]
    sure_hit = DocumentText.from_tokens("https://c.test/c", above_both)
    assert similarity(sure_hit, sub, cfg, emb) > 0.0


def test_progress_fill_semantics_over_random_views():
    rng = random.Random(99)
    vocab = collision_free_vocab(150, rng)
    shape = [("Alpha part", ["Alpha detail"]), ("Beta part", ["Beta detail"])]
    outline = build_outline("t", "Topic", shape, text_for=lambda _: " ".join(vocab[:12]))
    emb = HashedTfEmbedder()
    state = ProgressState.for_outline(outline, ScoringConfig())

    docs = {}
    for i in range(30):
        body = [rng.choice(vocab[:40]) for _ in range(rng.randint(30, 120))]
        docs[f"https://corpus.test/{i}"] = DocumentText.from_tokens(
            f"https://corpus.test/{i}", body
        )

    shadow = {sub.id: 0.0 for sub in outline.walk()}
    counted: dict[str, set[str]] = {sub.id: set() for sub in outline.walk()}
    previous_fill = {sub.id: 0.0 for sub in outline.walk()}

    for _ in range(200):
        doc = docs[rng.choice(sorted(docs))]
        state, _deltas = record_view(state, doc, outline, emb)
        for sub in outline.walk():
            if doc.doc_id not in counted[sub.id]:
                counted[sub.id].add(doc.doc_id)
                shadow[sub.id] += similarity(doc, sub, state.config, emb)
            fill = fill_fraction(state, sub.id)
            assert fill == min(1.0, state.sums[sub.id] / 10.0)  # exact contract
            assert state.sums[sub.id] == pytest.approx(shadow[sub.id], abs=1e-12)
            assert fill >= previous_fill[sub.id]  # monotone under any sequence
            previous_fill[sub.id] = fill

    # a re-view of every document adds exactly zero everywhere
    before = dict(state.sums)
    for doc in docs.values():
        state, deltas = record_view(state, doc, outline, emb)
        assert all(v == 0.0 for v in deltas.values())
    assert state.sums == before


def oracle_gains(pre_levels, post_levels):
    score = {1: 0, 2: 0, 3: 1, 4: 2}
    gains = [max(0, score[b] - score[a]) for a, b in zip(pre_levels, post_levels)]
    headroom = [2 - score[a] for a in pre_levels]
    alg = sum(gains) / len(gains)
    mlg = sum(headroom) / len(headroom)
    rpl = None if mlg == 0 else alg / mlg
    return alg, mlg, rpl


def records_for(levels):
    return [
        VksRecord(f"concept {i}", lv, "a definition" if lv >= 3 else None)
        for i, lv in enumerate(levels)
    ]


def test_learning_metrics_match_bruteforce_oracle():
    rng = random.Random(424242)
    for _ in range(10_000):
        n = rng.randint(1, 12)
        pre = [rng.randint(1, 4) for _ in range(n)]
        post = [rng.randint(1, 4) for _ in range(n)]
        report = learning_report(records_for(pre), records_for(post))
        alg, mlg, rpl = oracle_gains(pre, post)
        assert report.alg == alg and report.mlg == mlg  # exact, no tolerance
        assert report.rpl == rpl
        if report.rpl is not None:
            assert 0.0 <= report.rpl <= 1.0

    # worked example: score vectors pre [0,0,1,2,2] / post [2,1,1,2,2]
    pre = records_for([1, 1, 3, 4, 4])
    post = records_for([4, 3, 3, 4, 4])
    report = learning_report(pre, post)
    assert (report.alg, report.mlg, report.rpl) == (0.6, 1.0, 0.6)


def test_report_byte_identical_runs_and_golden(tmp_path):
    first = build_report(FIXTURES / "logs", FIXTURES / "outlines", tmp_path / "a")
    second = build_report(FIXTURES / "logs", FIXTURES / "outlines", tmp_path / "b")
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()
    golden = {p.name: (FIXTURES / "golden" / p.name).read_bytes() for p in first}
    for p in first:
        assert p.read_bytes() == golden[p.name]


def test_directional_contrasts_hold_for_twenty_seeds():
    start = time.perf_counter()
    outline = load_outline(FIXTURES / "outlines" / "ethics.yaml")
    backend = LocalCorpusAdapter.from_dir(FIXTURES / "corpus")
    assert len(backend.index.doc_ids) <= 500  # stays a laptop-scale corpus
    blacklist = Blacklist.from_file(FIXTURES / "blacklist.txt")
    concepts = [f"ethics concept {i}" for i in range(10)]

    def sweep(kind: AgentKind, strategy: StrategyKind):
        reports = []
        for seed in range(20):
            run = run_agent(
                AgentProfile(kind=kind, seed=seed),
                outline,
                strategy,
                backend,
                blacklist,
                concepts,
            )
            reports.append(behavior_report(run.state.event_log, outline))
        return reports

    freeform = sweep(AgentKind.FREE_FORM, StrategyKind.CONTROL)
    follower = sweep(AgentKind.OUTLINE_FOLLOWER, StrategyKind.CURATED)
    chaser = sweep(AgentKind.GAUGE_CHASER, StrategyKind.FEEDBACK)

    # outline-led querying: every follower session above every freeform one
    assert min(r.frac_query_terms_from_outline for r in follower) > max(
        r.frac_query_terms_from_outline for r in freeform
    )
    # gauge chasing: skim (shorter dwell), scan (more snippets seen)
    assert max(r.mean_doc_dwell_s for r in chaser) < min(
        r.mean_doc_dwell_s for r in follower
    )
    assert min(r.unique_snippets_viewed for r in chaser) > max(
        r.unique_snippets_viewed for r in follower
    )
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"60 simulated sessions took {elapsed:.1f}s"


SUMMARY = " ".join(["insight"] * 100)
ATTENTION = "radiocarbon-dating-considerations"


def gate_client(tmp_path, name, **session_kw):
    log_dir = tmp_path / name
    log_dir.mkdir()
    cfg = ServiceConfig(
        outlines_dir=FIXTURES / "outlines",
        concepts_dir=FIXTURES / "concepts",
        blacklist_path=FIXTURES / "blacklist.txt",
        log_dir=log_dir,
        attention_topic=ATTENTION,
        corpus_dir=FIXTURES / "corpus",
        seed=11,
        session=SessionConfig(**session_kw) if session_kw else SessionConfig(),
    )
    return TestClient(create_app(cfg))


def answer_all(items, levels):
    rows = []
    for item in items:
        level = levels[item["topic_id"]]
        row = {"topic_id": item["topic_id"], "concept": item["concept"], "level": level}
        if level >= 3:
            row["definition"] = f"{item['concept']} spelled out"
        rows.append(row)
    return rows


def posttest_for(items, topic_id):
    return [
        {"concept": i["concept"], "level": 4, "definition": f"{i['concept']} learned"}
        for i in items
        if i["topic_id"] == topic_id
    ]


def test_workflow_gates_enforced_over_http(tmp_path):
    # 1. attention check: scoring below both study topics ends the session
    client = gate_client(tmp_path, "slow")
    created = client.post(
        "/sessions", json={"participant_id": "p-reject", "strategy": "control"}
    ).json()
    study = sorted({i["topic_id"] for i in created["items"]} - {ATTENTION})
    sid = created["session_id"]
    out = client.post(
        f"/sessions/{sid}/pretest",
        json={"responses": answer_all(created["items"], {study[0]: 3, study[1]: 3, ATTENTION: 1})},
    ).json()
    assert out["rejected"] is True and out["phase"] == "rejected"

    # 2. lowest-knowledge assignment: the weaker study topic is the task
    created = client.post(
        "/sessions", json={"participant_id": "p-assign", "strategy": "control"}
    ).json()
    study = sorted({i["topic_id"] for i in created["items"]} - {ATTENTION})
    out = client.post(
        f"/sessions/{created['session_id']}/pretest",
        json={"responses": answer_all(created["items"], {study[0]: 4, study[1]: 1, ATTENTION: 4})},
    ).json()
    assert out["rejected"] is False
    assert out["topic"]["topic_id"] == study[1]

    # 3. thirty-minute finish gate: early post-test refused with time left
    sid = created["session_id"]
    items = created["items"]
    refused = client.post(
        f"/sessions/{sid}/posttest",
        json={"responses": posttest_for(items, study[1]), "summary": SUMMARY},
    )
    assert refused.status_code == 409
    assert refused.json()["remaining_seconds"] > 1700

    # 4. hundred-word summary gate (fast clock so the time gate is passable)
    client = gate_client(tmp_path, "fast", min_task_time_s=0.01, planned_duration_s=0.01)
    created = client.post(
        "/sessions", json={"participant_id": "p-summary", "strategy": "control"}
    ).json()
    study = sorted({i["topic_id"] for i in created["items"]} - {ATTENTION})
    sid = created["session_id"]
    client.post(
        f"/sessions/{sid}/pretest",
        json={"responses": answer_all(created["items"], {study[0]: 1, study[1]: 4, ATTENTION: 4})},
    )
    time.sleep(0.02)
    ninety_nine = " ".join(["word"] * 99)
    short = client.post(
        f"/sessions/{sid}/posttest",
        json={"responses": posttest_for(created["items"], study[0]), "summary": ninety_nine},
    )
    assert short.status_code == 422
    done = client.post(
        f"/sessions/{sid}/posttest",
        json={"responses": posttest_for(created["items"], study[0]), "summary": SUMMARY},
    )
    assert done.status_code == 200 and done.json()["phase"] == "done"

    # 5. more than three tab switches: completes, then lands rejected
    created = client.post(
        "/sessions", json={"participant_id": "p-tabs", "strategy": "control"}
    ).json()
    study = sorted({i["topic_id"] for i in created["items"]} - {ATTENTION})
    sid = created["session_id"]
    client.post(
        f"/sessions/{sid}/pretest",
        json={"responses": answer_all(created["items"], {study[0]: 1, study[1]: 4, ATTENTION: 4})},
    )
    client.post(f"/sessions/{sid}/events", json={"events": [
        {"client_seq": n, "kind": "TabSwitch", "payload": {}} for n in range(1, 5)
    ]})
    time.sleep(0.02)
    out = client.post(
        f"/sessions/{sid}/posttest",
        json={"responses": posttest_for(created["items"], study[0]), "summary": SUMMARY},
    ).json()
    assert out["phase"] == "rejected"
    assert "tab-switch" in out["reason"]
