"""HTTP API tests: enrollment, phase gates, event ingestion, reports.

Session clocks run on real time here, so gated flows use a config with a
tiny minimum task time and sleep past it.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from searchscaffold.config import ServiceConfig
from searchscaffold.service import create_app
from searchscaffold.session import SessionConfig

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
ATTENTION = "radiocarbon-dating-considerations"

SUMMARY = " ".join(["insight"] * 100)


def make_config(tmp_path, **kw) -> ServiceConfig:
    log_dir = tmp_path / "logs"
    log_dir.mkdir(parents=True, exist_ok=True)
    defaults = dict(
        outlines_dir=FIXTURES / "outlines",
        concepts_dir=FIXTURES / "concepts",
        blacklist_path=FIXTURES / "blacklist.txt",
        log_dir=log_dir,
        attention_topic=ATTENTION,
        corpus_dir=FIXTURES / "corpus",
        seed=7,
        session=SessionConfig(min_task_time_s=0.05, planned_duration_s=0.05),
    )
    defaults.update(kw)
    return ServiceConfig(**defaults)


@pytest.fixture()
def client(tmp_path):
    cfg = make_config(tmp_path)
    with TestClient(create_app(cfg)) as c:
        c.log_dir = cfg.log_dir
        yield c


def enroll(client, participant="p1", strategy="feedback"):
    r = client.post("/sessions", json={"participant_id": participant, "strategy": strategy})
    assert r.status_code == 200, r.text
    return r.json()


def answers(items, level_by_topic):
    """One pretest response per bundle item, levels chosen per topic."""
    out = []
    for item in items:
        level = level_by_topic[item["topic_id"]]
        row = {"topic_id": item["topic_id"], "concept": item["concept"], "level": level}
        if level >= 3:
            row["definition"] = f"{item['concept']} means something specific"
        out.append(row)
    return out


def topics_of(items):
    study = sorted({i["topic_id"] for i in items} - {ATTENTION})
    assert len(study) == 2
    return study


def start_search(client, participant="p1", strategy="feedback"):
    """Enroll and answer the pretest so the low topic wins the assignment."""
    created = enroll(client, participant, strategy)
    low, high = topics_of(created["items"])
    levels = {low: 1, high: 4, ATTENTION: 4}
    r = client.post(
        f"/sessions/{created['session_id']}/pretest",
        json={"responses": answers(created["items"], levels)},
    )
    assert r.status_code == 200, r.text
    body = r.json()
    assert body["rejected"] is False
    assert body["topic"]["topic_id"] == low
    return created["session_id"], created["items"], body


def concepts_for(items, topic_id):
    return [i["concept"] for i in items if i["topic_id"] == topic_id]


def posttest_answers(items, topic_id, level=4):
    return [
        {"concept": c, "level": level, "definition": f"{c} explained at length"}
        for c in concepts_for(items, topic_id)
    ]


# ----------------------------------------------------------- enrollment


def test_create_session_returns_pretest_bundle(client):
    body = enroll(client)
    assert body["phase"] == "pretest"
    assert len(body["session_id"]) >= 16  # unguessable token, not a counter
    items = body["items"]
    assert len(items) == 30
    by_topic = {}
    for item in items:
        by_topic.setdefault(item["topic_id"], []).append(item["concept"])
    assert len(by_topic) == 3
    assert all(len(v) == 10 for v in by_topic.values())
    assert ATTENTION in by_topic


def test_duplicate_participant_conflict(client):
    enroll(client, "dup")
    r = client.post("/sessions", json={"participant_id": "dup", "strategy": "control"})
    assert r.status_code == 409
    assert "already enrolled" in r.json()["detail"]


def test_unknown_strategy_rejected(client):
    r = client.post("/sessions", json={"participant_id": "p9", "strategy": "turbo"})
    assert r.status_code == 422


def test_unknown_session_404(client):
    assert client.get("/sessions/nope/scaffold").status_code == 404
    assert client.post("/sessions/nope/query", json={"query": "x"}).status_code == 404


def test_healthz(client):
    body = client.get("/healthz").json()
    assert body["status"] == "ok"
    assert body["topics"] == 6  # outline+concepts pairs minus the attention topic


# -------------------------------------------------------------- pretest


def test_attention_failure_rejects(client):
    created = enroll(client, "sleepy")
    low, high = topics_of(created["items"])
    # attention sum strictly below both study sums
    levels = {low: 3, high: 3, ATTENTION: 1}
    r = client.post(
        f"/sessions/{created['session_id']}/pretest",
        json={"responses": answers(created["items"], levels)},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["rejected"] is True
    assert body["phase"] == "rejected"
    assert body["reason"]
    # a rejected session accepts nothing further
    sid = created["session_id"]
    assert client.post(f"/sessions/{sid}/query", json={"query": "x"}).status_code == 409
    assert client.get(f"/sessions/{sid}/report").status_code == 409


def test_assigns_lower_knowledge_topic(client):
    sid, items, body = start_search(client)
    assert body["phase"] == "search"
    assert body["may_finish"] is False or body["remaining_seconds"] == 0.0
    assert body["scaffold"]["visible"] is True  # feedback condition
    assert all(e["fill_fraction"] == 0.0 for e in body["scaffold"]["entries"])


def test_control_scaffold_hidden(client):
    _, _, body = start_search(client, strategy="control")
    assert body["scaffold"]["visible"] is False
    assert body["scaffold"]["entries"] == []


def test_pretest_definition_required_at_level_three(client):
    created = enroll(client, "p3")
    rows = answers(created["items"], {t: 1 for t in topics_of(created["items"])} | {ATTENTION: 1})
    rows[0]["level"] = 3  # claim familiarity without the definition
    rows[0].pop("definition", None)
    r = client.post(f"/sessions/{created['session_id']}/pretest", json={"responses": rows})
    assert r.status_code == 422


def test_query_before_pretest_blocked(client):
    created = enroll(client, "eager")
    r = client.post(f"/sessions/{created['session_id']}/query", json={"query": "x"})
    assert r.status_code == 409


# --------------------------------------------------------------- search


def test_query_returns_serp_and_scaffold(client):
    sid, _, _ = start_search(client)
    r = client.post(f"/sessions/{sid}/query", json={"query": "ethics"})
    assert r.status_code == 200
    body = r.json()
    assert body["serp"]["query"] == "ethics"
    assert body["serp"]["page"] == 1
    assert body["serp"]["results"]
    assert {"doc_id", "title", "snippet", "host", "rank"} <= set(body["serp"]["results"][0])
    assert "remaining_seconds" in body


def test_empty_query_rejected(client):
    sid, _, _ = start_search(client)
    assert client.post(f"/sessions/{sid}/query", json={"query": "  "}).status_code == 422
    assert client.post(f"/sessions/{sid}/query", json={}).status_code == 422


def test_page_turn_requires_prior_query(client):
    sid, _, _ = start_search(client)
    assert client.post(f"/sessions/{sid}/query", json={"page": 2}).status_code == 422


def test_document_fetch(client):
    sid, _, _ = start_search(client)
    serp = client.post(f"/sessions/{sid}/query", json={"query": "ethics"}).json()["serp"]
    doc_id = serp["results"][0]["doc_id"]
    r = client.get(f"/sessions/{sid}/document", params={"doc_id": doc_id})
    assert r.status_code == 200
    assert r.json()["doc_id"] == doc_id
    assert r.json()["text"].strip()
    assert client.get(f"/sessions/{sid}/document", params={"doc_id": "ghost"}).status_code == 404


# --------------------------------------------------------------- events


def test_event_batch_accepted_then_deduplicated(client):
    sid, _, _ = start_search(client)
    serp = client.post(f"/sessions/{sid}/query", json={"query": "ethics"}).json()["serp"]
    doc_id = serp["results"][0]["doc_id"]
    batch = {
        "events": [
            {"client_seq": 1, "kind": "SnippetViewed", "payload": {"doc_id": doc_id}},
            {"client_seq": 2, "kind": "DocumentOpened", "payload": {"doc_id": doc_id}, "client_ts_ms": 0},
            {"client_seq": 3, "kind": "DocumentClosed", "payload": {"doc_id": doc_id}, "client_ts_ms": 10},
        ]
    }
    r = client.post(f"/sessions/{sid}/events", json=batch)
    assert r.status_code == 200
    assert r.json() == {"accepted": 3, "duplicates": 0, "last_client_seq": 3}
    # the retry is absorbed without duplicating state
    r = client.post(f"/sessions/{sid}/events", json=batch)
    assert r.json() == {"accepted": 0, "duplicates": 3, "last_client_seq": 3}


def test_client_timestamp_bounds(client):
    sid, _, _ = start_search(client)
    serp = client.post(f"/sessions/{sid}/query", json={"query": "ethics"}).json()["serp"]
    doc_id = serp["results"][0]["doc_id"]
    ahead = {
        "events": [
            {"client_seq": 1, "kind": "DocumentOpened", "payload": {"doc_id": doc_id},
             "client_ts_ms": 3_600_000}
        ]
    }
    assert client.post(f"/sessions/{sid}/events", json=ahead).status_code == 422
    behind = {
        "events": [
            {"client_seq": 1, "kind": "DocumentOpened", "payload": {"doc_id": doc_id},
             "client_ts_ms": -5_000}
        ]
    }
    assert client.post(f"/sessions/{sid}/events", json=behind).status_code == 409


def test_failed_batch_does_not_advance_watermark(client):
    sid, _, _ = start_search(client)
    serp = client.post(f"/sessions/{sid}/query", json={"query": "ethics"}).json()["serp"]
    doc_id = serp["results"][0]["doc_id"]
    bad = {"events": [{"client_seq": 1, "kind": "DocumentClosed",
                       "payload": {"doc_id": doc_id}, "client_ts_ms": 5}]}
    assert client.post(f"/sessions/{sid}/events", json=bad).status_code == 409  # close before open
    good = {"events": [
        {"client_seq": 1, "kind": "DocumentOpened", "payload": {"doc_id": doc_id}, "client_ts_ms": 5},
        {"client_seq": 2, "kind": "DocumentClosed", "payload": {"doc_id": doc_id}, "client_ts_ms": 9},
    ]}
    r = client.post(f"/sessions/{sid}/events", json=good)
    assert r.json()["accepted"] == 2


# -------------------------------------------------------------- wrap-up


def test_posttest_gate_then_completion_and_report(client):
    sid, items, body = start_search(client, "runner")
    low = body["topic"]["topic_id"]
    serp = client.post(f"/sessions/{sid}/query", json={"query": "ethics"}).json()["serp"]
    doc_id = serp["results"][0]["doc_id"]
    client.post(f"/sessions/{sid}/events", json={"events": [
        {"client_seq": 1, "kind": "SnippetViewed", "payload": {"doc_id": doc_id}},
        {"client_seq": 2, "kind": "DocumentOpened", "payload": {"doc_id": doc_id}, "client_ts_ms": 2},
        {"client_seq": 3, "kind": "Bookmarked", "payload": {"doc_id": doc_id}},
        {"client_seq": 4, "kind": "DocumentClosed", "payload": {"doc_id": doc_id}, "client_ts_ms": 20},
    ]})
    post = {"responses": posttest_answers(items, low), "summary": SUMMARY}

    time.sleep(0.06)  # past the (tiny) minimum task time
    r = client.post(f"/sessions/{sid}/posttest", json=post)
    assert r.status_code == 200, r.text
    assert r.json() == {"phase": "done"}

    report = client.get(f"/sessions/{sid}/report")
    assert report.status_code == 200
    rec = report.json()
    assert rec["session_id"] == sid
    assert rec["topic_id"] == low
    assert rec["strategy"] == "feedback"
    assert rec["query_count"] == 1
    assert rec["unique_docs_viewed"] == 1
    assert rec["bookmark_count"] == 1
    assert rec["mlg"] == 2.0  # pre all level 1
    assert rec["alg"] == 2.0  # post all level 4
    assert rec["rpl"] == 1.0
    assert list(rec)[:4] == ["session_id", "participant_id", "topic_id", "strategy"]

    log = client.log_dir / f"{sid}.log"
    meta = client.log_dir / f"{sid}.meta.yaml"
    assert log.exists() and meta.exists()
    assert "rewritten" in log.read_text()  # queries land in the persisted log


def test_posttest_too_early_reports_remaining(tmp_path):
    cfg = make_config(tmp_path, session=SessionConfig())  # real half-hour gate
    with TestClient(create_app(cfg)) as client:
        sid, items, body = start_search(client)
        low = body["topic"]["topic_id"]
        r = client.post(
            f"/sessions/{sid}/posttest",
            json={"responses": posttest_answers(items, low), "summary": SUMMARY},
        )
        assert r.status_code == 409
        assert r.json()["remaining_seconds"] > 1700


def test_posttest_rejects_short_summary(client):
    sid, items, body = start_search(client)
    low = body["topic"]["topic_id"]
    time.sleep(0.06)
    r = client.post(
        f"/sessions/{sid}/posttest",
        json={"responses": posttest_answers(items, low), "summary": "too short"},
    )
    assert r.status_code == 422
    assert "word" in r.json()["detail"]


def test_posttest_rejects_concept_mismatch(client):
    sid, items, body = start_search(client)
    rows = posttest_answers(items, body["topic"]["topic_id"])
    rows[0]["concept"] = "unrelated notion"
    time.sleep(0.06)
    r = client.post(f"/sessions/{sid}/posttest", json={"responses": rows, "summary": SUMMARY})
    assert r.status_code == 422


def test_tab_switch_flood_flips_to_rejected(client):
    sid, items, body = start_search(client)
    low = body["topic"]["topic_id"]
    client.post(f"/sessions/{sid}/events", json={"events": [
        {"client_seq": n, "kind": "TabSwitch", "payload": {}} for n in range(1, 5)
    ]})
    time.sleep(0.06)
    r = client.post(
        f"/sessions/{sid}/posttest",
        json={"responses": posttest_answers(items, low), "summary": SUMMARY},
    )
    assert r.status_code == 200
    assert r.json()["phase"] == "rejected"
    assert "tab-switch" in r.json()["reason"]
    meta = (client.log_dir / f"{sid}.meta.yaml").read_text()
    assert "rejected: true" in meta


# ------------------------------------------------- condition blinding


def walk_strings(node):
    if isinstance(node, str):
        yield node
    elif isinstance(node, dict):
        for v in node.values():
            yield from walk_strings(v)
    elif isinstance(node, list):
        for v in node:
            yield from walk_strings(v)


def test_rewritten_query_never_reaches_the_client(client):
    sid, items, body = start_search(client, "blind", strategy="aqe")
    low = body["topic"]["topic_id"]
    captured = [body]
    for raw in ("history", "ethics of history"):
        r = client.post(f"/sessions/{sid}/query", json={"query": raw})
        captured.append(r.json())
        assert r.json()["serp"]["query"] == raw
    captured.append(client.post(f"/sessions/{sid}/query", json={"page": 2}).json())
    captured.append(client.get(f"/sessions/{sid}/scaffold").json())
    time.sleep(0.06)
    captured.append(client.post(
        f"/sessions/{sid}/posttest",
        json={"responses": posttest_answers(items, low), "summary": SUMMARY},
    ).json())
    captured.append(client.get(f"/sessions/{sid}/report").json())

    rewrites = []
    for line in (client.log_dir / f"{sid}.log").read_text().splitlines():
        event = json.loads(line)
        if event["kind"] == "QueryIssued":
            assert event["payload"]["rewritten"] != event["payload"]["raw"]
            rewrites.append(event["payload"]["rewritten"])
    assert len(rewrites) == 2
    leaked = [s for body in captured for s in walk_strings(body) if any(rw in s for rw in rewrites)]
    assert leaked == []


# ------------------------------------------------------ random assign


def run_minimal_session(client, participant):
    sid, items, body = start_search(client, participant, strategy="random-assign")
    low = body["topic"]["topic_id"]
    time.sleep(0.06)
    r = client.post(
        f"/sessions/{sid}/posttest",
        json={"responses": posttest_answers(items, low), "summary": SUMMARY},
    )
    assert r.status_code == 200
    return sid


def assigned_strategies(tmp_path, n):
    cfg = make_config(tmp_path)
    out = []
    with TestClient(create_app(cfg)) as client:
        client.log_dir = cfg.log_dir
        for i in range(n):
            sid = run_minimal_session(client, f"p{i}")
            meta = (cfg.log_dir / f"{sid}.meta.yaml").read_text()
            line = next(l for l in meta.splitlines() if l.startswith("strategy:"))
            out.append(line.split(":", 1)[1].strip())
    return out


def test_random_assignment_covers_conditions_and_is_seeded(tmp_path):
    first = assigned_strategies(tmp_path / "a", 12)
    again = assigned_strategies(tmp_path / "b", 12)
    assert first == again  # same service seed, same draw sequence
    assert set(first) == {"control", "aqe", "curated", "feedback"}
