"""Live-session driver: wires the state machine to search and scaffolding.

One SessionRuntime owns one session: it stamps server timestamps, rewrites
and submits queries, appends every event to the on-disk log before
acknowledging it, and closes the session out into the post-test. Client
batches are idempotent (client_seq) so a retried upload never double-logs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Protocol, Sequence

import yaml

from .errors import EventOrderingError, PhaseError, ValidationError
from .metrics import VksRecord
from .outlines import TopicOutline
from .scaffold import (
    ScaffoldView,
    SliceSchedule,
    StrategyKind,
    active_subtopic,
    rewrite_query,
    scaffold_view,
)
from .scoring import ScoringConfig
from .search import Blacklist, BodyCache, SearchAdapter, Serp, search
from .session import (
    CLIENT_EVENT_KINDS,
    CLIENT_TIMED_KINDS,
    CLOCK_SKEW_TOLERANCE_MS,
    EventLogWriter,
    Phase,
    SessionConfig,
    SessionDeps,
    SessionEvent,
    SessionState,
    begin_search,
    enter_posttest,
    handle_event,
    may_finish,
    new_session,
    pending_closes,
    remaining_seconds,
    submit_posttest,
)


class Clock(Protocol):
    def now_ms(self) -> int: ...


class SystemClock:
    def now_ms(self) -> int:
        return int(time.monotonic() * 1000)


class ManualClock:
    """Test/simulation clock advanced by hand."""

    def __init__(self, start_ms: int = 0):
        self._now = start_ms

    def now_ms(self) -> int:
        return self._now

    def advance(self, delta_ms: int) -> int:
        if delta_ms < 0:
            raise ValidationError("clock cannot run backwards")
        self._now += delta_ms
        return self._now


@dataclass(frozen=True)
class ClientEvent:
    """One client-buffered interaction, pre-upload.

    client_seq orders and deduplicates uploads; client_ts_ms is honored
    only for the dwell-relevant kinds (open/close), everything else is
    stamped on receipt.
    """

    client_seq: int
    kind: str
    payload: dict
    client_ts_ms: int | None = None

    def __post_init__(self):
        if self.client_seq < 1:
            raise ValidationError(f"client_seq must be >= 1, got {self.client_seq}")
        if self.kind not in CLIENT_EVENT_KINDS:
            raise ValidationError(f"clients cannot submit {self.kind!r} events")
        if self.kind in CLIENT_TIMED_KINDS and self.client_ts_ms is None:
            raise ValidationError(f"{self.kind} requires a client timestamp")


@dataclass(frozen=True)
class BatchResult:
    accepted: int
    duplicates: int
    last_client_seq: int


class SessionRuntime:
    """Drives one session against a search backend under a shared clock."""

    def __init__(
        self,
        session_id: str,
        participant_id: str,
        strategy: StrategyKind,
        backend: SearchAdapter,
        blacklist: Blacklist,
        *,
        config: SessionConfig | None = None,
        scoring_config: ScoringConfig | None = None,
        clock: Clock | None = None,
        log_dir: str | Path | None = None,
    ):
        self.state: SessionState = new_session(session_id, participant_id, strategy, config)
        self.backend = backend
        self.blacklist = blacklist
        self.scoring_config = scoring_config
        self.clock = clock or SystemClock()
        self.log_dir = Path(log_dir) if log_dir is not None else None
        self.deps: SessionDeps | None = None
        self._writer: EventLogWriter | None = None
        self._epoch_ms: int | None = None
        self._schedule: SliceSchedule | None = None
        self._l1_titles: dict[str, str] = {}
        self._outline: TopicOutline | None = None
        self._last_rewritten: str | None = None
        self._last_client_seq = 0

    # ------------------------------------------------------------ lifecycle

    def begin_search(self, outline: TopicOutline) -> None:
        self._epoch_ms = self.clock.now_ms()
        begin_search(self.state, outline, self.scoring_config, ts_ms=0)
        self._outline = outline
        bodies = BodyCache(self.backend.fetch_body)
        self.deps = SessionDeps(outline=outline, body=bodies.get)
        self._schedule = SliceSchedule.for_outline(outline, self.state.config.planned_duration_s)
        self._l1_titles = {sub.id: sub.title for sub in outline.l1}
        if self.log_dir is not None:
            self._writer = EventLogWriter(self.log_dir / f"{self.state.session_id}.log")

    def now_ms(self) -> int:
        """Milliseconds since the session epoch (the start of search)."""
        if self._epoch_ms is None:
            raise PhaseError("session has no epoch before search starts")
        return self.clock.now_ms() - self._epoch_ms

    def _append(self, event: SessionEvent) -> SessionEvent:
        # apply (validates) first, persist second, acknowledge by returning;
        # a crash before the write loses only an unacknowledged event
        handle_event(self.state, event, self.deps)
        if self._writer is not None:
            self._writer.write(event)
        return event

    def _server_event(self, kind: str, payload: dict, ts_ms: int | None = None) -> SessionEvent:
        ts = self.now_ms() if ts_ms is None else ts_ms
        return SessionEvent(
            session_id=self.state.session_id,
            seq=self.state.last_seq + 1,
            ts_ms=max(ts, self.state.last_ts),
            kind=kind,
            payload=payload,
        )

    # -------------------------------------------------------------- queries

    def issue_query(self, raw_query: str, page: int = 1) -> tuple[Serp, ScaffoldView]:
        """Log, rewrite (Aqe only), and run one query; returns the SERP as
        the learner sees it (raw query, never the rewritten form)."""
        ts = self.now_ms()
        active_title = self._l1_titles[active_subtopic(self._schedule, ts / 1000.0)]
        rewritten = rewrite_query(
            raw_query, self._outline.title, active_title, self.state.strategy
        )
        self._append(
            self._server_event(
                "QueryIssued", {"raw": raw_query, "rewritten": rewritten}, ts_ms=ts
            )
        )
        self._last_rewritten = rewritten
        serp = self._run_serp(raw_query, rewritten, page)
        return serp, self.scaffold()

    def change_page(self, page: int) -> Serp:
        """Another page of the current query; the Aqe rewrite is pinned at
        issue time so pages of one query never overlap."""
        if self._last_rewritten is None:
            raise ValidationError("no query issued yet")
        self._append(self._server_event("PageChanged", {"page": page}))
        return self._run_serp(self.state.query_history[-1], self._last_rewritten, page)

    def _run_serp(self, raw_query: str, rewritten: str, page: int) -> Serp:
        serp = search(rewritten, page, self.backend, self.blacklist)
        self._append(
            self._server_event(
                "SerpShown",
                {
                    "query": raw_query,
                    "page": page,
                    "doc_ids": [r.doc_id for r in serp.results],
                },
            )
        )
        return replace(serp, query_as_submitted=raw_query)

    # --------------------------------------------------------------- events

    def ingest_batch(self, batch: Sequence[ClientEvent]) -> BatchResult:
        """Append a client upload; items at or below the dedup watermark
        are counted as duplicates and skipped, the rest must arrive in
        client_seq order."""
        accepted = duplicates = 0
        for item in batch:
            if item.client_seq <= self._last_client_seq:
                duplicates += 1
                continue
            payload = dict(item.payload)
            payload["client_seq"] = item.client_seq
            ts = None
            if item.kind in CLIENT_TIMED_KINDS:
                ts = self._validated_client_ts(item)
            self._append(self._server_event(item.kind, payload, ts_ms=ts))
            self._last_client_seq = item.client_seq
            accepted += 1
        return BatchResult(
            accepted=accepted, duplicates=duplicates, last_client_seq=self._last_client_seq
        )

    def _validated_client_ts(self, item: ClientEvent) -> int:
        """Client timestamps keep dwell honest but must respect log order:
        small skew is clamped, anything worse is refused."""
        ts = item.client_ts_ms
        if ts > self.now_ms() + CLOCK_SKEW_TOLERANCE_MS:
            raise ValidationError(
                f"client timestamp {ts} is ahead of the server beyond tolerance"
            )
        behind = self.state.last_ts - ts
        if behind > CLOCK_SKEW_TOLERANCE_MS:
            raise EventOrderingError(
                f"client timestamp {ts} is {behind}ms behind the log frontier"
            )
        return max(ts, self.state.last_ts)

    # ------------------------------------------------------------- scaffold

    def scaffold(self) -> ScaffoldView:
        return scaffold_view(self.state.strategy, self._outline, self.state.progress)

    # ------------------------------------------------------------ finishing

    def may_finish(self) -> bool:
        return may_finish(self.state, self.now_ms())

    def remaining_seconds(self) -> float:
        return remaining_seconds(self.state, self.now_ms())

    def finish(self) -> None:
        """Close every open document (synthetic events, logged like any
        other) and move to the post-test."""
        if not may_finish(self.state, self.now_ms()):
            raise PhaseError(
                "minimum task time not reached",
                remaining_seconds=self.remaining_seconds(),
            )
        for event in pending_closes(self.state, self.now_ms()):
            self._append(event)
        enter_posttest(self.state, self.now_ms())
        if self._writer is not None:
            self._writer.close()
            self._writer = None

    def submit_posttest(self, responses: Sequence[VksRecord], summary: str) -> SessionState:
        submit_posttest(self.state, responses, summary)
        if self.log_dir is not None:
            save_meta(self.state, self.log_dir / f"{self.state.session_id}.meta.yaml")
        return self.state

    def close(self) -> None:
        if self._writer is not None:
            self._writer.close()
            self._writer = None


# ------------------------------------------------------------------- meta


def vks_to_plain(records: Sequence[VksRecord]) -> list[dict]:
    out = []
    for r in records:
        entry: dict = {"concept": r.concept, "level": r.level}
        if r.definition is not None:
            entry["definition"] = r.definition
        out.append(entry)
    return out


def save_meta(state: SessionState, path: str | Path) -> Path:
    """Sidecar file pairing a session's log with everything the log does
    not carry: identity, condition, and the two VKS questionnaires."""
    meta: dict = {
        "session_id": state.session_id,
        "participant_id": state.participant_id,
        "topic_id": state.topic_id,
        "strategy": state.strategy.value,
        "vks_pre": vks_to_plain(state.vks_pre),
        "vks_post": vks_to_plain(state.vks_post),
    }
    if state.summary:
        meta["summary"] = state.summary
    if state.phase is Phase.REJECTED:
        meta["rejected"] = True
        meta["rejection_reason"] = state.rejection_reason
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(meta, sort_keys=False, allow_unicode=True), encoding="utf-8")
    return path


def load_meta(path: str | Path) -> dict:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: meta file must be a mapping")
    missing = {"session_id", "participant_id", "topic_id", "strategy"} - raw.keys()
    if missing:
        raise ValidationError(f"{path}: meta file missing {sorted(missing)}")
    return raw
