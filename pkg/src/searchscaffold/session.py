"""Study-session workflow: pre-test, assignment, event-sourced search, post-test.

A session moves PreTest → Search → PostTest → Done; Rejected is reached
from the pre-test attention check or, at completion, from the tab-switch
rule. Search-phase interaction is captured as an append-only event log
(one JSON object per line) from which the full session state can be
rebuilt; every analysis downstream works from these logs.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .errors import (
    BodyUnavailableError,
    ConfigurationError,
    EventOrderingError,
    PhaseError,
    ValidationError,
)
from .metrics import VksRecord, vks_to_score
from .outlines import TopicOutline
from .scoring import (
    DocumentText,
    EmbeddingProvider,
    HashedTfEmbedder,
    ProgressState,
    ScoringConfig,
    record_view,
)
from .scaffold import StrategyKind


class Phase(str, Enum):
    PRE_TEST = "pretest"
    SEARCH = "search"
    POST_TEST = "posttest"
    DONE = "done"
    REJECTED = "rejected"


#: Payload keys every event kind must carry.
EVENT_PAYLOADS: dict[str, frozenset[str]] = {
    "QueryIssued": frozenset({"raw", "rewritten"}),
    "SerpShown": frozenset({"query", "page", "doc_ids"}),
    "SnippetViewed": frozenset({"doc_id"}),
    "DocumentOpened": frozenset({"doc_id"}),
    "DocumentClosed": frozenset({"doc_id"}),
    "Bookmarked": frozenset({"doc_id"}),
    "Hidden": frozenset({"doc_id"}),
    "PageChanged": frozenset({"page"}),
    "TabSwitch": frozenset(),
    "ScaffoldScrolled": frozenset(),
}

#: Kinds a client may append directly (queries go through issue_query).
CLIENT_EVENT_KINDS = frozenset(EVENT_PAYLOADS) - {"QueryIssued", "SerpShown"}

#: Open/close carry client timestamps (dwell accuracy); the rest are
#: server-stamped on receipt.
CLIENT_TIMED_KINDS = frozenset({"DocumentOpened", "DocumentClosed"})

CLOCK_SKEW_TOLERANCE_MS = 2000


@dataclass(frozen=True)
class SessionEvent:
    """One logged interaction; ts_ms counts from the session epoch."""

    session_id: str
    seq: int
    ts_ms: int
    kind: str
    payload: dict

    def __post_init__(self):
        if self.kind not in EVENT_PAYLOADS:
            raise ValidationError(f"unknown event kind {self.kind!r}")
        missing = EVENT_PAYLOADS[self.kind] - self.payload.keys()
        if missing:
            raise ValidationError(f"{self.kind} payload missing {sorted(missing)}")
        if self.seq < 1:
            raise ValidationError(f"seq must be >= 1, got {self.seq}")
        if self.ts_ms < 0:
            raise ValidationError(f"ts_ms must be >= 0, got {self.ts_ms}")

    def to_json(self) -> str:
        record = {
            "session_id": self.session_id,
            "seq": self.seq,
            "ts_ms": self.ts_ms,
            "kind": self.kind,
            "payload": self.payload,
        }
        return json.dumps(record, separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "SessionEvent":
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed event line: {exc}") from exc
        try:
            return cls(
                session_id=str(raw["session_id"]),
                seq=int(raw["seq"]),
                ts_ms=int(raw["ts_ms"]),
                kind=str(raw["kind"]),
                payload=dict(raw["payload"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"event line missing field: {exc}") from exc


@dataclass(frozen=True)
class SessionConfig:
    min_task_time_s: float = 1800.0
    planned_duration_s: float = 1800.0
    max_tab_switches: int = 3
    results_per_page: int = 10

    def __post_init__(self):
        for name in ("min_task_time_s", "planned_duration_s", "max_tab_switches", "results_per_page"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")


@dataclass
class SessionState:
    """Everything a session knows; rebuildable from its event log."""

    session_id: str
    participant_id: str
    strategy: StrategyKind
    config: SessionConfig = field(default_factory=SessionConfig)
    topic_id: str | None = None
    phase: Phase = Phase.PRE_TEST
    event_log: list[SessionEvent] = field(default_factory=list)
    progress: ProgressState | None = None
    bookmarks: list[str] = field(default_factory=list)
    hidden: set[str] = field(default_factory=set)
    query_history: list[str] = field(default_factory=list)
    tab_switches: int = 0
    flagged_for_rejection: bool = False
    open_docs: dict[str, int] = field(default_factory=dict)
    search_started_ms: int | None = None
    last_seq: int = 0
    last_ts: int = 0
    vks_pre: tuple[VksRecord, ...] = ()
    vks_post: tuple[VksRecord, ...] = ()
    summary: str = ""
    rejection_reason: str | None = None


class SessionDeps:
    """Search-phase collaborators: document bodies, outline, embeddings."""

    def __init__(
        self,
        outline: TopicOutline,
        body: Callable[[str], DocumentText],
        embedder: EmbeddingProvider | None = None,
    ):
        self.outline = outline
        self.body = body
        self.embedder = embedder or HashedTfEmbedder()
        self.sub_vectors: dict = {}


def new_session(
    session_id: str,
    participant_id: str,
    strategy: StrategyKind,
    config: SessionConfig | None = None,
) -> SessionState:
    if not session_id or not participant_id:
        raise ValidationError("session_id and participant_id are required")
    return SessionState(
        session_id=session_id,
        participant_id=participant_id,
        strategy=strategy,
        config=config or SessionConfig(),
    )


def begin_search(
    state: SessionState,
    outline: TopicOutline,
    scoring_config: ScoringConfig | None = None,
    ts_ms: int = 0,
) -> SessionState:
    if state.phase is not Phase.PRE_TEST:
        raise PhaseError(f"cannot start search from phase {state.phase.value}")
    state.topic_id = outline.topic_id
    state.phase = Phase.SEARCH
    state.progress = ProgressState.for_outline(outline, scoring_config)
    state.search_started_ms = ts_ms
    state.last_ts = ts_ms
    return state


def handle_event(state: SessionState, event: SessionEvent, deps: SessionDeps) -> SessionState:
    """Validate, apply side effects, and append one event.

    All validation happens before any state is touched, so a raised error
    leaves the session exactly as it was.
    """
    if state.phase in (Phase.DONE, Phase.REJECTED):
        raise PhaseError("session is already finished")
    if state.phase is not Phase.SEARCH:
        raise PhaseError(f"events are only accepted during search, not {state.phase.value}")
    if event.session_id != state.session_id:
        raise ValidationError(f"event addressed to {event.session_id!r}")
    if event.seq <= state.last_seq:
        raise EventOrderingError(f"seq {event.seq} is not greater than {state.last_seq}")
    if event.ts_ms < state.last_ts:
        raise EventOrderingError(f"ts_ms {event.ts_ms} precedes {state.last_ts}")

    kind, payload = event.kind, event.payload
    doc_id = payload.get("doc_id", "")
    if kind in ("SnippetViewed", "DocumentOpened", "DocumentClosed", "Bookmarked", "Hidden"):
        if not doc_id:
            raise ValidationError(f"{kind} requires a doc_id")
    if kind == "DocumentOpened" and doc_id in state.open_docs:
        raise EventOrderingError(f"document {doc_id!r} is already open")
    if kind == "DocumentClosed" and doc_id not in state.open_docs:
        raise EventOrderingError(f"document {doc_id!r} was never opened")
    if kind == "QueryIssued" and not str(payload["raw"]).strip():
        raise ValidationError("QueryIssued with empty raw query")
    if kind in ("SerpShown", "PageChanged") and int(payload["page"]) < 1:
        raise ValidationError("page must be >= 1")

    new_progress = state.progress
    if kind == "DocumentOpened":
        try:
            doc = deps.body(doc_id)
        except BodyUnavailableError:
            doc = None  # unreadable body: the view still logs, scores nothing
        if doc is not None:
            new_progress, _ = record_view(
                state.progress, doc, deps.outline, deps.embedder, deps.sub_vectors
            )

    # validation passed — mutate
    if kind == "QueryIssued":
        state.query_history.append(payload["raw"])
    elif kind == "DocumentOpened":
        state.open_docs[doc_id] = event.ts_ms
        state.progress = new_progress
    elif kind == "DocumentClosed":
        del state.open_docs[doc_id]
    elif kind == "Bookmarked":
        state.hidden.discard(doc_id)
        if doc_id not in state.bookmarks:
            state.bookmarks.append(doc_id)
    elif kind == "Hidden":
        if doc_id in state.bookmarks:
            state.bookmarks.remove(doc_id)
        state.hidden.add(doc_id)
    elif kind == "TabSwitch":
        state.tab_switches += 1
        if state.tab_switches > state.config.max_tab_switches:
            state.flagged_for_rejection = True

    state.event_log.append(event)
    state.last_seq = event.seq
    state.last_ts = event.ts_ms
    return state


def may_finish(state: SessionState, now_ms: int) -> bool:
    if state.phase is not Phase.SEARCH:
        raise PhaseError(f"may_finish asked in phase {state.phase.value}")
    return (now_ms - state.search_started_ms) >= state.config.min_task_time_s * 1000


def remaining_seconds(state: SessionState, now_ms: int) -> float:
    elapsed_ms = now_ms - state.search_started_ms
    return max(0.0, state.config.min_task_time_s - elapsed_ms / 1000.0)


def pending_closes(state: SessionState, ts_ms: int) -> list[SessionEvent]:
    """Synthetic DocumentClosed events for everything still open.

    Dwell accounting needs every open to be closed; these are emitted (and
    persisted like any event) when the search phase ends.
    """
    ordered = sorted(state.open_docs.items(), key=lambda kv: (kv[1], kv[0]))
    return [
        SessionEvent(
            session_id=state.session_id,
            seq=state.last_seq + i + 1,
            ts_ms=max(ts_ms, state.last_ts),
            kind="DocumentClosed",
            payload={"doc_id": doc_id},
        )
        for i, (doc_id, _) in enumerate(ordered)
    ]


def enter_posttest(state: SessionState, now_ms: int) -> SessionState:
    if state.phase is not Phase.SEARCH:
        raise PhaseError(f"cannot leave search from phase {state.phase.value}")
    if not may_finish(state, now_ms):
        raise PhaseError(
            "minimum task time not reached",
            remaining_seconds=remaining_seconds(state, now_ms),
        )
    if state.open_docs:
        raise EventOrderingError("open documents must be closed before the post-test")
    state.phase = Phase.POST_TEST
    return state


MIN_SUMMARY_WORDS = 100


def submit_posttest(
    state: SessionState,
    responses: Sequence[VksRecord],
    summary: str,
) -> SessionState:
    """Accept the post-test, then qualify or reject the finished session."""
    if state.phase is not Phase.POST_TEST:
        raise PhaseError(f"post-test not open in phase {state.phase.value}")
    words = len(summary.split())
    if words < MIN_SUMMARY_WORDS:
        raise ValidationError(
            f"summary has {words} words; at least {MIN_SUMMARY_WORDS} required"
        )
    if state.vks_pre:
        expected = {r.concept for r in state.vks_pre}
        got = {r.concept for r in responses}
        if got != expected:
            raise ValidationError("post-test concepts do not match the pre-test")
    if len({r.concept for r in responses}) != len(responses):
        raise ValidationError("duplicate concepts in post-test responses")
    state.vks_post = tuple(responses)
    state.summary = summary
    state.phase = Phase.DONE
    if state.flagged_for_rejection:
        state.phase = Phase.REJECTED
        state.rejection_reason = "tab-switch limit exceeded"
    return state


def reject(state: SessionState, reason: str) -> SessionState:
    if state.phase is not Phase.PRE_TEST:
        raise PhaseError("only pre-test sessions can be rejected directly")
    state.phase = Phase.REJECTED
    state.rejection_reason = reason
    return state


# ---------------------------------------------------------------- pre-test

ITEMS_PER_TOPIC = 10


@dataclass(frozen=True)
class PreTestItem:
    topic_id: str
    concept: str


@dataclass(frozen=True)
class PreTestBundle:
    study_topics: tuple[str, str]
    attention_topic: str
    items: tuple[PreTestItem, ...]

    @property
    def topics(self) -> tuple[str, str, str]:
        return (*self.study_topics, self.attention_topic)


@dataclass(frozen=True)
class PreTestResponse:
    topic_id: str
    concept: str
    level: int
    definition: str | None = None  # carried through to the session's VKS record


@dataclass(frozen=True)
class PreTestOutcome:
    assigned_topic: str | None
    rejected: bool
    reason: str | None
    knowledge_sums: dict


def start_pretest(
    topic_ids: Sequence[str],
    attention_topic: str,
    concepts: Mapping[str, Sequence[str]],
    seed: int,
) -> PreTestBundle:
    """Two study topics drawn at random plus the fixed attention topic,
    ten concepts each, question order shuffled under the seed."""
    pool = sorted(t for t in topic_ids if t != attention_topic)
    if len(pool) < 2:
        raise ConfigurationError("at least two study topics are required")
    rng = random.Random(seed)
    study = tuple(rng.sample(pool, 2))
    items: list[PreTestItem] = []
    for topic in (*study, attention_topic):
        topic_concepts = list(concepts.get(topic, ()))
        if len(topic_concepts) < ITEMS_PER_TOPIC:
            raise ConfigurationError(
                f"topic {topic!r} has {len(topic_concepts)} concepts; "
                f"{ITEMS_PER_TOPIC} required"
            )
        items.extend(PreTestItem(topic, c) for c in topic_concepts[:ITEMS_PER_TOPIC])
    rng.shuffle(items)
    return PreTestBundle(study_topics=study, attention_topic=attention_topic, items=tuple(items))


def assign_topic(
    bundle: PreTestBundle,
    responses: Sequence[PreTestResponse],
    seed: int,
) -> PreTestOutcome:
    """Reject when the attention topic scores strictly below both study
    topics; otherwise assign the study topic the participant knows least
    about (ties broken at random under the seed)."""
    expected = {(i.topic_id, i.concept) for i in bundle.items}
    got = {(r.topic_id, r.concept) for r in responses}
    if got != expected or len(responses) != len(bundle.items):
        raise ValidationError("responses must cover every pre-test item exactly once")

    sums = {t: 0 for t in bundle.topics}
    for r in responses:
        sums[r.topic_id] += vks_to_score(r.level)

    a, b = bundle.study_topics
    attention = sums[bundle.attention_topic]
    if attention < sums[a] and attention < sums[b]:
        return PreTestOutcome(
            assigned_topic=None,
            rejected=True,
            reason="attention topic scored below both study topics",
            knowledge_sums=sums,
        )
    if sums[a] < sums[b]:
        assigned = a
    elif sums[b] < sums[a]:
        assigned = b
    else:
        assigned = random.Random(seed).choice(sorted((a, b)))
    return PreTestOutcome(assigned_topic=assigned, rejected=False, reason=None, knowledge_sums=sums)


# ---------------------------------------------------------------- log io


class EventLogWriter:
    """Append-only JSONL writer; every event hits the disk before return."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("a", encoding="utf-8")

    def write(self, event: SessionEvent) -> None:
        self._fh.write(event.to_json() + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def read_log(path: str | Path) -> list[SessionEvent]:
    events = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(SessionEvent.from_json(line))
    return events


def replay(
    events: Iterable[SessionEvent],
    *,
    session_id: str,
    participant_id: str,
    strategy: StrategyKind,
    outline: TopicOutline,
    deps: SessionDeps,
    config: SessionConfig | None = None,
    scoring_config: ScoringConfig | None = None,
    search_started_ms: int = 0,
) -> SessionState:
    """Rebuild the search-phase state of a session from its event log.

    The result is field-for-field identical to the live state at the same
    point, which is what makes the append-only log the source of truth.
    """
    state = new_session(session_id, participant_id, strategy, config)
    begin_search(state, outline, scoring_config, ts_ms=search_started_ms)
    for event in events:
        handle_event(state, event, deps)
    return state
