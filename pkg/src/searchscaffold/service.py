"""HTTP surface for the study platform.

Session lifecycle, search, event ingestion, scaffold state, and reports,
all backed by the session runtime. Every mutation of one session is
serialized behind that session's lock; the participant registry is a flat
file in the log directory so a restart refuses duplicate enrollment.
"""

from __future__ import annotations

import json
import os
import random
import secrets
import threading
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .agents import load_concepts_dir
from .config import ServiceConfig
from .errors import (
    BackendError,
    BodyUnavailableError,
    ConfigurationError,
    EventOrderingError,
    PhaseError,
    ScaffoldError,
    ValidationError,
)
from .metrics import (
    SessionRecord,
    VksRecord,
    behavior_report,
    learning_report,
    session_record_json,
    time_bucketed,
)
from .outlines import TopicOutline
from .reporting import load_outline_dir
from .runtime import ClientEvent, SessionRuntime
from .scaffold import ScaffoldView, StrategyKind
from .search import Blacklist, LocalCorpusAdapter, RemoteSearchAdapter, Serp
from .session import (
    Phase,
    PreTestBundle,
    PreTestResponse,
    assign_topic,
    reject,
    start_pretest,
)

RANDOM_ASSIGN = "random-assign"

API_KEY_ENV_VAR = "SEARCH_API_KEY"


class UnknownSessionError(ScaffoldError):
    """Request addressed a session this process does not hold."""


# ------------------------------------------------------------ wire schemas


class CreateSessionRequest(BaseModel):
    participant_id: str = Field(min_length=1)
    strategy: str = RANDOM_ASSIGN


class PreTestItemResponse(BaseModel):
    topic_id: str
    concept: str
    level: int
    definition: str | None = None


class PreTestRequest(BaseModel):
    responses: list[PreTestItemResponse]


class QueryRequest(BaseModel):
    query: str | None = None
    page: int | None = None


class EventItem(BaseModel):
    client_seq: int
    kind: str
    payload: dict = Field(default_factory=dict)
    client_ts_ms: int | None = None


class EventBatch(BaseModel):
    events: list[EventItem]


class PostTestItemResponse(BaseModel):
    concept: str
    level: int
    definition: str | None = None


class PostTestRequest(BaseModel):
    responses: list[PostTestItemResponse]
    summary: str


# -------------------------------------------------------------- app state


@dataclass
class _LiveSession:
    runtime: SessionRuntime
    bundle: PreTestBundle
    pretest_seed: int
    lock: threading.Lock = field(default_factory=threading.Lock)


class _Registry:
    """participant -> session mapping, persisted as one JSON file."""

    def __init__(self, path):
        self.path = path
        self.lock = threading.Lock()
        self._map: dict[str, str] = {}
        if path.exists():
            self._map = json.loads(path.read_text(encoding="utf-8"))

    def enroll(self, participant_id: str, session_id: str) -> None:
        with self.lock:
            if participant_id in self._map:
                raise PhaseError(f"participant {participant_id!r} is already enrolled")
            self._map[participant_id] = session_id
            self.path.write_text(
                json.dumps(self._map, indent=0, sort_keys=True), encoding="utf-8"
            )


def _serp_payload(serp: Serp) -> dict:
    return {
        "query": serp.query_as_submitted,
        "page": serp.page,
        "results": [
            {
                "doc_id": r.doc_id,
                "title": r.title,
                "snippet": r.snippet,
                "host": r.host,
                "rank": r.rank,
            }
            for r in serp.results
        ],
    }


def _scaffold_payload(view: ScaffoldView) -> dict:
    return {
        "visible": view.visible,
        "entries": [
            {
                "sub_id": e.sub_id,
                "title": e.title,
                "level": e.level,
                "fill_fraction": e.fill_fraction,
            }
            for e in view.entries
        ],
    }


def _timer_payload(runtime: SessionRuntime) -> dict:
    return {
        "may_finish": runtime.may_finish(),
        "remaining_seconds": runtime.remaining_seconds(),
    }


def _vks_records(items) -> list[VksRecord]:
    return [VksRecord(i.concept, i.level, i.definition) for i in items]


def create_app(config: ServiceConfig) -> FastAPI:
    outlines: dict[str, TopicOutline] = load_outline_dir(config.outlines_dir)
    concepts = load_concepts_dir(config.concepts_dir)
    blacklist = Blacklist.from_file(config.blacklist_path)
    if config.corpus_dir is not None:
        backend = LocalCorpusAdapter.from_dir(config.corpus_dir)
    else:
        backend = RemoteSearchAdapter(
            config.remote.endpoint,
            api_key=os.environ.get(API_KEY_ENV_VAR),
            timeout=config.remote.timeout_s,
        )
    if config.attention_topic not in concepts:
        raise ConfigurationError(
            f"attention topic {config.attention_topic!r} has no concepts file"
        )
    study_topics = sorted(set(outlines) & set(concepts) - {config.attention_topic})
    if len(study_topics) < 2:
        raise ConfigurationError("need at least two topics with both outline and concepts")

    app = FastAPI(title="searchscaffold", docs_url=None, redoc_url=None)
    # the browser client may be served from a different origin; the session
    # id is the credential, so open CORS adds no surface beyond the LAN bind
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, _LiveSession] = {}
    registry = _Registry(config.log_dir / "participants.json")
    assign_rng = random.Random(config.seed)
    assign_lock = threading.Lock()

    # ----------------------------------------------------- error mapping

    def _error(status: int, exc: Exception, **extra) -> JSONResponse:
        return JSONResponse(status_code=status, content={"detail": str(exc), **extra})

    @app.exception_handler(PhaseError)
    async def _phase_error(_req: Request, exc: PhaseError):
        extra = {}
        if exc.remaining_seconds is not None:
            extra["remaining_seconds"] = exc.remaining_seconds
        return _error(409, exc, **extra)

    @app.exception_handler(EventOrderingError)
    async def _ordering_error(_req: Request, exc: EventOrderingError):
        return _error(409, exc)

    @app.exception_handler(BodyUnavailableError)
    async def _body_error(_req: Request, exc: BodyUnavailableError):
        return _error(404, exc)

    @app.exception_handler(BackendError)
    async def _backend_error(_req: Request, exc: BackendError):
        return _error(503, exc, retryable=exc.retryable)

    @app.exception_handler(ValidationError)
    async def _validation_error(_req: Request, exc: ValidationError):
        return _error(422, exc)

    @app.exception_handler(ScaffoldError)
    async def _fallback_error(_req: Request, exc: ScaffoldError):
        return _error(500, exc)

    def _get(session_id: str) -> _LiveSession:
        live = sessions.get(session_id)
        if live is None:
            raise UnknownSessionError("unknown session")
        return live

    @app.exception_handler(UnknownSessionError)
    async def _unknown_session(_req: Request, exc: UnknownSessionError):
        return _error(404, exc)

    # -------------------------------------------------------- lifecycle

    @app.post("/sessions")
    def create_session(body: CreateSessionRequest):
        if body.strategy == RANDOM_ASSIGN:
            with assign_lock:
                strategy = assign_rng.choice(list(StrategyKind))
                pretest_seed = assign_rng.randrange(2**31)
        else:
            strategy = StrategyKind.parse(body.strategy)
            with assign_lock:
                pretest_seed = assign_rng.randrange(2**31)
        bundle = start_pretest(
            study_topics, config.attention_topic, concepts, seed=pretest_seed
        )
        session_id = secrets.token_urlsafe(12)
        runtime = SessionRuntime(
            session_id,
            body.participant_id,
            strategy,
            backend,
            blacklist,
            config=config.session,
            scoring_config=config.scoring,
            log_dir=config.log_dir,
        )
        registry.enroll(body.participant_id, session_id)
        sessions[session_id] = _LiveSession(runtime, bundle, pretest_seed)
        return {
            "session_id": session_id,
            "phase": runtime.state.phase.value,
            "items": [{"topic_id": i.topic_id, "concept": i.concept} for i in bundle.items],
        }

    @app.post("/sessions/{session_id}/pretest")
    def submit_pretest(session_id: str, body: PreTestRequest):
        live = _get(session_id)
        with live.lock:
            responses = [
                PreTestResponse(i.topic_id, i.concept, i.level, i.definition)
                for i in body.responses
            ]
            for r in responses:  # level/definition contract enforced up front
                VksRecord(r.concept, r.level, r.definition)
            outcome = assign_topic(live.bundle, responses, seed=live.pretest_seed)
            state = live.runtime.state
            if outcome.rejected:
                reject(state, outcome.reason)
                return {
                    "rejected": True,
                    "reason": outcome.reason,
                    "phase": state.phase.value,
                }
            outline = outlines[outcome.assigned_topic]
            state.vks_pre = tuple(
                VksRecord(r.concept, r.level, r.definition)
                for r in responses
                if r.topic_id == outcome.assigned_topic
            )
            live.runtime.begin_search(outline)
            return {
                "rejected": False,
                "phase": state.phase.value,
                "topic": {"topic_id": outline.topic_id, "title": outline.title},
                "scaffold": _scaffold_payload(live.runtime.scaffold()),
                **_timer_payload(live.runtime),
            }

    # ------------------------------------------------------------ search

    @app.post("/sessions/{session_id}/query")
    def run_query(session_id: str, body: QueryRequest):
        live = _get(session_id)
        with live.lock:
            if body.query is not None:
                serp, view = live.runtime.issue_query(body.query, page=body.page or 1)
            elif body.page is not None:
                serp = live.runtime.change_page(body.page)
                view = live.runtime.scaffold()
            else:
                raise ValidationError("provide a query to search or a page to turn")
            return {
                "serp": _serp_payload(serp),
                "scaffold": _scaffold_payload(view),
                **_timer_payload(live.runtime),
            }

    @app.post("/sessions/{session_id}/events")
    def ingest_events(session_id: str, body: EventBatch):
        live = _get(session_id)
        with live.lock:
            batch = [
                ClientEvent(e.client_seq, e.kind, dict(e.payload), e.client_ts_ms)
                for e in body.events
            ]
            result = live.runtime.ingest_batch(batch)
            return {
                "accepted": result.accepted,
                "duplicates": result.duplicates,
                "last_client_seq": result.last_client_seq,
            }

    @app.get("/sessions/{session_id}/scaffold")
    def get_scaffold(session_id: str):
        live = _get(session_id)
        with live.lock:
            return {
                "phase": live.runtime.state.phase.value,
                "scaffold": _scaffold_payload(live.runtime.scaffold()),
                **_timer_payload(live.runtime),
            }

    @app.get("/sessions/{session_id}/document")
    def get_document(session_id: str, doc_id: str):
        _get(session_id)
        return {"doc_id": doc_id, "text": backend.readable_body(doc_id)}

    # --------------------------------------------------------- wrap-up

    @app.post("/sessions/{session_id}/posttest")
    def submit_posttest(session_id: str, body: PostTestRequest):
        live = _get(session_id)
        with live.lock:
            if live.runtime.state.phase is Phase.SEARCH:
                live.runtime.finish()
            state = live.runtime.submit_posttest(_vks_records(body.responses), body.summary)
            out = {"phase": state.phase.value}
            if state.rejection_reason:
                out["reason"] = state.rejection_reason
            return out

    @app.get("/sessions/{session_id}/report")
    def get_report(session_id: str):
        live = _get(session_id)
        with live.lock:
            state = live.runtime.state
            if state.phase not in (Phase.DONE, Phase.REJECTED):
                raise PhaseError(f"no report before completion (phase {state.phase.value})")
            if state.topic_id is None:  # rejected at pretest: nothing was recorded
                raise PhaseError("no report for a session rejected before search")
            outline = outlines[state.topic_id]
            learning = None
            if state.vks_pre and state.vks_post:
                learning = learning_report(
                    list(state.vks_pre),
                    list(state.vks_post),
                    participant_id=state.participant_id,
                    topic_id=state.topic_id,
                )
            record = SessionRecord(
                session_id=state.session_id,
                participant_id=state.participant_id,
                topic_id=state.topic_id,
                strategy=state.strategy.value,
                behavior=behavior_report(state.event_log, outline),
                learning=learning,
                series=time_bucketed(state.event_log, outline),
            )
            return json.loads(session_record_json(record))

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "sessions": len(sessions),
            "topics": len(study_topics),
        }

    return app
