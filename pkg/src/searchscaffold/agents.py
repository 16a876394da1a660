"""Deterministic simulated learners that drive complete sessions.

Three behavioral profiles with opposite habits: FreeForm queries from
whatever vocabulary the result snippets expose, OutlineFollower leans on
the outline's own terms, GaugeChaser skims — many snippets, short dwells —
chasing unfilled progress gauges where the interface shows them. The
profiles exist to exercise the whole pipeline and to pin directional
metric contrasts in tests; they do not model human learning.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ConfigurationError, ValidationError
from .metrics import VksRecord
from .outlines import TopicOutline, outline_term_set
from .runtime import ClientEvent, ManualClock, SessionRuntime
from .scaffold import StrategyKind
from .scoring import ScoringConfig
from .search import Blacklist, SearchAdapter
from .session import SessionConfig, SessionState
from .textnorm import tokenize


class AgentKind(enum.Enum):
    FREE_FORM = "freeform"
    OUTLINE_FOLLOWER = "outlinefollower"
    GAUGE_CHASER = "gaugechaser"

    @classmethod
    def parse(cls, value: str) -> "AgentKind":
        try:
            return cls(value.strip().lower().replace("-", "").replace("_", ""))
        except ValueError:
            raise ValidationError(
                f"unknown agent profile {value!r}; expected one of "
                f"{[k.value for k in cls]}"
            ) from None


@dataclass(frozen=True)
class AgentProfile:
    """Behavioral knobs; the seed fully determines the event stream."""

    kind: AgentKind
    seed: int
    query_rate: float = 3.0  # mean queries per five minutes
    dwell_mean: float = 45.0  # seconds on an opened document
    session_length: float = 1860.0  # simulated search time, seconds

    def __post_init__(self):
        if self.query_rate <= 0 or self.dwell_mean <= 0 or self.session_length <= 0:
            raise ConfigurationError("profile rates and durations must be positive")


@dataclass(frozen=True)
class AgentRun:
    session_id: str
    state: SessionState
    vks_pre: tuple[VksRecord, ...]
    vks_post: tuple[VksRecord, ...]


def _ordered_unique(tokens) -> list[str]:
    # insertion-ordered dedup; set iteration would vary across processes
    return list(dict.fromkeys(tokens))


# how far each profile deviates from the shared knobs
_DWELL_FACTOR = {
    AgentKind.FREE_FORM: 1.0,
    AgentKind.OUTLINE_FOLLOWER: 1.0,
    AgentKind.GAUGE_CHASER: 0.25,
}
_SNIPPETS_PER_SERP = {
    AgentKind.FREE_FORM: 3,
    AgentKind.OUTLINE_FOLLOWER: 3,
    AgentKind.GAUGE_CHASER: 10,
}
# pre-test familiarity and post-test gain weights, per profile
_PRE_LEVEL_WEIGHTS = {
    AgentKind.FREE_FORM: (5, 3, 1, 1),
    AgentKind.OUTLINE_FOLLOWER: (4, 3, 2, 1),
    AgentKind.GAUGE_CHASER: (5, 3, 1, 1),
}
_GAIN_WEIGHTS = {
    AgentKind.FREE_FORM: (4, 4, 2),
    AgentKind.OUTLINE_FOLLOWER: (2, 4, 4),
    AgentKind.GAUGE_CHASER: (3, 4, 3),
}


class _Learner:
    """One scripted session; all randomness flows from a single rng."""

    def __init__(
        self,
        profile: AgentProfile,
        outline: TopicOutline,
        strategy: StrategyKind,
        runtime: SessionRuntime,
        clock: ManualClock,
    ):
        self.profile = profile
        self.outline = outline
        self.strategy = strategy
        self.rt = runtime
        self.clock = clock
        self.rng = random.Random(
            f"{profile.kind.value}:{profile.seed}:{outline.topic_id}:{strategy.value}"
        )
        self.outline_terms = outline_term_set(outline)
        self.snippet_vocab: list[str] = []
        self.opened: list[str] = []
        self.client_seq = 0
        self.subtopic_cursor = 0
        self.subtopics = list(outline.walk())

    # ----------------------------------------------------------- plumbing

    def send(self, kind: str, payload: dict, timed: bool = False) -> None:
        self.client_seq += 1
        ts = self.rt.now_ms() if timed else None
        self.rt.ingest_batch([ClientEvent(self.client_seq, kind, payload, client_ts_ms=ts)])

    def pause(self, seconds: float) -> None:
        self.clock.advance(max(1, int(seconds * 1000)))

    def harvest(self, serp) -> None:
        for result in serp.results:
            fresh = [
                t
                for t in tokenize(f"{result.title} {result.snippet}")
                if t not in self.outline_terms
            ]
            self.snippet_vocab = _ordered_unique(self.snippet_vocab + fresh)

    # ------------------------------------------------------------ queries

    def next_query(self) -> str:
        kind = self.profile.kind
        if kind is AgentKind.FREE_FORM:
            if not self.snippet_vocab:
                return self.outline.title.lower()  # the task prompt is all it has
            k = min(len(self.snippet_vocab), self.rng.randint(2, 4))
            return " ".join(self.rng.sample(self.snippet_vocab, k))
        sub = self.pick_subtopic()
        terms = _ordered_unique(tokenize(sub.title)) or [self.outline.title.lower()]
        extras: list[str] = []
        if kind is AgentKind.OUTLINE_FOLLOWER and self.snippet_vocab and self.rng.random() < 0.5:
            extras = self.rng.sample(self.snippet_vocab, 1)
        if len(extras) > len(terms):  # keep the outline share at >= 50%
            extras = extras[: len(terms)]
        return " ".join(terms + extras)

    def pick_subtopic(self):
        if self.profile.kind is AgentKind.GAUGE_CHASER:
            view = self.rt.scaffold()
            if view.visible:  # chase the emptiest gauge
                emptiest = min(view.entries, key=lambda e: (e.fill_fraction, e.sub_id))
                for sub in self.subtopics:
                    if sub.id == emptiest.sub_id:
                        return sub
        sub = self.subtopics[self.subtopic_cursor % len(self.subtopics)]
        self.subtopic_cursor += 1
        return sub

    # -------------------------------------------------------------- cycle

    def read_serp(self, serp) -> None:
        self.harvest(serp)
        budget = _SNIPPETS_PER_SERP[self.profile.kind]
        for result in serp.results[:budget]:
            self.pause(self.rng.uniform(0.3, 0.9))
            self.send("SnippetViewed", {"doc_id": result.doc_id})

    def open_some(self, serp) -> None:
        unseen = [r.doc_id for r in serp.results if r.doc_id not in self.opened]
        for doc_id in unseen[:2]:
            self.pause(self.rng.uniform(0.5, 1.5))
            self.send("DocumentOpened", {"doc_id": doc_id}, timed=True)
            self.opened.append(doc_id)
            dwell = (
                self.profile.dwell_mean
                * _DWELL_FACTOR[self.profile.kind]
                * self.rng.uniform(0.7, 1.3)
            )
            self.pause(dwell)
            if self.rng.random() < 0.3:
                self.send("Bookmarked", {"doc_id": doc_id})
                self.pause(0.4)
            self.send("DocumentClosed", {"doc_id": doc_id}, timed=True)

    def run_search_phase(self) -> None:
        gap_s = 300.0 / self.profile.query_rate
        while self.rt.now_ms() < self.profile.session_length * 1000:
            serp, _ = self.rt.issue_query(self.next_query())
            self.read_serp(serp)
            self.open_some(serp)
            if self.profile.kind is AgentKind.GAUGE_CHASER and len(serp.results) >= 10:
                self.pause(self.rng.uniform(0.5, 1.0))
                second = self.rt.change_page(2)
                self.read_serp(second)
            self.pause(gap_s * self.rng.uniform(0.6, 1.4))
        if not self.rt.may_finish():
            self.pause(self.rt.remaining_seconds() + 1.0)


def _definition(concept: str) -> str:
    return f"working definition of {concept}"


def synthetic_vks(
    profile: AgentProfile, concepts: Sequence[str], rng: random.Random
) -> tuple[tuple[VksRecord, ...], tuple[VksRecord, ...]]:
    """Pre/post questionnaires drawn from fixed per-profile distributions."""
    pre, post = [], []
    for concept in concepts:
        level = rng.choices((1, 2, 3, 4), weights=_PRE_LEVEL_WEIGHTS[profile.kind])[0]
        gain = rng.choices((0, 1, 2), weights=_GAIN_WEIGHTS[profile.kind])[0]
        after = min(4, level + gain)
        pre.append(VksRecord(concept, level, _definition(concept) if level >= 3 else None))
        post.append(VksRecord(concept, after, _definition(concept) if after >= 3 else None))
    return tuple(pre), tuple(post)


def _summary_text(outline: TopicOutline, profile: AgentProfile) -> str:
    subjects = ", ".join(s.title.lower() for s in outline.l1)
    base = (
        f"During this session I looked into {outline.title.lower()} and read about "
        f"{subjects}. "
    )
    filler = (
        "I compared several documents, kept the clearest ones bookmarked, and "
        "noted how the main ideas connect to each other. "
    )
    text = base
    while len(text.split()) < 110:
        text += filler
    return text.strip()


def run_agent(
    profile: AgentProfile,
    outline: TopicOutline,
    strategy: StrategyKind,
    backend: SearchAdapter,
    blacklist: Blacklist,
    concepts: Sequence[str],
    *,
    log_dir: str | Path | None = None,
    session_config: SessionConfig | None = None,
    scoring_config: ScoringConfig | None = None,
) -> AgentRun:
    """Drive one full session through the public runtime API.

    Identical arguments produce a byte-identical event log; simulated time
    runs on a manual clock, so a thirty-minute session takes milliseconds.
    """
    if len(concepts) < 1:
        raise ConfigurationError("at least one concept is required for the questionnaires")
    session_id = (
        f"sim-{outline.topic_id}-{strategy.value}-{profile.kind.value}-{profile.seed:04d}"
    )
    clock = ManualClock()
    runtime = SessionRuntime(
        session_id,
        f"agent-{profile.kind.value}-{profile.seed:04d}",
        strategy,
        backend,
        blacklist,
        config=session_config,
        scoring_config=scoring_config,
        clock=clock,
        log_dir=log_dir,
    )
    learner = _Learner(profile, outline, strategy, runtime, clock)
    vks_pre, vks_post = synthetic_vks(profile, concepts, learner.rng)
    runtime.state.vks_pre = vks_pre
    runtime.begin_search(outline)
    learner.run_search_phase()
    runtime.finish()
    runtime.submit_posttest(list(vks_post), _summary_text(outline, profile))
    return AgentRun(
        session_id=session_id,
        state=runtime.state,
        vks_pre=vks_pre,
        vks_post=vks_post,
    )


def load_concepts(path: str | Path) -> tuple[str, list[str]]:
    """One concepts file: {topic_id, concepts: [ten strings]}."""
    import yaml

    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict) or "topic_id" not in raw or "concepts" not in raw:
        raise ValidationError(f"{path}: expected a mapping with topic_id and concepts")
    concepts = [str(c) for c in raw["concepts"]]
    if not concepts:
        raise ValidationError(f"{path}: concepts list is empty")
    return str(raw["topic_id"]), concepts


def load_concepts_dir(concepts_dir: str | Path) -> Mapping[str, list[str]]:
    out: dict[str, list[str]] = {}
    for path in sorted(Path(concepts_dir).glob("*.yaml")):
        topic_id, concepts = load_concepts(path)
        if topic_id in out:
            raise ValidationError(f"duplicate concepts for topic {topic_id!r} ({path})")
        out[topic_id] = concepts
    if not out:
        raise ValidationError(f"no concepts files in {concepts_dir}")
    return out
