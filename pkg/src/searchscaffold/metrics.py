"""Learning-gain and search-behavior metrics computed from session artifacts.

Knowledge is self-assessed on a four-level vocabulary scale per concept;
the scale maps onto 0/1/2 scores from which absolute gain, maximum
potential, and realized potential are derived. Behavior metrics are pure
functions of a session's event log and the topic outline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ValidationError
from .outlines import TopicOutline, outline_term_set
from .textnorm import tokenize

_LEVEL_SCORES = {1: 0, 2: 0, 3: 1, 4: 2}

#: A score of 2 is full knowledge of a concept.
MAX_CONCEPT_SCORE = 2


def vks_to_score(level: int) -> int:
    """Four self-assessment levels collapse to 0/0/1/2 knowledge scores."""
    try:
        return _LEVEL_SCORES[level]
    except (KeyError, TypeError):
        raise ValidationError(f"vocabulary level must be 1..4, got {level!r}") from None


@dataclass(frozen=True)
class VksRecord:
    """One concept's self-assessment; levels 3 and 4 claim a definition."""

    concept: str
    level: int
    definition: str | None = None

    def __post_init__(self):
        if self.level not in _LEVEL_SCORES:
            raise ValidationError(f"vocabulary level must be 1..4, got {self.level!r}")
        if not self.concept:
            raise ValidationError("concept is required")
        if self.level >= 3 and not self.definition:
            raise ValidationError(f"level {self.level} for {self.concept!r} requires a definition")
        if self.level < 3 and self.definition:
            raise ValidationError(f"level {self.level} for {self.concept!r} cannot carry a definition")

    @property
    def score(self) -> int:
        return _LEVEL_SCORES[self.level]


@dataclass(frozen=True)
class LearningReport:
    participant_id: str
    topic_id: str
    alg: float
    mlg: float
    rpl: float | None  # undefined when there was nothing left to learn


def learning_report(
    pre: Sequence[VksRecord],
    post: Sequence[VksRecord],
    participant_id: str = "",
    topic_id: str = "",
) -> LearningReport:
    """Mean positive per-concept gain (ALG), mean headroom (MLG), and
    their ratio (RPL); RPL is undefined when MLG is zero."""
    if not pre:
        raise ValidationError("at least one concept is required")
    pre_by = {r.concept: r for r in pre}
    post_by = {r.concept: r for r in post}
    if len(pre_by) != len(pre) or len(post_by) != len(post):
        raise ValidationError("duplicate concepts in a response list")
    if pre_by.keys() != post_by.keys():
        raise ValidationError("pre and post response concepts do not match")
    n = len(pre_by)
    alg = sum(max(0, post_by[c].score - pre_by[c].score) for c in pre_by) / n
    mlg = sum(MAX_CONCEPT_SCORE - pre_by[c].score for c in pre_by) / n
    rpl = alg / mlg if mlg > 0 else None
    return LearningReport(participant_id=participant_id, topic_id=topic_id, alg=alg, mlg=mlg, rpl=rpl)


def query_outline_fractions(
    queries: Sequence[str], outline: TopicOutline
) -> tuple[float, float]:
    """Pooled-set overlap between all query terms and the outline terms:
    (share of query terms that are outline terms, share of outline terms
    that were queried)."""
    q: set[str] = set()
    for query in queries:
        q.update(tokenize(query))
    t = outline_term_set(outline)
    if not q or not t:
        return (0.0, 0.0)
    overlap = len(q & t)
    return (overlap / len(q), overlap / len(t))


@dataclass(frozen=True)
class BehaviorReport:
    session_id: str
    query_count: int
    frac_query_terms_from_outline: float
    frac_outline_terms_queried: float
    mean_time_between_queries_s: float | None
    mean_gap_doc_close_to_next_open_s: float | None
    mean_doc_dwell_s: float | None
    unique_docs_viewed: int
    unique_snippets_viewed: int
    bookmark_count: int
    session_duration_s: float


def _mean(values: Sequence[float]) -> float | None:
    return sum(values) / len(values) if values else None


def behavior_report(events: Sequence, outline: TopicOutline) -> BehaviorReport:
    """Per-session behavior over one event log.

    Dwell per document is the summed open-to-close time; duration runs
    from the first query to the last document close. Documents left open
    are closed at the log's final timestamp.
    """
    session_id = events[0].session_id if events else ""
    queries: list[tuple[int, str]] = []
    snippet_docs: set[str] = set()
    bookmarks: list[str] = []
    hidden: set[str] = set()
    open_at: dict[str, int] = {}
    dwell: dict[str, float] = {}
    close_ts: list[int] = []
    gaps: list[float] = []
    last_close_ts: int | None = None
    end_ts = events[-1].ts_ms if events else 0

    for e in events:
        kind, p = e.kind, e.payload
        if kind == "QueryIssued":
            queries.append((e.ts_ms, p["raw"]))
        elif kind == "SnippetViewed":
            snippet_docs.add(p["doc_id"])
        elif kind == "DocumentOpened":
            doc = p["doc_id"]
            open_at[doc] = e.ts_ms
            if last_close_ts is not None:
                gaps.append((e.ts_ms - last_close_ts) / 1000.0)
                last_close_ts = None
        elif kind == "DocumentClosed":
            doc = p["doc_id"]
            if doc in open_at:
                dwell[doc] = dwell.get(doc, 0.0) + (e.ts_ms - open_at.pop(doc)) / 1000.0
                close_ts.append(e.ts_ms)
                last_close_ts = e.ts_ms
        elif kind == "Bookmarked":
            hidden.discard(p["doc_id"])
            if p["doc_id"] not in bookmarks:
                bookmarks.append(p["doc_id"])
        elif kind == "Hidden":
            if p["doc_id"] in bookmarks:
                bookmarks.remove(p["doc_id"])
            hidden.add(p["doc_id"])

    for doc, opened in open_at.items():  # defensive close at log end
        dwell[doc] = dwell.get(doc, 0.0) + (end_ts - opened) / 1000.0
        close_ts.append(end_ts)

    frac_from, frac_covered = query_outline_fractions([q for _, q in queries], outline)
    query_ts = [ts for ts, _ in queries]
    between = [
        (b - a) / 1000.0 for a, b in zip(query_ts, query_ts[1:])
    ]
    duration = 0.0
    if query_ts and close_ts:
        duration = max(0.0, (max(close_ts) - query_ts[0]) / 1000.0)

    return BehaviorReport(
        session_id=session_id,
        query_count=len(queries),
        frac_query_terms_from_outline=frac_from,
        frac_outline_terms_queried=frac_covered,
        mean_time_between_queries_s=_mean(between),
        mean_gap_doc_close_to_next_open_s=_mean(gaps),
        mean_doc_dwell_s=_mean(list(dwell.values())),
        unique_docs_viewed=len(dwell),
        unique_snippets_viewed=len(snippet_docs),
        bookmark_count=len(bookmarks),
        session_duration_s=duration,
    )


@dataclass(frozen=True)
class BucketStats:
    bucket: int
    query_count: int
    frac_query_terms_from_outline: float
    frac_outline_terms_queried: float
    mean_query_length: float


@dataclass(frozen=True)
class TimeBucketSeries:
    bucket_length_s: float
    buckets: tuple[BucketStats | None, ...]  # None marks a bucket with no queries


def time_bucketed(
    events: Sequence, outline: TopicOutline, bucket_length_s: float = 300.0
) -> TimeBucketSeries:
    """Outline-overlap fractions and mean query length per fixed-length
    block, anchored at the first query. Blocks without queries stay
    undefined rather than zero."""
    if bucket_length_s <= 0:
        raise ValidationError("bucket_length_s must be positive")
    queries = [(e.ts_ms, e.payload["raw"]) for e in events if e.kind == "QueryIssued"]
    if not queries:
        return TimeBucketSeries(bucket_length_s=bucket_length_s, buckets=())
    anchor = queries[0][0]
    bucket_ms = bucket_length_s * 1000.0
    by_bucket: dict[int, list[str]] = {}
    for ts, raw in queries:
        by_bucket.setdefault(int((ts - anchor) // bucket_ms), []).append(raw)
    out: list[BucketStats | None] = []
    for i in range(max(by_bucket) + 1):
        bucket_queries = by_bucket.get(i)
        if not bucket_queries:
            out.append(None)
            continue
        frac_from, frac_covered = query_outline_fractions(bucket_queries, outline)
        mean_len = sum(len(tokenize(q)) for q in bucket_queries) / len(bucket_queries)
        out.append(
            BucketStats(
                bucket=i,
                query_count=len(bucket_queries),
                frac_query_terms_from_outline=frac_from,
                frac_outline_terms_queried=frac_covered,
                mean_query_length=mean_len,
            )
        )
    return TimeBucketSeries(bucket_length_s=bucket_length_s, buckets=tuple(out))


# ---------------------------------------------------------------- cohorts


@dataclass(frozen=True)
class SessionRecord:
    """One completed session, ready for export and cohort aggregation."""

    session_id: str
    participant_id: str
    topic_id: str
    strategy: str
    behavior: BehaviorReport
    learning: LearningReport | None
    series: TimeBucketSeries | None = None


_NUMERIC_FIELDS = (
    "query_count",
    "frac_query_terms_from_outline",
    "frac_outline_terms_queried",
    "mean_time_between_queries_s",
    "mean_gap_doc_close_to_next_open_s",
    "mean_doc_dwell_s",
    "unique_docs_viewed",
    "unique_snippets_viewed",
    "bookmark_count",
    "session_duration_s",
)


def _mean_sd(values: Sequence[float]) -> tuple[float | None, float | None]:
    if not values:
        return (None, None)
    m = sum(values) / len(values)
    if len(values) == 1:
        return (m, 0.0)  # single-session cells report zero spread
    var = sum((v - m) ** 2 for v in values) / (len(values) - 1)
    return (m, math.sqrt(var))


def cohort_summary(records: Sequence[SessionRecord]) -> list[dict]:
    """Per (strategy, topic) cell: n, mean and sample sd of every metric,
    and how many undefined RPL values were left out of the RPL mean."""
    cells: dict[tuple[str, str], list[SessionRecord]] = {}
    for r in records:
        cells.setdefault((r.strategy, r.topic_id), []).append(r)
    rows = []
    for (strategy, topic_id), group in sorted(cells.items()):
        row: dict = {"strategy": strategy, "topic_id": topic_id, "n": len(group)}
        rpls = [r.learning.rpl for r in group if r.learning and r.learning.rpl is not None]
        row["rpl_excluded"] = sum(1 for r in group if r.learning and r.learning.rpl is None)
        for name, values in (
            ("alg", [r.learning.alg for r in group if r.learning]),
            ("mlg", [r.learning.mlg for r in group if r.learning]),
            ("rpl", rpls),
        ):
            row[f"{name}_mean"], row[f"{name}_sd"] = _mean_sd(values)
        for field_name in _NUMERIC_FIELDS:
            values = [
                v for r in group if (v := getattr(r.behavior, field_name)) is not None
            ]
            row[f"{field_name}_mean"], row[f"{field_name}_sd"] = _mean_sd(values)
        rows.append(row)
    return rows


# ---------------------------------------------------------------- export

CSV_COLUMNS = ["strategy", "topic_id", "n", "rpl_excluded"]
for _name in ("alg", "mlg", "rpl", *_NUMERIC_FIELDS):
    CSV_COLUMNS += [f"{_name}_mean", f"{_name}_sd"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def render_cohort_csv(rows: Sequence[dict]) -> str:
    """Fixed column order, six-decimal floats, newline endings: the same
    inputs always produce the same bytes."""
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(c)) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def session_record_json(record: SessionRecord) -> str:
    b, l = record.behavior, record.learning
    out: dict = {
        "session_id": record.session_id,
        "participant_id": record.participant_id,
        "topic_id": record.topic_id,
        "strategy": record.strategy,
        "query_count": b.query_count,
        "frac_query_terms_from_outline": b.frac_query_terms_from_outline,
        "frac_outline_terms_queried": b.frac_outline_terms_queried,
        "mean_time_between_queries_s": b.mean_time_between_queries_s,
        "mean_gap_doc_close_to_next_open_s": b.mean_gap_doc_close_to_next_open_s,
        "mean_doc_dwell_s": b.mean_doc_dwell_s,
        "unique_docs_viewed": b.unique_docs_viewed,
        "unique_snippets_viewed": b.unique_snippets_viewed,
        "bookmark_count": b.bookmark_count,
        "session_duration_s": b.session_duration_s,
        "alg": l.alg if l else None,
        "mlg": l.mlg if l else None,
        "rpl": l.rpl if l else None,
    }
    if record.series is not None:
        out["buckets"] = [
            None
            if s is None
            else {
                "bucket": s.bucket,
                "query_count": s.query_count,
                "frac_query_terms_from_outline": s.frac_query_terms_from_outline,
                "frac_outline_terms_queried": s.frac_outline_terms_queried,
                "mean_query_length": s.mean_query_length,
            }
            for s in record.series.buckets
        ]
    return json.dumps(out, separators=(",", ":"), ensure_ascii=False)


def write_exports(records: Iterable[SessionRecord], out_dir: str | Path) -> tuple[Path, Path]:
    """sessions.jsonl (one record per line, ordered by session id) and
    summary.csv (cohort table); both byte-stable."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ordered = sorted(records, key=lambda r: r.session_id)
    sessions_path = out / "sessions.jsonl"
    sessions_path.write_text(
        "".join(session_record_json(r) + "\n" for r in ordered), encoding="utf-8"
    )
    summary_path = out / "summary.csv"
    summary_path.write_text(render_cohort_csv(cohort_summary(ordered)), encoding="utf-8")
    return sessions_path, summary_path
