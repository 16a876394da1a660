"""The four session conditions behind one strategy contract.

Control: plain search. Aqe: queries silently expanded with the topic name
and the currently active L1 subtopic, rotating on a fixed time schedule.
Curated: a static outline panel. Feedback: the outline panel with live
per-subtopic progress fills.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ConfigurationError, ConsistencyError, ValidationError
from .outlines import TopicOutline
from .scoring import ProgressState, fill_fraction


class StrategyKind(enum.Enum):
    CONTROL = "control"
    AQE = "aqe"
    CURATED = "curated"
    FEEDBACK = "feedback"

    @classmethod
    def parse(cls, value: str) -> "StrategyKind":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValidationError(
                f"unknown strategy {value!r}; expected one of "
                f"{[k.value for k in cls]}"
            ) from None

    @property
    def shows_outline(self) -> bool:
        return self in (StrategyKind.CURATED, StrategyKind.FEEDBACK)


@dataclass(frozen=True)
class SliceSchedule:
    """Equal time shares of the planned session, one per L1 subtopic."""

    planned_duration: float  # seconds
    l1_order: tuple[str, ...]

    def __post_init__(self):
        if not self.l1_order:
            raise ConfigurationError("slice schedule needs at least one L1 subtopic")
        if self.planned_duration <= 0:
            raise ConfigurationError("planned duration must be positive")

    @property
    def slice_length(self) -> float:
        return self.planned_duration / len(self.l1_order)

    @classmethod
    def for_outline(cls, outline: TopicOutline, planned_duration: float) -> "SliceSchedule":
        return cls(
            planned_duration=planned_duration,
            l1_order=tuple(s.id for s in outline.l1),
        )


def active_subtopic(schedule: SliceSchedule, elapsed: float) -> str:
    """L1 subtopic id active at ``elapsed`` seconds into the search phase.

    Sessions that overrun the plan stay clamped to the last subtopic.
    """
    if elapsed < 0:
        raise ValidationError("elapsed time cannot be negative")
    index = min(int(math.floor(elapsed / schedule.slice_length)), len(schedule.l1_order) - 1)
    return schedule.l1_order[index]


def rewrite_query(raw_query: str, topic_title: str, active_title: str, kind: StrategyKind) -> str:
    """The query actually submitted to the search backend.

    Only Aqe rewrites: the topic name and the active L1 subtopic title are
    appended, whitespace collapsed. Learners never see the rewritten form;
    stored query history keeps the raw query.
    """
    trimmed = raw_query.strip()
    if not trimmed:
        raise ValidationError("query is empty")
    if kind is not StrategyKind.AQE:
        return raw_query
    return " ".join(f"{trimmed} {topic_title} {active_title}".split())


@dataclass(frozen=True)
class ScaffoldEntry:
    sub_id: str
    title: str
    level: int
    fill_fraction: float


@dataclass(frozen=True)
class ScaffoldView:
    visible: bool
    entries: tuple[ScaffoldEntry, ...] = ()


def scaffold_view(kind: StrategyKind, outline: TopicOutline, progress: ProgressState) -> ScaffoldView:
    """Render model for the scaffold panel under a given strategy.

    Control/Aqe get an invisible view; Curated shows the full outline with
    zero fills; Feedback shows the live fill fractions. Entries always
    enumerate the whole outline in document order.
    """
    if not kind.shows_outline:
        return ScaffoldView(visible=False)
    outline_ids = set(outline.subtopic_ids())
    if kind is StrategyKind.FEEDBACK and outline_ids != set(progress.sums):
        raise ConsistencyError("progress state does not cover this outline")
    entries = tuple(
        ScaffoldEntry(
            sub_id=sub.id,
            title=sub.title,
            level=sub.level,
            fill_fraction=(
                fill_fraction(progress, sub.id) if kind is StrategyKind.FEEDBACK else 0.0
            ),
        )
        for sub in outline.walk()
    )
    return ScaffoldView(visible=True, entries=entries)
