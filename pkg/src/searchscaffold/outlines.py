"""Hierarchical topical outlines: the content source for every scaffold.

An outline is a two-level hierarchy of subtopics (L1 with nested L2),
each carrying the reference section text it was derived from. Outlines
are read from YAML documents (grammar in ``docs/api.md``) and cleaned on
parse: headings deeper than level 2 and generic boilerplate headings are
dropped, source order is preserved.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import OutlineParseError, ValidationError
from .textnorm import term_set

#: Headings that appear across encyclopedia articles without carrying
#: topical content; removed during parsing. Override via ``generic_headings``.
DEFAULT_GENERIC_HEADINGS = frozenset(
    {"references", "see also", "external links", "notes", "bibliography", "further reading"}
)

_SLUG_RE = re.compile(r"[^a-z0-9]+")


def _slug(title: str) -> str:
    return _SLUG_RE.sub("-", title.lower()).strip("-")


@dataclass(frozen=True)
class Subtopic:
    """One outline node; level 2 nodes never have children."""

    id: str
    level: int
    title: str
    children: tuple["Subtopic", ...] = ()
    reference_text: str = ""
    reference_terms: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.level not in (1, 2):
            raise ValidationError(f"subtopic level must be 1 or 2, got {self.level}")
        if self.level == 2 and self.children:
            raise ValidationError(f"level-2 subtopic {self.title!r} cannot have children")


@dataclass(frozen=True)
class TopicOutline:
    """Ordered L1/L2 subtopic hierarchy for one learning topic."""

    topic_id: str
    title: str
    l1: tuple[Subtopic, ...]

    @property
    def total_l2(self) -> int:
        return sum(len(s.children) for s in self.l1)

    def walk(self):
        """All subtopics in document order (each L1 followed by its L2s)."""
        for top in self.l1:
            yield top
            yield from top.children

    def subtopic_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.walk())

    def get(self, sub_id: str) -> Subtopic:
        for sub in self.walk():
            if sub.id == sub_id:
                return sub
        raise KeyError(sub_id)


def _make_subtopic(entry: dict, level: int, sub_id: str) -> Subtopic:
    text = entry.get("text") or ""
    return Subtopic(
        id=sub_id,
        level=level,
        title=entry["title"],
        reference_text=text,
        reference_terms=term_set(text),
    )


def parse_outline(
    source: str,
    generic_headings: frozenset[str] = DEFAULT_GENERIC_HEADINGS,
) -> TopicOutline:
    """Parse an outline document, keeping only cleaned L1/L2 headings.

    Headings with level > 2 are silently dropped, as are headings whose
    title is in ``generic_headings`` (and any children of a dropped L1).
    Raises OutlineParseError for malformed documents and ValidationError
    for structurally invalid ones.
    """
    try:
        data = yaml.safe_load(source)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise OutlineParseError(
            f"malformed outline document: {exc.problem}",
            line=None if mark is None else mark.line + 1,
            column=None if mark is None else mark.column + 1,
        ) from exc
    except yaml.YAMLError as exc:
        raise OutlineParseError(f"malformed outline document: {exc}") from exc

    if not isinstance(data, dict):
        raise OutlineParseError("outline document root must be a mapping")
    for key in ("topic_id", "title"):
        if not isinstance(data.get(key), str) or not data[key].strip():
            raise ValidationError(f"outline field {key!r} must be a non-empty string")
    headings = data.get("headings", [])
    if headings is None:
        headings = []
    if not isinstance(headings, list):
        raise OutlineParseError("'headings' must be a list")

    generic = {g.strip().lower() for g in generic_headings}
    l1: list[Subtopic] = []
    children: dict[str, list[Subtopic]] = {}
    seen_ids: set[str] = set()
    current_l1: str | None = None  # title of the last retained or dropped L1
    current_kept = False

    for pos, entry in enumerate(headings):
        if not isinstance(entry, dict):
            raise OutlineParseError(f"heading #{pos + 1} must be a mapping")
        title = entry.get("title")
        if not isinstance(title, str) or not title.strip():
            raise ValidationError(f"heading #{pos + 1} has an empty title")
        level = entry.get("level")
        if not isinstance(level, int) or level < 1:
            raise ValidationError(f"heading {title!r} has invalid level {level!r}")
        if level > 2:
            continue  # cleaning: outline depth is capped at two levels

        is_generic = title.strip().lower() in generic
        if level == 1:
            current_l1 = title
            current_kept = not is_generic
            if not current_kept:
                continue
            sub_id = _slug(title)
            if sub_id in seen_ids:
                raise ValidationError(f"duplicate L1 heading {title!r}")
            seen_ids.add(sub_id)
            sub = _make_subtopic(entry, 1, sub_id)
            l1.append(sub)
            children[sub_id] = []
        else:
            parent = entry.get("parent") or ""
            if current_l1 is None or parent != current_l1:
                raise ValidationError(
                    f"L2 heading {title!r} names parent {parent!r}, "
                    f"but follows {current_l1!r}"
                )
            if not current_kept or is_generic:
                continue  # parent was cleaned away, or the L2 itself is generic
            parent_id = _slug(parent)
            sub_id = f"{parent_id}.{_slug(title)}"
            if sub_id in seen_ids:
                raise ValidationError(f"duplicate L2 heading {title!r} under {parent!r}")
            seen_ids.add(sub_id)
            children[parent_id].append(_make_subtopic(entry, 2, sub_id))

    l1_final = tuple(
        Subtopic(
            id=s.id,
            level=1,
            title=s.title,
            children=tuple(children[s.id]),
            reference_text=s.reference_text,
            reference_terms=s.reference_terms,
        )
        for s in l1
    )
    return TopicOutline(topic_id=data["topic_id"], title=data["title"], l1=l1_final)


def load_outline(path: str | Path, **kwargs) -> TopicOutline:
    return parse_outline(Path(path).read_text("utf-8"), **kwargs)


def serialize_outline(outline: TopicOutline) -> str:
    """Outline back to its document form; re-parsing yields an equal outline."""
    headings = []
    for sub in outline.walk():
        parent = ""
        if sub.level == 2:
            parent = next(t.title for t in outline.l1 if sub in t.children)
        headings.append(
            {"title": sub.title, "level": sub.level, "parent": parent, "text": sub.reference_text}
        )
    doc = {"topic_id": outline.topic_id, "title": outline.title, "headings": headings}
    return yaml.safe_dump(doc, sort_keys=False, allow_unicode=True)


def outline_term_set(outline: TopicOutline) -> frozenset[str]:
    """Normalized unique terms of the topic title plus every subtopic title."""
    terms = set(term_set(outline.title))
    for sub in outline.walk():
        terms |= term_set(sub.title)
    return frozenset(terms)
