"""Turn a directory of session logs into the two study export files.

Each session is a `<session_id>.log` event file plus a
`<session_id>.meta.yaml` sidecar; outlines come from a directory of topic
files. Output is one per-session JSONL record file and one cohort CSV,
both byte-stable for identical inputs.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ValidationError
from .metrics import (
    SessionRecord,
    VksRecord,
    behavior_report,
    learning_report,
    time_bucketed,
    write_exports,
)
from .outlines import TopicOutline, load_outline
from .runtime import load_meta
from .session import read_log


def load_outline_dir(outlines_dir: str | Path) -> dict[str, TopicOutline]:
    outlines: dict[str, TopicOutline] = {}
    paths = sorted(Path(outlines_dir).glob("*.yaml")) + sorted(Path(outlines_dir).glob("*.yml"))
    for path in paths:
        outline = load_outline(path)
        if outline.topic_id in outlines:
            raise ValidationError(f"duplicate outline for topic {outline.topic_id!r} ({path})")
        outlines[outline.topic_id] = outline
    if not outlines:
        raise ValidationError(f"no outline files in {outlines_dir}")
    return outlines


def _vks(raw) -> list[VksRecord]:
    return [VksRecord(**entry) for entry in raw]


def session_record(log_path: Path, meta: dict, outline: TopicOutline) -> SessionRecord:
    events = read_log(log_path)
    learning = None
    if meta.get("vks_pre") and meta.get("vks_post"):
        learning = learning_report(
            _vks(meta["vks_pre"]),
            _vks(meta["vks_post"]),
            participant_id=str(meta["participant_id"]),
            topic_id=str(meta["topic_id"]),
        )
    return SessionRecord(
        session_id=str(meta["session_id"]),
        participant_id=str(meta["participant_id"]),
        topic_id=str(meta["topic_id"]),
        strategy=str(meta["strategy"]),
        behavior=behavior_report(events, outline),
        learning=learning,
        series=time_bucketed(events, outline),
    )


def collect_session_records(
    logs_dir: str | Path, outlines: dict[str, TopicOutline]
) -> list[SessionRecord]:
    records = []
    for log_path in sorted(Path(logs_dir).glob("*.log")):
        meta_path = log_path.with_suffix(".meta.yaml")
        if not meta_path.exists():
            raise ValidationError(f"{log_path} has no matching {meta_path.name}")
        meta = load_meta(meta_path)
        topic_id = str(meta["topic_id"])
        if topic_id not in outlines:
            raise ValidationError(f"{meta_path}: no outline for topic {topic_id!r}")
        records.append(session_record(log_path, meta, outlines[topic_id]))
    if not records:
        raise ValidationError(f"no session logs in {logs_dir}")
    return records


def build_report(
    logs_dir: str | Path, outlines_dir: str | Path, out_dir: str | Path
) -> tuple[Path, Path]:
    outlines = load_outline_dir(outlines_dir)
    records = collect_session_records(logs_dir, outlines)
    return write_exports(records, out_dir)
