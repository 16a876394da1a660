#!/usr/bin/env python3
"""Regenerate the committed local search corpus from the outline fixtures.

Usage: python scripts/make_corpus.py [--outlines DIR] [--out DIR] [--seed N]

Every topic gets: a few broad overview documents, two documents per
subtopic built around that subtopic's reference text, and two documents
hosted on blacklisted domains (so host filtering is exercised against
real corpus traffic). Output is deterministic for a given seed; the
generated files are committed, this script only exists to rebuild them.
"""

from __future__ import annotations

import argparse
import random
from pathlib import Path

import yaml

from searchscaffold.outlines import load_outline

SAFE_HOSTS = [
    "articles.openlearn.example",
    "notes.fieldguide.example",
    "journal.plainfacts.example",
    "review.topicdigest.example",
    "archive.longform.example",
    "magazine.contextual.example",
    "bulletin.research-desk.example",
    "explainers.publicnotes.example",
]

BLOCKED_HOSTS = ["en.wikipedia.org", "simple.wikipedia.org"]

FILLER_LEADS = [
    "This overview walks through the essentials step by step for newcomers.",
    "The guide below collects practical background assembled from public sources.",
    "A short primer follows, with pointers for readers who want more depth.",
    "The following notes summarize what practitioners usually mention first.",
    "This report gathers the main points editors raised during review.",
    "An annotated summary prepared for a general audience appears below.",
]

FILLER_TAILS = [
    "Further reading and worked examples appear toward the end of the page.",
    "Readers should weigh the update history before citing specific figures.",
    "The analysis closes with open questions that remain actively debated.",
    "Comments from earlier drafts are preserved in the appendix section.",
    "A companion piece covers the measurement details left out here.",
    "The glossary at the bottom defines the specialist vocabulary used above.",
]


def _slugify(text: str) -> str:
    out = "".join(c if c.isalnum() else "-" for c in text.lower())
    return "-".join(p for p in out.split("-") if p)


def build_topic_docs(outline, rng: random.Random) -> list[dict]:
    docs = []
    subs = list(outline.walk())
    all_text = " ".join(s.reference_text for s in subs)

    def add(host: str, slug: str, title: str, body: str):
        docs.append(
            {
                "doc_id": f"https://{host}/{outline.topic_id}/{slug}",
                "title": title,
                "snippet": " ".join(body.split())[:180],
                "body": body,
            }
        )

    # broad overview documents mixing several sections
    for i in range(4):
        picks = rng.sample(subs, k=min(3, len(subs)))
        body = " ".join(
            [rng.choice(FILLER_LEADS), f"{outline.title}."]
            + [p.reference_text for p in picks]
            + [rng.choice(FILLER_TAILS)]
        )
        add(
            rng.choice(SAFE_HOSTS),
            f"overview-{i + 1}",
            f"{outline.title}: an overview ({i + 1})",
            body,
        )

    # two angles per subtopic, each anchored in its reference text
    for sub in subs:
        siblings = [s for s in subs if s.id != sub.id]
        for i in range(2):
            extra = rng.choice(siblings).reference_text if siblings else ""
            body = " ".join(
                [
                    rng.choice(FILLER_LEADS),
                    f"{sub.title} in the context of {outline.title.lower()}.",
                    sub.reference_text,
                    extra,
                    rng.choice(FILLER_TAILS),
                ]
            )
            title = (
                f"{sub.title} — {outline.title} explained"
                if i == 0
                else f"Understanding {sub.title.lower()} ({outline.title})"
            )
            add(rng.choice(SAFE_HOSTS), f"{_slugify(sub.title)}-{i + 1}", title, body)

    # encyclopedia-style pages on blocked hosts; retrieval must filter these.
    # Kept short and lead-heavy so they rank near the top for the bare topic
    # query and the post-retrieval filter visibly removes them.
    for host in BLOCKED_HOSTS:
        lead = (
            f"{outline.title}. This article covers {outline.title.lower()} "
            f"in encyclopedic form, section by section: {outline.title.lower()}."
        )
        body = " ".join([lead, subs[0].reference_text if subs else ""])
        add(host, "article", outline.title, body)
    return docs


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outlines", default="fixtures/outlines")
    ap.add_argument("--out", default="fixtures/corpus")
    ap.add_argument("--seed", type=int, default=20210314)
    args = ap.parse_args()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    total = 0
    for path in sorted(Path(args.outlines).glob("*.yaml")):
        outline = load_outline(path)
        rng = random.Random(f"{args.seed}:{outline.topic_id}")
        docs = build_topic_docs(outline, rng)
        target = out_dir / f"{outline.topic_id}.yaml"
        target.write_text(yaml.safe_dump(docs, sort_keys=False, allow_unicode=True, width=100))
        print(f"{outline.topic_id}: {len(docs)} docs -> {target}")
        total += len(docs)
    print(f"total: {total} documents")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
