from __future__ import annotations

import pytest

from searchscaffold.outlines import Subtopic, TopicOutline
from searchscaffold.textnorm import term_set

FIXTURES = "fixtures"


def build_subtopic(sub_id: str, level: int, title: str, text: str = "", children=()) -> Subtopic:
    return Subtopic(
        id=sub_id,
        level=level,
        title=title,
        children=tuple(children),
        reference_text=text,
        reference_terms=term_set(text),
    )


def build_outline(topic_id: str, title: str, shape: list[tuple[str, list[str]]], text_for=None):
    """Outline from [(l1_title, [l2_titles...]), ...]; text_for(title) -> str."""
    text_for = text_for or (lambda t: f"{t} reference section body")
    l1 = []
    for l1_title, l2_titles in shape:
        l1_id = l1_title.lower().replace(" ", "-")
        children = [
            build_subtopic(
                f"{l1_id}.{t.lower().replace(' ', '-')}", 2, t, text_for(t)
            )
            for t in l2_titles
        ]
        l1.append(build_subtopic(l1_id, 1, l1_title, text_for(l1_title), children))
    return TopicOutline(topic_id=topic_id, title=title, l1=tuple(l1))


@pytest.fixture
def six_l1_outline():
    """Ethics-like shape: 6 L1, 12 L2 (two per L1)."""
    shape = [
        ("Defining ethics", ["Meta ethics", "Normative ethics"]),
        ("Applied ethics", ["Bioethics", "Business ethics"]),
        ("Moral psychology", ["Descriptive ethics", "Value theory"]),
        ("Virtue ethics", ["Stoicism", "Epicureanism"]),
        ("Deontology", ["Kantianism", "Contractualism"]),
        ("Consequentialism", ["Utilitarianism", "Hedonism"]),
    ]
    return build_outline("ethics", "Ethics", shape)
