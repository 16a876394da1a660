"""Text normalization shared by every module that compares terms.

One contract, applied everywhere: Unicode lowercase, punctuation treated
as a separator, tokens from the shipped English stopword list dropped.
Keeping a single implementation means outline term sets, query terms,
document tokens and reference-section terms are always comparable.
"""

from __future__ import annotations

import re
from importlib import resources

# Alphanumeric runs, Unicode-aware; underscore counts as punctuation.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def _load_stopwords() -> frozenset[str]:
    text = resources.files("searchscaffold.data").joinpath("stopwords.txt").read_text("utf-8")
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


STOPWORDS: frozenset[str] = _load_stopwords()


def tokenize(text: str, stopwords: frozenset[str] = STOPWORDS) -> list[str]:
    """Normalized token sequence of ``text`` (order preserved, duplicates kept)."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if t not in stopwords]


def term_set(text: str, stopwords: frozenset[str] = STOPWORDS) -> frozenset[str]:
    """Unique normalized terms of ``text``."""
    return frozenset(tokenize(text, stopwords))
