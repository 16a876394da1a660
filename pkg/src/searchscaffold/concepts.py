"""Vocabulary concept candidate extraction.

Candidates for the pre/post knowledge tests are the unigrams and bigrams
of a topic's reference article, ranked by corpus IDF (rarest first).
Stopwords are removed before n-grams are formed, so a bigram may span a
dropped stopword ("impact economy" from "impact on the economy").
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .textnorm import STOPWORDS


@dataclass(frozen=True)
class ConceptCandidate:
    phrase: str
    idf: float


def _ngrams(tokens: Sequence[str]) -> list[str]:
    grams = list(tokens)
    grams.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    return grams


def extract_concept_candidates(
    corpus: Iterable[Sequence[str]],
    reference_doc: Sequence[str],
    k: int,
    stopwords: frozenset[str] = STOPWORDS,
) -> list[ConceptCandidate]:
    """Top-``k`` reference-doc n-grams by descending corpus IDF.

    IDF is ln(N/df) with df clamped to at least 1 (a phrase absent from
    the corpus counts as maximally rare). Ties break by first occurrence
    in the reference doc, then lexicographically, so output is stable.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    docs = [[t for t in doc if t not in stopwords] for doc in corpus]
    if not docs:
        raise ValueError("corpus must be non-empty")
    ref = [t for t in reference_doc if t not in stopwords]
    if not ref:
        return []

    first_pos: dict[str, int] = {}
    for pos, gram in enumerate(_ngrams(ref)):
        first_pos.setdefault(gram, pos)

    df: dict[str, int] = dict.fromkeys(first_pos, 0)
    for doc in docs:
        for gram in set(_ngrams(doc)):
            if gram in df:
                df[gram] += 1

    n_docs = len(docs)
    ranked = sorted(
        (ConceptCandidate(phrase, math.log(n_docs / max(df[phrase], 1))) for phrase in first_pos),
        key=lambda c: (-c.idf, first_pos[c.phrase], c.phrase),
    )
    return ranked[:k]
