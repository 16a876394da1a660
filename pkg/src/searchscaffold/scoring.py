"""Document/subtopic similarity scoring and capped progress accumulation.

A viewed document contributes to a subtopic's progress only when two cheap
filters pass (enough tokens, enough unique-term overlap with the subtopic's
reference section); only then is the embedding cosine computed. Progress
per subtopic accumulates once per document and renders as a bar filled at
``min(1, sum / cap)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Protocol, Sequence

import numpy as np

from . import kernels
from .errors import ConfigurationError, EmbeddingProviderError, ValidationError
from .outlines import Subtopic, TopicOutline
from .textnorm import tokenize

DEFAULT_EMBEDDING_DIM = 256


@dataclass(frozen=True)
class DocumentText:
    """Normalized body of one document."""

    doc_id: str
    tokens: tuple[str, ...]
    unique_terms: frozenset[str]

    @classmethod
    def from_text(cls, doc_id: str, text: str) -> "DocumentText":
        toks = tuple(tokenize(text))
        return cls(doc_id=doc_id, tokens=toks, unique_terms=frozenset(toks))

    @classmethod
    def from_tokens(cls, doc_id: str, tokens: Sequence[str]) -> "DocumentText":
        toks = tuple(tokens)
        return cls(doc_id=doc_id, tokens=toks, unique_terms=frozenset(toks))


@dataclass(frozen=True)
class ScoringConfig:
    min_tokens: int = 50
    min_overlap: float = 0.2
    cap: float = 10.0

    def __post_init__(self):
        if self.min_tokens < 0:
            raise ConfigurationError("min_tokens must be >= 0")
        if not 0.0 <= self.min_overlap <= 1.0:
            raise ConfigurationError("min_overlap must be in [0, 1]")
        if self.cap <= 0:
            raise ConfigurationError("cap must be positive")


class EmbeddingProvider(Protocol):
    """Deterministic token-list embedder; zero vector only for empty input."""

    dim: int

    def embed(self, tokens: Sequence[str]) -> np.ndarray: ...


class HashedTfEmbedder:
    """Default lexical embedder: feature-hashed term-frequency vector.

    Dependency-free and fully deterministic; a neural provider can be
    plugged in behind the same contract via an external inference process.
    """

    def __init__(self, dim: int = DEFAULT_EMBEDDING_DIM):
        if dim < 1:
            raise ConfigurationError("embedding dim must be >= 1")
        self.dim = dim

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        return kernels.hashed_tf(tokens, self.dim)


def subtopic_tokens(sub: Subtopic) -> list[str]:
    """Embedding input for a subtopic: its title plus its reference section."""
    return tokenize(sub.title) + tokenize(sub.reference_text)


def passes_filters(doc: DocumentText, sub: Subtopic, cfg: ScoringConfig) -> bool:
    """Both cheap filters, strict inequalities on both boundaries."""
    if not sub.reference_terms:
        raise ConfigurationError(f"subtopic {sub.id!r} has no reference terms")
    if len(doc.tokens) <= cfg.min_tokens:
        return False
    overlap = len(doc.unique_terms & sub.reference_terms) / len(sub.reference_terms)
    return overlap > cfg.min_overlap


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    try:
        return kernels.cosine(
            np.ascontiguousarray(a, dtype=np.float64),
            np.ascontiguousarray(b, dtype=np.float64),
        )
    except ValueError as exc:
        raise EmbeddingProviderError(str(exc)) from exc


def similarity(
    doc: DocumentText,
    sub: Subtopic,
    cfg: ScoringConfig,
    emb: EmbeddingProvider,
    _sub_vector: np.ndarray | None = None,
) -> float:
    """Gated similarity in [0, 1]: 0 unless both filters pass, else the
    embedding cosine clamped into [0, 1]."""
    if not passes_filters(doc, sub, cfg):
        return 0.0
    sub_vec = _sub_vector if _sub_vector is not None else emb.embed(subtopic_tokens(sub))
    score = _cosine(emb.embed(list(doc.tokens)), sub_vec)
    return min(1.0, max(0.0, score))


@dataclass(frozen=True)
class ProgressState:
    """Per-subtopic accumulated similarity mass, once per document."""

    sums: dict[str, float]
    scored_docs: dict[str, frozenset[str]]
    config: ScoringConfig = field(default_factory=ScoringConfig)

    @classmethod
    def for_outline(cls, outline: TopicOutline, config: ScoringConfig | None = None) -> "ProgressState":
        ids = outline.subtopic_ids()
        return cls(
            sums={i: 0.0 for i in ids},
            scored_docs={i: frozenset() for i in ids},
            config=config or ScoringConfig(),
        )


def record_view(
    state: ProgressState,
    doc: DocumentText,
    outline: TopicOutline,
    emb: EmbeddingProvider,
    _sub_vectors: dict[str, np.ndarray] | None = None,
) -> tuple[ProgressState, dict[str, float]]:
    """Score a viewed document against every subtopic it has not yet
    been counted for; returns the new state and the per-subtopic deltas.

    Re-views contribute nothing: one document can fill a bar only once.
    """
    if not doc.doc_id:
        raise ValidationError("document has no doc_id")
    sums = dict(state.sums)
    scored = dict(state.scored_docs)
    deltas: dict[str, float] = {}
    doc_vec: np.ndarray | None = None
    for sub in outline.walk():
        if doc.doc_id in scored[sub.id]:
            deltas[sub.id] = 0.0
            continue
        if passes_filters(doc, sub, state.config):
            if doc_vec is None:
                doc_vec = emb.embed(list(doc.tokens))
            if _sub_vectors is not None:
                vec = _sub_vectors.get(sub.id)
                if vec is None:
                    vec = _sub_vectors[sub.id] = emb.embed(subtopic_tokens(sub))
            else:
                vec = emb.embed(subtopic_tokens(sub))
            score = min(1.0, max(0.0, _cosine(doc_vec, vec)))
        else:
            score = 0.0
        sums[sub.id] += score
        scored[sub.id] = scored[sub.id] | {doc.doc_id}
        deltas[sub.id] = score
    return replace(state, sums=sums, scored_docs=scored), deltas


def fill_fraction(state: ProgressState, sub_id: str) -> float:
    """Bar fill in [0, 1]: accumulated mass over the display cap, clamped."""
    return min(1.0, state.sums[sub_id] / state.config.cap)


class ProgressTracker:
    """Session-side wrapper: one outline, cached subtopic vectors, live state.

    Mutating entry point for the session engine; the pure functions above
    stay the contract for everything it does.
    """

    def __init__(
        self,
        outline: TopicOutline,
        emb: EmbeddingProvider | None = None,
        config: ScoringConfig | None = None,
    ):
        self.outline = outline
        self.emb = emb or HashedTfEmbedder()
        self.state = ProgressState.for_outline(outline, config)
        self._sub_vectors: dict[str, np.ndarray] = {}

    def view(self, doc: DocumentText) -> dict[str, float]:
        self.state, deltas = record_view(
            self.state, doc, self.outline, self.emb, self._sub_vectors
        )
        return deltas

    def fill(self, sub_id: str) -> float:
        return fill_fraction(self.state, sub_id)
