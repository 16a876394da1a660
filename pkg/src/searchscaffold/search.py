"""Pluggable search backends behind one SERP contract.

Two adapters: a deterministic local-corpus engine (BM25 over a directory
of documents, for development, tests and simulation) and a remote web
search API client. Both yield vendor-neutral results that are blacklist
filtered before display; ten results per page.
"""

from __future__ import annotations

import logging
import math
import os
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Protocol
from urllib.parse import urlsplit

import httpx
import yaml

from .errors import BackendError, BodyUnavailableError, ValidationError
from .scoring import DocumentText
from .textnorm import tokenize

log = logging.getLogger(__name__)

RESULTS_PER_PAGE = 10

_TAG_RE = re.compile(r"<[^>]+>")


def host_of(doc_id: str) -> str:
    """Lowercased hostname of a canonical URL; '' for non-URL ids."""
    try:
        return (urlsplit(doc_id).hostname or "").lower()
    except ValueError:
        return ""


@dataclass(frozen=True)
class SearchResult:
    doc_id: str
    title: str
    snippet: str
    host: str
    rank: int
    body: DocumentText | None = None


@dataclass(frozen=True)
class Serp:
    query_as_submitted: str
    page: int
    results: tuple[SearchResult, ...]


class Blacklist:
    """Host-suffix blacklist with dot-boundary matching.

    'wikipedia.org' blocks 'en.wikipedia.org' and 'wikipedia.org' but not
    'notwikipedia.org'. Matching is case-insensitive.
    """

    def __init__(self, domains: Iterable[str] = ()):
        self.domains = frozenset(d.strip().lstrip("*.").lower() for d in domains if d.strip())

    @classmethod
    def from_file(cls, path: str | Path) -> "Blacklist":
        lines = Path(path).read_text("utf-8").splitlines()
        return cls(line.split("#", 1)[0] for line in lines)

    def blocks(self, host: str) -> bool:
        host = host.lower()
        return any(host == d or host.endswith("." + d) for d in self.domains)

    def __len__(self) -> int:
        return len(self.domains)


class SearchAdapter(Protocol):
    """One page of raw (pre-blacklist) results, plus body fetching."""

    def fetch(self, query: str, page: int, per_page: int) -> list[SearchResult]: ...

    def fetch_body(self, doc_id: str) -> DocumentText: ...


class Bm25Index:
    """Okapi BM25 over tokenized documents (k1=1.2, b=0.75 unless overridden).

    idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
    score(d, q) = sum_t idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
    """

    def __init__(self, docs: dict[str, list[str]], k1: float = 1.2, b: float = 0.75):
        self.k1 = k1
        self.b = b
        self.doc_ids = sorted(docs)
        self.tf = {doc_id: Counter(docs[doc_id]) for doc_id in self.doc_ids}
        self.doc_len = {doc_id: len(docs[doc_id]) for doc_id in self.doc_ids}
        n = len(self.doc_ids)
        self.avgdl = (sum(self.doc_len.values()) / n) if n else 0.0
        df: Counter[str] = Counter()
        for doc_id in self.doc_ids:
            df.update(self.tf[doc_id].keys())
        self.idf = {t: math.log(1 + (n - d + 0.5) / (d + 0.5)) for t, d in df.items()}

    def score(self, query_tokens: list[str], doc_id: str) -> float:
        tf = self.tf[doc_id]
        dl = self.doc_len[doc_id]
        norm = self.k1 * (1 - self.b + self.b * (dl / self.avgdl if self.avgdl else 0.0))
        total = 0.0
        for t in query_tokens:
            f = tf.get(t)
            if not f or t not in self.idf:
                continue
            total += self.idf[t] * f * (self.k1 + 1) / (f + norm)
        return total

    def rank(self, query: str) -> list[str]:
        """Doc ids with positive score, best first; ties broken by doc_id."""
        q = tokenize(query)
        if not q or not self.doc_ids:
            return []
        scored = [(self.score(q, d), d) for d in self.doc_ids]
        return [d for s, d in sorted(scored, key=lambda p: (-p[0], p[1])) if s > 0.0]


@dataclass(frozen=True)
class CorpusDoc:
    doc_id: str
    title: str
    snippet: str
    body: str


def load_corpus_dir(corpus_dir: str | Path) -> dict[str, CorpusDoc]:
    """Read every document file under a corpus directory (recursively).

    A file holds either one document mapping or a list of them.
    """
    docs: dict[str, CorpusDoc] = {}
    paths = sorted(Path(corpus_dir).rglob("*.yaml")) + sorted(Path(corpus_dir).rglob("*.yml"))
    for path in paths:
        raw = yaml.safe_load(path.read_text("utf-8"))
        entries = raw if isinstance(raw, list) else [raw]
        for entry in entries:
            if not isinstance(entry, dict):
                raise ValidationError(f"corpus file {path} holds a non-mapping entry")
            missing = [k for k in ("doc_id", "title", "snippet", "body") if k not in entry]
            if missing:
                raise ValidationError(f"corpus file {path} missing fields: {missing}")
            doc = CorpusDoc(
                doc_id=str(entry["doc_id"]),
                title=str(entry["title"]),
                snippet=str(entry["snippet"]),
                body=str(entry["body"]),
            )
            if doc.doc_id in docs:
                raise ValidationError(f"duplicate doc_id {doc.doc_id!r} ({path})")
            docs[doc.doc_id] = doc
    return docs


class LocalCorpusAdapter:
    """Deterministic BM25 search over an on-disk corpus."""

    def __init__(self, docs: dict[str, CorpusDoc], k1: float = 1.2, b: float = 0.75):
        self._docs = docs
        self.index = Bm25Index(
            {d.doc_id: tokenize(f"{d.title} {d.body}") for d in docs.values()}, k1=k1, b=b
        )

    @classmethod
    def from_dir(cls, corpus_dir: str | Path, **kwargs) -> "LocalCorpusAdapter":
        return cls(load_corpus_dir(corpus_dir), **kwargs)

    def __len__(self) -> int:
        return len(self._docs)

    def rank(self, query: str) -> list[str]:
        return self.index.rank(query)

    def fetch(self, query: str, page: int, per_page: int = RESULTS_PER_PAGE) -> list[SearchResult]:
        ranking = self.index.rank(query)
        start = (page - 1) * per_page
        out = []
        for offset, doc_id in enumerate(ranking[start : start + per_page]):
            doc = self._docs[doc_id]
            out.append(
                SearchResult(
                    doc_id=doc.doc_id,
                    title=doc.title,
                    snippet=doc.snippet,
                    host=host_of(doc.doc_id),
                    rank=start + offset + 1,
                )
            )
        return out

    def fetch_body(self, doc_id: str) -> DocumentText:
        doc = self._docs.get(doc_id)
        if doc is None:
            raise BodyUnavailableError(f"unknown corpus document {doc_id!r}")
        return DocumentText.from_text(doc_id, doc.body)

    def readable_body(self, doc_id: str) -> str:
        """Unnormalized body text, for display rather than scoring."""
        doc = self._docs.get(doc_id)
        if doc is None:
            raise BodyUnavailableError(f"unknown corpus document {doc_id!r}")
        return doc.body


class RemoteSearchAdapter:
    """Client for a remote JSON search API.

    Expected wire schema (documented in docs/api.md): GET {endpoint} with
    params q/page/count returns {"results": [{"url", "title", "snippet"}]}.
    The API key is read from the SEARCH_API_KEY environment variable.
    Vendor responses are normalized here; nothing downstream sees them.
    """

    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        timeout: float = 10.0,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint
        self.api_key = api_key if api_key is not None else os.environ.get("SEARCH_API_KEY", "")
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict[str, str]:
        return {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}

    def fetch(self, query: str, page: int, per_page: int = RESULTS_PER_PAGE) -> list[SearchResult]:
        try:
            resp = self._client.get(
                self.endpoint,
                params={"q": query, "page": page, "count": per_page},
                headers=self._headers(),
            )
            resp.raise_for_status()
            payload = resp.json()
        except httpx.TimeoutException as exc:
            raise BackendError(f"search backend timeout: {exc}", retryable=True) from exc
        except httpx.HTTPStatusError as exc:
            code = exc.response.status_code
            raise BackendError(
                f"search backend returned {code}", retryable=code == 429 or code >= 500
            ) from exc
        except (httpx.HTTPError, ValueError) as exc:
            raise BackendError(f"search backend failure: {exc}", retryable=True) from exc

        results = []
        for i, item in enumerate(payload.get("results", [])[:per_page]):
            url = str(item.get("url", ""))
            results.append(
                SearchResult(
                    doc_id=url,
                    title=str(item.get("title", "")),
                    snippet=str(item.get("snippet", "")),
                    host=host_of(url),
                    rank=(page - 1) * per_page + i + 1,
                )
            )
        return results

    def fetch_body(self, doc_id: str) -> DocumentText:
        return DocumentText.from_text(doc_id, self.readable_body(doc_id))

    def readable_body(self, doc_id: str) -> str:
        """Markup-stripped page text, for display rather than scoring."""
        try:
            resp = self._client.get(doc_id, headers={"Accept": "text/html, text/plain"})
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            raise BodyUnavailableError(f"cannot fetch {doc_id}: {exc}") from exc
        return _TAG_RE.sub(" ", resp.text)


def search(query: str, page: int, backend: SearchAdapter, blacklist: Blacklist) -> Serp:
    """One SERP: retrieve a page from the backend, then drop blacklisted hosts.

    Filtering happens after retrieval and before display, so a page may
    carry fewer than ten results. Pages of the same query never overlap.
    """
    if not query.strip():
        raise ValidationError("query is empty")
    if page < 1:
        raise ValidationError("page must be >= 1")
    raw = backend.fetch(query, page, RESULTS_PER_PAGE)
    kept = tuple(r for r in raw if not blacklist.blocks(r.host))
    dropped = len(raw) - len(kept)
    if dropped:
        log.debug("blacklist dropped %d result(s) for %r page %d", dropped, query, page)
    return Serp(query_as_submitted=query, page=page, results=kept)


class BodyCache:
    """Per-session document body cache in front of an adapter."""

    def __init__(self, fetch: Callable[[str], DocumentText]):
        self._fetch = fetch
        self._cache: dict[str, DocumentText] = {}

    def get(self, doc_id: str) -> DocumentText:
        if doc_id not in self._cache:
            self._cache[doc_id] = self._fetch(doc_id)
        return self._cache[doc_id]
