"""Okapi BM25 baseline over chunk text, backed by an inverted index.

The tokenizer here is the single source of truth for lexical matching across
the package: BM25 uses it raw, while the embedding and reranking stubs layer
synonym canonicalization on top of it. BM25 itself deliberately stays
synonym-blind; it is the keyword baseline the dense pipeline is compared
against.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import UnknownChunk
from .index import RankedHit

# Lowercase, split on anything non-alphanumeric (underscore included, so
# "p_T" tokenizes to ["p", "t"]). No stemming, no stop words.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

DEFAULT_K1 = 1.5
DEFAULT_B = 0.75


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass
class Bm25Index:
    """Term statistics for a fixed chunk set; immutable once built."""

    doc_freq: dict[str, int]
    chunk_lengths: dict[str, int]
    avg_len: float
    n_chunks: int
    postings: dict[str, dict[str, int]]
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B
    analysis_by_chunk: dict[str, str] = field(default_factory=dict)


def build_bm25_index(
    chunk_texts: Mapping[str, str],
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
    analysis_by_chunk: Mapping[str, str] | None = None,
) -> Bm25Index:
    if k1 < 0:
        raise ValueError("k1 must be >= 0")
    if not 0 <= b <= 1:
        raise ValueError("b must be in [0, 1]")
    doc_freq: dict[str, int] = {}
    chunk_lengths: dict[str, int] = {}
    postings: dict[str, dict[str, int]] = {}
    for chunk_id, text in chunk_texts.items():
        terms = tokenize(text)
        chunk_lengths[chunk_id] = len(terms)
        for term, freq in Counter(terms).items():
            doc_freq[term] = doc_freq.get(term, 0) + 1
            postings.setdefault(term, {})[chunk_id] = freq
    n_chunks = len(chunk_lengths)
    avg_len = sum(chunk_lengths.values()) / n_chunks if n_chunks else 0.0
    return Bm25Index(
        doc_freq=doc_freq,
        chunk_lengths=chunk_lengths,
        avg_len=avg_len,
        n_chunks=n_chunks,
        postings=postings,
        k1=k1,
        b=b,
        analysis_by_chunk=dict(analysis_by_chunk or {}),
    )


def idf(index: Bm25Index, term: str) -> float:
    """ln(1 + (N - n + 0.5) / (n + 0.5)) — nonnegative for every term."""
    n = index.doc_freq.get(term, 0)
    return math.log(1.0 + (index.n_chunks - n + 0.5) / (n + 0.5))


def bm25_score(index: Bm25Index, query_terms: Sequence[str], chunk_id: str) -> float:
    """Okapi BM25 score of one chunk against a tokenized query.

    Each query-term occurrence contributes
    ``idf(t) * f(t,d) * (k1 + 1) / (f(t,d) + k1 * (1 - b + b * |d| / avgdl))``;
    terms absent from the chunk contribute 0.
    """
    if chunk_id not in index.chunk_lengths:
        raise UnknownChunk(f"chunk {chunk_id!r} is not in the index")
    length = index.chunk_lengths[chunk_id]
    norm = index.k1 * (1.0 - index.b + index.b * (length / index.avg_len if index.avg_len else 0.0))
    score = 0.0
    for term in query_terms:
        freq = index.postings.get(term, {}).get(chunk_id, 0)
        if freq == 0:
            continue
        score += idf(index, term) * (freq * (index.k1 + 1.0)) / (freq + norm)
    return score


def bm25_rank(index: Bm25Index, query: str, k: int) -> list[RankedHit]:
    """Top-k chunks by BM25 score, descending; zero-score chunks excluded.

    Ties break by ascending chunk_id so ranks are reproducible.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query_terms = tokenize(query)
    candidates: set[str] = set()
    for term in set(query_terms):
        candidates.update(index.postings.get(term, {}))
    scored = [(bm25_score(index, query_terms, cid), cid) for cid in candidates]
    scored = [(s, cid) for s, cid in scored if s > 0.0]
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [
        RankedHit(
            chunk_id=cid,
            analysis_id=index.analysis_by_chunk.get(cid, ""),
            score=score,
            rank=rank,
        )
        for rank, (score, cid) in enumerate(scored[:k], start=1)
    ]
