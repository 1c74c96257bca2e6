"""Second-stage reranking of retrieved candidates.

The remote client speaks to a cross-encoder server that scores each
(query, passage) pair jointly; the stub scores by token-set Jaccard overlap
(after synonym canonicalization) so the full two-stage cascade runs offline.
In both cases the reranker score fully replaces the first-stage score — the
final ranked list is the reranker's.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Protocol, Sequence

from .embed import SynonymTable, canonicalize, load_synonym_table
from .errors import RerankerUnavailable
from .index import RankedHit
from .lexical import tokenize
from .wire import RequestsTransport, Transport, TransportError


@dataclass(frozen=True)
class Passage:
    """A candidate handed to the reranker; carries its owning analysis so
    results remain attributable."""

    chunk_id: str
    analysis_id: str
    text: str


@dataclass
class RerankerConfig:
    mode: str = "stub"  # "remote" | "stub"
    endpoint_url: str | None = None
    timeout_s: float = 30.0
    k_final: int = 5
    fallback_to_retrieval: bool = False
    synonym_table_path: str | None = None
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.k_final < 1:
            raise ValueError("k_final must be >= 1")
        if self.mode not in ("remote", "stub"):
            raise ValueError(f"unknown reranker mode {self.mode!r}")
        if self.mode == "remote" and not self.endpoint_url:
            raise ValueError("remote reranker requires endpoint_url")


def stub_score(query: str, passage: str, synonyms: SynonymTable | None = None) -> float:
    """Jaccard overlap of canonical token sets; 1.0 for identical texts,
    0.0 for disjoint vocabularies."""
    q = set(canonicalize(tokenize(query), synonyms))
    p = set(canonicalize(tokenize(passage), synonyms))
    union = q | p
    if not union:
        return 1.0  # both token-free, indistinguishable
    return len(q & p) / len(union)


def _ranked(scored: list[tuple[float, Passage]], k_final: int) -> list[RankedHit]:
    scored.sort(key=lambda pair: (-pair[0], pair[1].chunk_id))
    return [
        RankedHit(chunk_id=p.chunk_id, analysis_id=p.analysis_id, score=score, rank=rank)
        for rank, (score, p) in enumerate(scored[:k_final], start=1)
    ]


class Reranker(Protocol):
    config: RerankerConfig

    def rerank(
        self, query: str, candidates: Sequence[Passage], k_final: int | None = None
    ) -> list[RankedHit]: ...


class StubReranker:
    def __init__(self, config: RerankerConfig):
        self.config = config
        self._synonyms = (
            load_synonym_table(config.synonym_table_path) if config.synonym_table_path else None
        )

    def rerank(
        self, query: str, candidates: Sequence[Passage], k_final: int | None = None
    ) -> list[RankedHit]:
        k_final = self.config.k_final if k_final is None else k_final
        if not candidates:
            raise ValueError("rerank requires at least one candidate")
        if k_final < 1:
            raise ValueError("k_final must be >= 1")
        scored = [(stub_score(query, p.text, self._synonyms), p) for p in candidates]
        return _ranked(scored, k_final)


class RemoteReranker:
    """Wire contract: POST {"query": ..., "passages": [{"id", "text"}]} to
    endpoint_url, response {"scores": [...]} in candidate order."""

    def __init__(self, config: RerankerConfig, transport: Transport | None = None):
        self.config = config
        self._transport = transport or RequestsTransport()
        self._gate = threading.BoundedSemaphore(config.max_in_flight)

    def rerank(
        self, query: str, candidates: Sequence[Passage], k_final: int | None = None
    ) -> list[RankedHit]:
        k_final = self.config.k_final if k_final is None else k_final
        if not candidates:
            raise ValueError("rerank requires at least one candidate")
        if k_final < 1:
            raise ValueError("k_final must be >= 1")
        payload = {
            "query": query,
            "passages": [{"id": p.chunk_id, "text": p.text} for p in candidates],
        }
        try:
            with self._gate:
                data = self._transport.post_json(
                    self.config.endpoint_url, payload, self.config.timeout_s
                )
        except TransportError as exc:
            raise RerankerUnavailable(str(exc)) from exc
        scores = data.get("scores") if isinstance(data, dict) else None
        if not isinstance(scores, list) or len(scores) != len(candidates):
            raise RerankerUnavailable(
                f"server returned {len(scores) if isinstance(scores, list) else 'no'} "
                f"scores for {len(candidates)} passages"
            )
        scored = [(float(score), p) for score, p in zip(scores, candidates)]
        return _ranked(scored, k_final)


def rerank(
    query: str,
    candidates: Sequence[Passage],
    k_final: int,
    config: RerankerConfig | None = None,
    transport: Transport | None = None,
) -> list[RankedHit]:
    return make_reranker(config or RerankerConfig(), transport).rerank(query, candidates, k_final)


def make_reranker(config: RerankerConfig, transport: Transport | None = None) -> Reranker:
    if config.mode == "stub":
        return StubReranker(config)
    return RemoteReranker(config, transport)
