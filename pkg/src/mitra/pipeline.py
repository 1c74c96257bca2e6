"""Wiring of embedder, index search, reranker, and generator over a corpus.

The cascade contract lives here: the reranker only ever sees the
k_retrieve candidates produced by first-stage vector search, never the
whole index.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .corpus import CorpusStore
from .embed import Embedder
from .errors import RerankerUnavailable
from .generate import Generator, assemble_prompt
from .index import RankedHit, VectorIndex, search_topk
from .rerank import Passage, Reranker


@dataclass
class PipelineConfig:
    k_retrieve: int = 20
    k_final: int = 5
    candidate_alternatives: int = 3
    abstract_excerpt_chars: int = 300

    def __post_init__(self) -> None:
        if self.k_final < 1 or self.k_retrieve < 1:
            raise ValueError("k_retrieve and k_final must be >= 1")
        if self.k_final > self.k_retrieve:
            raise ValueError("k_final must not exceed k_retrieve")


@dataclass(frozen=True)
class Citation:
    """A cited passage in an answer; carries its full text so clients need
    no follow-up fetch to display it."""

    chunk_id: str
    analysis_id: str
    score: float
    rank: int
    text: str


class RetrievalPipeline:
    def __init__(
        self,
        store: CorpusStore,
        embedder: Embedder,
        reranker: Reranker,
        generator: Generator,
        config: PipelineConfig | None = None,
    ):
        self.store = store
        self.embedder = embedder
        self.reranker = reranker
        self.generator = generator
        self.config = config or PipelineConfig()

    def embed_query(self, query: str) -> np.ndarray:
        return self.embedder.embed_texts([query], role="query")[0]

    def propose(self, query: str, abstracts_index: VectorIndex) -> list[RankedHit]:
        """Abstract-tier search for candidate analyses (top-1 plus a short
        alternatives list for the confirmation dialog)."""
        limit = 1 + self.config.candidate_alternatives
        return search_topk(abstracts_index, self.embed_query(query), limit)

    def retrieve(self, query: str, index: VectorIndex) -> list[RankedHit]:
        return search_topk(index, self.embed_query(query), self.config.k_retrieve)

    def rerank_hits(self, query: str, hits: Sequence[RankedHit]) -> list[RankedHit]:
        """Second stage; falls back to first-stage order only when the
        reranker config explicitly allows it."""
        if len(hits) > self.config.k_retrieve:
            raise ValueError(
                f"cascade violation: {len(hits)} candidates exceed k_retrieve={self.config.k_retrieve}"
            )
        passages = [
            Passage(h.chunk_id, h.analysis_id, self.store.chunk_text(h.chunk_id)) for h in hits
        ]
        try:
            return self.reranker.rerank(query, passages, self.config.k_final)
        except RerankerUnavailable:
            if not self.reranker.config.fallback_to_retrieval:
                raise
            return [
                replace(hit, rank=rank)
                for rank, hit in enumerate(hits[: self.config.k_final], start=1)
            ]

    def rank(self, query: str, index: VectorIndex) -> list[RankedHit]:
        """Full two-stage ranking without generation (used by evaluation)."""
        hits = self.retrieve(query, index)
        if not hits:
            return []
        return self.rerank_hits(query, hits)

    def answer(self, query: str, index: VectorIndex) -> tuple[str, list[Citation]]:
        final = self.rank(query, index)
        passages = [(hit, self.store.chunk_text(hit.chunk_id)) for hit in final]
        prompt = assemble_prompt(query, passages, self.generator.config)
        text = self.generator.generate(prompt)
        citations = [
            Citation(
                chunk_id=hit.chunk_id,
                analysis_id=hit.analysis_id,
                score=hit.score,
                rank=hit.rank,
                text=passage_text,
            )
            for hit, passage_text in passages
        ]
        return text, citations
