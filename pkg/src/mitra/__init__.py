"""mitra: self-hosted retrieval-augmented QA over internal analysis notes.

Two-tier retrieval (abstracts first, then a per-analysis full-text index),
dense search with cross-encoder reranking, a BM25 baseline, grounded answer
generation against a locally served model, and a rank-aware evaluation kit.
"""

__version__ = "0.1.0"

from .corpus import AnalysisRecord, Chunk, CorpusStore, Document, split_paragraphs
from .embed import EmbedderConfig, make_embedder, normalize
from .errors import MitraError
from .generate import GenerationConfig, assemble_prompt, make_generator
from .index import (
    RankedHit,
    TieredIndexSet,
    VectorIndex,
    build_abstracts_index,
    build_fulltext_index,
    build_tiered_indexes,
    search_topk,
)
from .lexical import Bm25Index, bm25_rank, bm25_score, build_bm25_index, tokenize
from .pipeline import Citation, PipelineConfig, RetrievalPipeline
from .rerank import Passage, RerankerConfig, make_reranker, stub_score
from .session import (
    Answer,
    ConfirmationRequest,
    Session,
    SessionPhase,
    SessionTable,
    confirm,
    create_session,
    handle_query,
    reset,
)

__all__ = [
    "__version__",
    "AnalysisRecord",
    "Answer",
    "Bm25Index",
    "Chunk",
    "Citation",
    "ConfirmationRequest",
    "CorpusStore",
    "Document",
    "EmbedderConfig",
    "GenerationConfig",
    "MitraError",
    "Passage",
    "PipelineConfig",
    "RankedHit",
    "RerankerConfig",
    "RetrievalPipeline",
    "Session",
    "SessionPhase",
    "SessionTable",
    "TieredIndexSet",
    "VectorIndex",
    "assemble_prompt",
    "bm25_rank",
    "bm25_score",
    "build_abstracts_index",
    "build_bm25_index",
    "build_fulltext_index",
    "build_tiered_indexes",
    "confirm",
    "create_session",
    "handle_query",
    "make_embedder",
    "make_generator",
    "make_reranker",
    "normalize",
    "reset",
    "search_topk",
    "split_paragraphs",
    "stub_score",
    "tokenize",
]
