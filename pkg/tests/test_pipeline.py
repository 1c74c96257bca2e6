import pytest

from mitra.embed import EmbedderConfig, make_embedder
from mitra.errors import RerankerUnavailable
from mitra.generate import GenerationConfig, make_generator
from mitra.index import build_fulltext_index, search_topk
from mitra.pipeline import PipelineConfig, RetrievalPipeline
from mitra.rerank import RemoteReranker, RerankerConfig
from mitra.wire import RecordingTransport, TransportError


def failing_reranker(fallback):
    def respond(url, payload):
        raise TransportError(url, "down")

    config = RerankerConfig(
        mode="remote",
        endpoint_url="http://rerank.internal:9002/r",
        fallback_to_retrieval=fallback,
        k_final=2,
    )
    return RemoteReranker(config, RecordingTransport(respond))


@pytest.fixture
def tiny_pipeline(tiny_store):
    embedder = make_embedder(EmbedderConfig(mode="stub", dimension=32, stub_seed=1))
    index = build_fulltext_index(tiny_store, "an-b", embedder)
    def build(reranker, k_retrieve=20, k_final=2):
        return (
            RetrievalPipeline(
                tiny_store,
                embedder,
                reranker,
                make_generator(GenerationConfig(mode="stub")),
                PipelineConfig(k_retrieve=k_retrieve, k_final=k_final),
            ),
            index,
        )
    return build


def test_cascade_guard_rejects_oversized_candidate_sets(tiny_pipeline):
    pipeline, index = tiny_pipeline(failing_reranker(fallback=False), k_retrieve=2)
    hits = search_topk(index, pipeline.embed_query("dijet spectrum"), 3)
    with pytest.raises(ValueError, match="cascade"):
        pipeline.rerank_hits("dijet spectrum", hits)


def test_reranker_failure_propagates_when_fallback_off(tiny_pipeline):
    pipeline, index = tiny_pipeline(failing_reranker(fallback=False))
    with pytest.raises(RerankerUnavailable):
        pipeline.rank("dijet spectrum fit", index)


def test_reranker_failure_falls_back_to_first_stage_order(tiny_pipeline):
    pipeline, index = tiny_pipeline(failing_reranker(fallback=True))
    retrieved = pipeline.retrieve("dijet spectrum fit", index)
    final = pipeline.rank("dijet spectrum fit", index)
    assert [h.chunk_id for h in final] == [h.chunk_id for h in retrieved[:2]]
    assert [h.rank for h in final] == [1, 2]


def test_answer_over_empty_index_has_no_citations(tiny_store):
    from mitra.corpus import AnalysisRecord
    from mitra.rerank import make_reranker

    tiny_store.add_analysis(AnalysisRecord("an-empty", "Empty", "Nothing ingested yet."))
    embedder = make_embedder(EmbedderConfig(mode="stub", dimension=32, stub_seed=1))
    pipeline = RetrievalPipeline(
        tiny_store,
        embedder,
        make_reranker(RerankerConfig(mode="stub")),
        make_generator(GenerationConfig(mode="stub")),
        PipelineConfig(),
    )
    index = build_fulltext_index(tiny_store, "an-empty", embedder)
    text, citations = pipeline.answer("anything at all", index)
    assert citations == []
    assert "does not contain" in text
