import pytest

from mitra.corpus import AnalysisRecord, CorpusStore, Document


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when == "call" and "test_acceptance" in report.nodeid:
        status = "PASS" if report.passed else "FAIL"
        name = report.nodeid.split("::")[-1]
        print(f"\nACCEPTANCE {status} - {name}")
from mitra.embed import EmbedderConfig, make_embedder
from mitra.fixtures import build_fixture_corpus, write_fixtures
from mitra.generate import GenerationConfig, make_generator
from mitra.index import build_tiered_indexes
from mitra.pipeline import PipelineConfig, RetrievalPipeline
from mitra.rerank import RerankerConfig, make_reranker


@pytest.fixture
def tiny_store():
    """Two small analyses with hand-written documents."""
    store = CorpusStore()
    store.add_analysis(
        AnalysisRecord("an-a", "Search for exotic muons", "A study of the muon channel selection.")
    )
    store.add_analysis(
        AnalysisRecord("an-b", "Dijet resonance scan", "A scan of the dijet spectrum for bumps.")
    )
    store.ingest_document(
        Document(
            doc_id="doc-a1",
            analysis_id="an-a",
            body_text=(
                "The muon channel applies an isolation requirement to all candidates.\n\n"
                "Background from misreconstructed tracks is estimated in a sideband."
            ),
        )
    )
    store.ingest_document(
        Document(
            doc_id="doc-b1",
            analysis_id="an-b",
            body_text=(
                "The dijet spectrum is fit with a smooth parametric function.\n\n"
                "Bump hunting proceeds with a sliding window over the spectrum.\n\n"
                "Trigger selection uses the highest threshold unprescaled path."
            ),
        )
    )
    return store


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixtures")
    return write_fixtures(out)


@pytest.fixture(scope="session")
def fixture_corpus():
    store, gold, synonyms = build_fixture_corpus()
    return store, gold, synonyms


@pytest.fixture(scope="session")
def stub_models(fixture_dir):
    synonym_path = str(fixture_dir.synonym_table_path)
    embedder = make_embedder(
        EmbedderConfig(mode="stub", stub_seed=7, synonym_table_path=synonym_path)
    )
    reranker = make_reranker(RerankerConfig(mode="stub", synonym_table_path=synonym_path))
    generator = make_generator(GenerationConfig(mode="stub"))
    return embedder, reranker, generator


@pytest.fixture(scope="session")
def fixture_pipeline(fixture_corpus, stub_models):
    """Store, tiered indexes, and a fully stubbed pipeline over the
    synthetic corpus."""
    store, gold, _ = fixture_corpus
    embedder, reranker, generator = stub_models
    tiered = build_tiered_indexes(store, embedder)
    pipeline = RetrievalPipeline(store, embedder, reranker, generator, PipelineConfig())
    return store, gold, tiered, pipeline
