import json

from mitra.config import load_config
from mitra.corpus import CorpusStore, ingest_file
from mitra.embed import load_synonym_table
from mitra.evalkit import load_gold
from mitra.fixtures import build_fixture_corpus
from mitra.lexical import tokenize


class TestFixtureCorpus:
    def test_scale_contract(self, fixture_corpus):
        store, gold, synonyms = fixture_corpus
        assert len(store.analyses) >= 10
        for analysis_id in store.analyses:
            assert len(store.chunks_for_analysis(analysis_id)) >= 20
        for label in ("set1", "set2"):
            assert sum(1 for q in gold if q.set_label == label) >= 16

    def test_gold_labels_reference_real_chunks(self, fixture_corpus):
        store, gold, _ = fixture_corpus
        for query in gold:
            for chunk_id in query.relevant_chunk_ids:
                assert chunk_id in store.chunks
                assert store.chunks[chunk_id].analysis_id == query.analysis_id

    def test_paraphrase_vocabulary_never_leaks_into_documents(self, fixture_corpus):
        store, gold, synonyms = fixture_corpus
        doc_vocab = set()
        for chunk in store.chunks.values():
            doc_vocab.update(tokenize(chunk.text))
        for surface, canonical in synonyms:
            assert canonical in doc_vocab  # the jargon term is real document language
            for token in tokenize(surface):
                assert token not in doc_vocab  # the paraphrase is query-only language

    def test_exact_phrase_queries_are_substrings_of_their_chunk(self, fixture_corpus):
        store, gold, _ = fixture_corpus
        for query in gold:
            if query.set_label != "set1":
                continue
            (chunk_id,) = query.relevant_chunk_ids
            assert query.query_text in store.chunks[chunk_id].text

    def test_deterministic_for_same_seed(self):
        a_store, a_gold, _ = build_fixture_corpus(seed=5)
        b_store, b_gold, _ = build_fixture_corpus(seed=5)
        assert a_store == b_store
        assert a_gold == b_gold


class TestWrittenFixtures:
    def test_corpus_file_ingestable(self, fixture_dir, tmp_path):
        store = CorpusStore()
        stats = ingest_file(store, fixture_dir.corpus_path)
        assert stats.analyses == fixture_dir.n_analyses
        assert stats.chunks == fixture_dir.n_chunks

    def test_gold_files_loadable(self, fixture_dir):
        for label, path in fixture_dir.gold_paths.items():
            queries = load_gold(path)
            assert queries and all(q.set_label == label for q in queries)

    def test_synonym_table_loadable(self, fixture_dir):
        table = load_synonym_table(fixture_dir.synonym_table_path)
        assert len(table) == 24

    def test_emitted_config_loads_in_stub_mode(self, fixture_dir):
        config = load_config(fixture_dir.config_path)
        assert config.embedder.mode == "stub"
        assert config.reranker.mode == "stub"
        assert config.generator.mode == "stub"
        assert config.embedder.synonym_table_path.endswith("synonyms.tsv")
        assert config.k_final <= config.k_retrieve

    def test_config_is_valid_json_with_expected_paths(self, fixture_dir):
        raw = json.loads(fixture_dir.config_path.read_text(encoding="utf-8"))
        assert raw["embedder"]["dimension"] == 768
