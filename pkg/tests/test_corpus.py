import json

import pytest
from hypothesis import given, strategies as st

from mitra.corpus import (
    AnalysisRecord,
    CorpusStore,
    Document,
    IngestStats,
    ingest_file,
    load_corpus,
    save_corpus,
    split_paragraphs,
)
from mitra.errors import FormatError, StaleVersion, UnknownAnalysis

LONG_A = "para one is long enough to stand alone here"
LONG_B = "para two is also long enough to stand alone"


class TestSplitParagraphs:
    def test_short_fragment_merges_into_following(self):
        assert split_paragraphs("A.\n\nB.") == ["A.\nB."]

    def test_empty_input(self):
        assert split_paragraphs("") == []
        assert split_paragraphs("   \n\n \n") == []

    def test_blank_line_split_preserves_order(self):
        assert split_paragraphs(f"{LONG_A}\n\n\n{LONG_B}") == [LONG_A, LONG_B]

    def test_crlf_normalized(self):
        assert split_paragraphs(f"{LONG_A}\r\n\r\n{LONG_B}") == [LONG_A, LONG_B]

    def test_short_heading_folds_forward(self):
        chunks = split_paragraphs(f"Intro\n\n{LONG_A}")
        assert chunks == [f"Intro\n{LONG_A}"]

    def test_short_tail_folds_backward(self):
        chunks = split_paragraphs(f"{LONG_A}\n\nfin.")
        assert chunks == [f"{LONG_A}\nfin."]

    def test_single_short_paragraph_survives_alone(self):
        assert split_paragraphs("A.") == ["A."]

    def test_threshold_configurable(self):
        assert split_paragraphs("A.\n\nB.", min_chars=1) == ["A.", "B."]

    def test_chunks_joined_by_blank_line_reproduce_normalized_body(self, tiny_store):
        # The normalized body is defined as the blank-line join of the
        # chunks; splitting it again must land on the same chunk list.
        for doc_id in tiny_store.documents:
            chunks = [c.text for c in tiny_store.chunks_for_document(doc_id)]
            normalized = "\n\n".join(chunks)
            assert split_paragraphs(normalized) == chunks

    @given(st.text(max_size=400))
    def test_deterministic_and_conserves_text(self, body):
        first = split_paragraphs(body)
        assert first == split_paragraphs(body)
        # No characters beyond whitespace are invented or dropped.
        squash = lambda s: "".join(s.split())
        assert squash("".join(first)) == squash(body)
        assert all(p.strip() for p in first)


class TestIngest:
    def test_reingest_higher_version_replaces_chunks(self, tiny_store):
        before = {c.chunk_id for c in tiny_store.chunks_for_document("doc-a1")}
        assert len(before) == 2
        created = tiny_store.ingest_document(
            Document(
                doc_id="doc-a1",
                analysis_id="an-a",
                body_text="Only one paragraph remains after the rewrite of this note.",
                version=2,
            )
        )
        after = tiny_store.chunks_for_document("doc-a1")
        assert [c.chunk_id for c in after] == [c.chunk_id for c in created] == ["doc-a1#0"]
        assert tiny_store.documents["doc-a1"].version == 2
        assert not before & {c.chunk_id for c in after} - {"doc-a1#0"}

    def test_unknown_analysis_rejected(self, tiny_store):
        with pytest.raises(UnknownAnalysis):
            tiny_store.ingest_document(
                Document(doc_id="doc-x", analysis_id="nope", body_text="whatever text")
            )

    def test_same_version_is_stale_and_store_unchanged(self, tiny_store):
        snapshot = dict(tiny_store.chunks)
        with pytest.raises(StaleVersion):
            tiny_store.ingest_document(
                Document(
                    doc_id="doc-a1",
                    analysis_id="an-a",
                    body_text="different text that should never land anywhere",
                    version=1,
                )
            )
        assert tiny_store.chunks == snapshot

    def test_version_never_decreases(self, tiny_store):
        tiny_store.ingest_document(
            Document(doc_id="doc-a1", analysis_id="an-a", body_text="newer body text here", version=5)
        )
        with pytest.raises(StaleVersion):
            tiny_store.ingest_document(
                Document(doc_id="doc-a1", analysis_id="an-a", body_text="older body", version=3)
            )
        assert tiny_store.documents["doc-a1"].version == 5

    def test_ordinals_contiguous_and_ids_stable(self, tiny_store):
        chunks = tiny_store.chunks_for_document("doc-b1")
        assert [c.ordinal for c in chunks] == [0, 1, 2]
        assert [c.chunk_id for c in chunks] == ["doc-b1#0", "doc-b1#1", "doc-b1#2"]

    def test_referential_integrity_after_interleaving(self, tiny_store):
        tiny_store.ingest_document(
            Document(doc_id="doc-a2", analysis_id="an-a", body_text="another note body for muons")
        )
        tiny_store.ingest_document(
            Document(
                doc_id="doc-b1",
                analysis_id="an-b",
                body_text="replacement body for the dijet scan documentation",
                version=2,
            )
        )
        tiny_store.check_integrity()


class TestPersistence:
    def test_empty_store_round_trips(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        save_corpus(CorpusStore(), path)
        assert load_corpus(path) == CorpusStore()

    def test_populated_store_round_trips(self, tmp_path, tiny_store):
        tiny_store.add_analysis(AnalysisRecord("an-c", "Third", "Another abstract entirely."))
        for i in range(3):
            tiny_store.ingest_document(
                Document(
                    doc_id=f"doc-c{i}",
                    analysis_id="an-c",
                    body_text=f"body {i} with enough length to form a single paragraph chunk",
                )
            )
        path = tmp_path / "store.jsonl"
        save_corpus(tiny_store, path)
        loaded = load_corpus(path)
        assert loaded == tiny_store
        assert loaded.chunks_for_analysis("an-c") == tiny_store.chunks_for_analysis("an-c")

    def test_truncated_file_raises_format_error(self, tmp_path, tiny_store):
        path = tmp_path / "store.jsonl"
        save_corpus(tiny_store, path)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) - 20])
        with pytest.raises(FormatError):
            load_corpus(path)

    def test_garbage_line_raises_format_error(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"kind": "analysis"\n', encoding="utf-8")
        with pytest.raises(FormatError):
            load_corpus(path)

    def test_unknown_kind_raises_format_error(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"kind": "mystery", "x": 1}\n', encoding="utf-8")
        with pytest.raises(FormatError):
            load_corpus(path)

    def test_dangling_reference_raises_format_error(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        record = {
            "kind": "chunk",
            "chunk_id": "d#0",
            "analysis_id": "missing",
            "doc_id": "d",
            "ordinal": 0,
            "text": "orphan",
        }
        path.write_text(json.dumps(record) + "\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_corpus(path)


class TestIngestionFile:
    def test_ingest_file_applies_records(self, tmp_path):
        path = tmp_path / "in.jsonl"
        lines = [
            {"kind": "analysis", "analysis_id": "a1", "title": "T", "abstract_text": "An abstract."},
            {
                "kind": "document",
                "doc_id": "d1",
                "analysis_id": "a1",
                "body_text": "one paragraph with plenty of characters\n\nand a second long enough paragraph",
            },
        ]
        path.write_text("".join(json.dumps(x) + "\n" for x in lines), encoding="utf-8")
        store = CorpusStore()
        stats = ingest_file(store, path)
        assert stats == IngestStats(analyses=1, documents=1, chunks=2, skipped_stale=0)
        # Re-applying the same file only skips the now-stale document.
        stats = ingest_file(store, path)
        assert stats == IngestStats(analyses=1, documents=0, chunks=0, skipped_stale=1)

    def test_document_before_analysis_fails(self, tmp_path):
        path = tmp_path / "in.jsonl"
        path.write_text(
            json.dumps(
                {"kind": "document", "doc_id": "d1", "analysis_id": "a1", "body_text": "text body"}
            )
            + "\n",
            encoding="utf-8",
        )
        with pytest.raises(UnknownAnalysis):
            ingest_file(CorpusStore(), path)
