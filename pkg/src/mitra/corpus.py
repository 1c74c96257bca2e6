"""Analysis/document/chunk hierarchy and its line-delimited JSON persistence.

A corpus holds analyses (each with exactly one abstract), versioned documents
owned by an analysis, and the paragraph chunks derived from each document
body. Chunk identifiers are ``"<doc_id>#<ordinal>"`` with ordinals contiguous
from 0, so re-ingesting a newer document version atomically replaces all of
its chunks.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

from .errors import FormatError, StaleVersion, UnknownAnalysis

MIN_PARAGRAPH_CHARS = 20

_BLANK_LINE_RE = re.compile(r"\n[ \t]*\n+")


def split_paragraphs(body_text: str, min_chars: int = MIN_PARAGRAPH_CHARS) -> list[str]:
    """Split document text into paragraph chunks.

    Line endings are normalized to ``"\\n"``, the text is split on runs of
    blank lines, and each paragraph is stripped. Fragments shorter than
    ``min_chars`` (stray headings, list markers) are folded into the
    following paragraph, or into the preceding one when they end the
    document, so they never become chunks of their own.
    """
    normalized = body_text.replace("\r\n", "\n").replace("\r", "\n")
    paragraphs = [p.strip() for p in _BLANK_LINE_RE.split(normalized)]
    paragraphs = [p for p in paragraphs if p]

    merged: list[str] = []
    pending = ""
    for para in paragraphs:
        candidate = f"{pending}\n{para}" if pending else para
        if len(candidate) < min_chars:
            pending = candidate
            continue
        merged.append(candidate)
        pending = ""
    if pending:
        if merged:
            merged[-1] = f"{merged[-1]}\n{pending}"
        else:
            merged.append(pending)
    return merged


@dataclass(frozen=True)
class AnalysisRecord:
    """One physics analysis: an opaque key, a title, and its abstract."""

    analysis_id: str
    title: str
    abstract_text: str

    def __post_init__(self) -> None:
        if not self.analysis_id:
            raise ValueError("analysis_id must be non-empty")
        if not self.abstract_text.strip():
            raise ValueError(f"analysis {self.analysis_id!r} needs a non-empty abstract")


@dataclass(frozen=True)
class Document:
    """A versioned source document owned by exactly one analysis."""

    doc_id: str
    analysis_id: str
    body_text: str
    version: int = 1

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise ValueError("doc_id must be non-empty")


@dataclass(frozen=True)
class Chunk:
    """A paragraph-level retrieval unit with a stable identifier."""

    chunk_id: str
    analysis_id: str
    doc_id: str
    ordinal: int
    text: str


class CorpusStore:
    """In-memory corpus with referential integrity between its three layers.

    Mutations are single-writer; once ingestion settles the store can be
    shared across threads for reading.
    """

    def __init__(self) -> None:
        self.analyses: dict[str, AnalysisRecord] = {}
        self.documents: dict[str, Document] = {}
        self.chunks: dict[str, Chunk] = {}
        self._doc_chunk_ids: dict[str, list[str]] = {}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CorpusStore):
            return NotImplemented
        return (
            self.analyses == other.analyses
            and self.documents == other.documents
            and self.chunks == other.chunks
        )

    def add_analysis(self, record: AnalysisRecord) -> None:
        """Register (or refresh) an analysis record."""
        self.analyses[record.analysis_id] = record

    def ingest_document(self, doc: Document, min_paragraph_chars: int = MIN_PARAGRAPH_CHARS) -> list[Chunk]:
        """Chunk a document body and store the result.

        A newer version replaces every chunk derived from the prior one.

        Raises:
            UnknownAnalysis: the owning analysis is not registered.
            StaleVersion: doc.version is not greater than the stored version;
                the store is left untouched.
        """
        if doc.analysis_id not in self.analyses:
            raise UnknownAnalysis(f"analysis {doc.analysis_id!r} is not registered")
        stored = self.documents.get(doc.doc_id)
        if stored is not None and doc.version <= stored.version:
            raise StaleVersion(
                f"document {doc.doc_id!r}: incoming version {doc.version} "
                f"<= stored version {stored.version}"
            )

        for chunk_id in self._doc_chunk_ids.pop(doc.doc_id, []):
            del self.chunks[chunk_id]

        created = [
            Chunk(
                chunk_id=f"{doc.doc_id}#{ordinal}",
                analysis_id=doc.analysis_id,
                doc_id=doc.doc_id,
                ordinal=ordinal,
                text=text,
            )
            for ordinal, text in enumerate(split_paragraphs(doc.body_text, min_paragraph_chars))
        ]
        self.documents[doc.doc_id] = doc
        for chunk in created:
            self.chunks[chunk.chunk_id] = chunk
        self._doc_chunk_ids[doc.doc_id] = [c.chunk_id for c in created]
        return created

    def chunks_for_document(self, doc_id: str) -> list[Chunk]:
        return [self.chunks[cid] for cid in self._doc_chunk_ids.get(doc_id, [])]

    def chunks_for_analysis(self, analysis_id: str) -> list[Chunk]:
        """All chunks of an analysis, ordered by (doc_id, ordinal)."""
        if analysis_id not in self.analyses:
            raise UnknownAnalysis(f"analysis {analysis_id!r} is not registered")
        doc_ids = sorted(d.doc_id for d in self.documents.values() if d.analysis_id == analysis_id)
        out: list[Chunk] = []
        for doc_id in doc_ids:
            out.extend(self.chunks_for_document(doc_id))
        return out

    def chunk_text(self, chunk_id: str) -> str:
        return self.chunks[chunk_id].text

    def check_integrity(self) -> None:
        """Raise FormatError if any cross-reference dangles."""
        for doc in self.documents.values():
            if doc.analysis_id not in self.analyses:
                raise FormatError(f"document {doc.doc_id!r} references missing analysis {doc.analysis_id!r}")
        for chunk in self.chunks.values():
            if chunk.doc_id not in self.documents:
                raise FormatError(f"chunk {chunk.chunk_id!r} references missing document {chunk.doc_id!r}")
            if chunk.analysis_id not in self.analyses:
                raise FormatError(f"chunk {chunk.chunk_id!r} references missing analysis {chunk.analysis_id!r}")


def save_corpus(store: CorpusStore, path: str | Path) -> None:
    """Write the store as UTF-8 line-delimited JSON, one record per line."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for analysis in sorted(store.analyses.values(), key=lambda a: a.analysis_id):
            fh.write(json.dumps({"kind": "analysis", **asdict(analysis)}, ensure_ascii=False) + "\n")
        for doc in sorted(store.documents.values(), key=lambda d: d.doc_id):
            fh.write(json.dumps({"kind": "document", **asdict(doc)}, ensure_ascii=False) + "\n")
        for chunk in sorted(store.chunks.values(), key=lambda c: (c.doc_id, c.ordinal)):
            fh.write(json.dumps({"kind": "chunk", **asdict(chunk)}, ensure_ascii=False) + "\n")


def _parse_record(line: str, lineno: int) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"line {lineno}: invalid JSON ({exc})") from exc
    if not isinstance(record, dict) or "kind" not in record:
        raise FormatError(f"line {lineno}: expected an object with a 'kind' field")
    return record


def load_corpus(path: str | Path) -> CorpusStore:
    """Load a store written by save_corpus. Round-trips field-for-field."""
    store = CorpusStore()
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            record = _parse_record(line, lineno)
            kind = record.pop("kind")
            try:
                if kind == "analysis":
                    store.add_analysis(AnalysisRecord(**record))
                elif kind == "document":
                    store.documents[record["doc_id"]] = Document(**record)
                elif kind == "chunk":
                    chunk = Chunk(**record)
                    store.chunks[chunk.chunk_id] = chunk
                    store._doc_chunk_ids.setdefault(chunk.doc_id, []).append(chunk.chunk_id)
                else:
                    raise FormatError(f"line {lineno}: unknown record kind {kind!r}")
            except (TypeError, KeyError, ValueError) as exc:
                raise FormatError(f"line {lineno}: malformed {kind} record ({exc})") from exc
    for chunk_ids in store._doc_chunk_ids.values():
        chunk_ids.sort(key=lambda cid: store.chunks[cid].ordinal)
    store.check_integrity()
    return store


def iter_ingestion_records(path: str | Path) -> Iterable[AnalysisRecord | Document]:
    """Yield records from an ingestion file.

    The external format is UTF-8 line-delimited JSON with ``kind`` in
    {"analysis", "document"}; document bodies arrive already extracted to
    plain text by upstream tooling.
    """
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            record = _parse_record(line, lineno)
            kind = record.pop("kind")
            try:
                if kind == "analysis":
                    yield AnalysisRecord(**record)
                elif kind == "document":
                    record.setdefault("version", 1)
                    yield Document(**record)
                else:
                    raise FormatError(f"line {lineno}: unknown record kind {kind!r}")
            except (TypeError, ValueError) as exc:
                raise FormatError(f"line {lineno}: malformed {kind} record ({exc})") from exc


@dataclass
class IngestStats:
    analyses: int = 0
    documents: int = 0
    chunks: int = 0
    skipped_stale: int = 0


def ingest_file(store: CorpusStore, path: str | Path) -> IngestStats:
    """Apply an ingestion file to a store; stale re-ingests are skipped."""
    stats = IngestStats()
    for record in iter_ingestion_records(path):
        if isinstance(record, AnalysisRecord):
            store.add_analysis(record)
            stats.analyses += 1
        else:
            try:
                created = store.ingest_document(record)
            except StaleVersion:
                stats.skipped_stale += 1
                continue
            stats.documents += 1
            stats.chunks += len(created)
    return stats
