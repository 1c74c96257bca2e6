"""Exact cosine top-k search and the two-tier index structure.

One global index holds a single vector per analysis abstract; each analysis
additionally gets a dedicated full-text index over its own chunks. Routing a
locked conversation at its analysis's full-text index is what keeps answers
from conflating material across analyses.

Search is exact brute force: every stored vector is unit-normalized, so
cosine similarity is a dot product and a full scoring pass plus a sort is
both deterministic and fast at the corpus sizes this serves (thousands of
chunks per analysis). Approximate methods are a deliberate non-goal.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyCorpus, FormatError, UnknownAnalysis

if TYPE_CHECKING:
    from .corpus import CorpusStore
    from .embed import Embedder

_MAGIC = b"MVIX"
_FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")  # magic, version, dimension, entry count
_ID_LEN = struct.Struct("<H")

# Vectors are quantized to float32 at build time so the in-memory index and
# its on-disk form score identically after a round trip.
_NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class RankedHit:
    """One scored retrieval result; ranks are 1-based and contiguous."""

    chunk_id: str
    analysis_id: str
    score: float
    rank: int


class VectorIndex:
    """Immutable exact-search index over unit-normalized embeddings."""

    def __init__(
        self,
        chunk_ids: Sequence[str],
        analysis_ids: Sequence[str],
        vectors: np.ndarray,
        dimension: int,
    ):
        if len(chunk_ids) != len(analysis_ids):
            raise ValueError("chunk_ids and analysis_ids must align")
        vectors = np.asarray(vectors, dtype=np.float32).reshape(len(chunk_ids), dimension)
        if len(set(chunk_ids)) != len(chunk_ids):
            raise ValueError("chunk_ids must be unique within an index")
        if len(chunk_ids):
            norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
            if not np.allclose(norms, 1.0, atol=_NORM_TOLERANCE):
                raise ValueError("index vectors must be unit-normalized")
        self.chunk_ids = list(chunk_ids)
        self.analysis_ids = list(analysis_ids)
        self.vectors = vectors
        self.dimension = int(dimension)
        self._ids_array = np.asarray(self.chunk_ids, dtype=object)
        self._matrix64 = vectors.astype(np.float64)

    def __len__(self) -> int:
        return len(self.chunk_ids)

    def entries(self) -> Iterator[tuple[str, str, np.ndarray]]:
        for i, chunk_id in enumerate(self.chunk_ids):
            yield chunk_id, self.analysis_ids[i], self.vectors[i]


def search_topk(index: VectorIndex, query_vec: np.ndarray, k: int) -> list[RankedHit]:
    """Return the min(k, |index|) entries with the highest cosine similarity.

    Scores are dot products over the pre-normalized vectors, computed in
    float64. Ties break by ascending chunk_id, which makes
    ``search_topk(q, k)`` a strict prefix of ``search_topk(q, k + 1)``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query = np.asarray(query_vec, dtype=np.float64).reshape(-1)
    if query.shape[0] != index.dimension:
        raise DimensionMismatch(
            f"query has dimension {query.shape[0]}, index expects {index.dimension}"
        )
    if len(index) == 0:
        return []
    scores = index._matrix64 @ query
    order = np.lexsort((index._ids_array, -scores))
    top = order[: min(k, len(order))]
    return [
        RankedHit(
            chunk_id=index.chunk_ids[i],
            analysis_id=index.analysis_ids[i],
            score=float(scores[i]),
            rank=rank,
        )
        for rank, i in enumerate(top, start=1)
    ]


def build_abstracts_index(store: "CorpusStore", embedder: "Embedder") -> VectorIndex:
    """One entry per analysis; the entry id is the analysis_id itself."""
    analyses = sorted(store.analyses.values(), key=lambda a: a.analysis_id)
    if not analyses:
        raise EmptyCorpus("cannot build an abstracts index over an empty corpus")
    vectors = embedder.embed_texts([a.abstract_text for a in analyses], role="passage")
    ids = [a.analysis_id for a in analyses]
    return VectorIndex(ids, ids, vectors, embedder.dimension)


def build_fulltext_index(store: "CorpusStore", analysis_id: str, embedder: "Embedder") -> VectorIndex:
    """Index every chunk of every document owned by one analysis."""
    if analysis_id not in store.analyses:
        raise UnknownAnalysis(f"analysis {analysis_id!r} is not registered")
    chunks = store.chunks_for_analysis(analysis_id)
    if not chunks:
        return VectorIndex([], [], np.empty((0, embedder.dimension), dtype=np.float32), embedder.dimension)
    vectors = embedder.embed_texts([c.text for c in chunks], role="passage")
    return VectorIndex(
        [c.chunk_id for c in chunks],
        [c.analysis_id for c in chunks],
        vectors,
        embedder.dimension,
    )


def save_index(index: VectorIndex, path: str | Path) -> None:
    """Binary layout: header, then per entry two length-prefixed UTF-8 ids
    followed by `dimension` little-endian float32 values."""
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _FORMAT_VERSION, index.dimension, len(index)))
        for chunk_id, analysis_id, vector in index.entries():
            for ident in (chunk_id, analysis_id):
                raw = ident.encode("utf-8")
                if len(raw) > 0xFFFF:
                    raise ValueError(f"id too long to serialize: {ident[:40]!r}...")
                fh.write(_ID_LEN.pack(len(raw)))
                fh.write(raw)
            fh.write(vector.astype("<f4").tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"truncated index file while reading {what}")
    return data


def load_index(path: str | Path) -> VectorIndex:
    with Path(path).open("rb") as fh:
        magic, version, dimension, count = _HEADER.unpack(_read_exact(fh, _HEADER.size, "header"))
        if magic != _MAGIC:
            raise FormatError(f"bad magic {magic!r}; not an index file")
        if version != _FORMAT_VERSION:
            raise FormatError(f"unsupported index format version {version}")
        chunk_ids: list[str] = []
        analysis_ids: list[str] = []
        vectors = np.empty((count, dimension), dtype=np.float32)
        for i in range(count):
            for target in (chunk_ids, analysis_ids):
                (id_len,) = _ID_LEN.unpack(_read_exact(fh, _ID_LEN.size, "id length"))
                try:
                    target.append(_read_exact(fh, id_len, "id bytes").decode("utf-8"))
                except UnicodeDecodeError as exc:
                    raise FormatError(f"undecodable id in entry {i}: {exc}") from exc
            vectors[i] = np.frombuffer(
                _read_exact(fh, 4 * dimension, f"vector payload of entry {i}"), dtype="<f4"
            )
        if fh.read(1):
            raise FormatError("trailing bytes after final entry")
    try:
        return VectorIndex(chunk_ids, analysis_ids, vectors, dimension)
    except ValueError as exc:
        raise FormatError(f"invalid index payload: {exc}") from exc


@dataclass
class TieredIndexSet:
    """The two-tier structure: abstracts index plus one full-text index per
    analysis. Key sets always match, even for analyses with no documents."""

    abstracts: VectorIndex
    fulltext: dict[str, VectorIndex]

    def validate(self) -> None:
        abstract_keys = set(self.abstracts.chunk_ids)
        fulltext_keys = set(self.fulltext)
        if abstract_keys != fulltext_keys:
            missing = abstract_keys ^ fulltext_keys
            raise ValueError(f"tier key sets disagree on: {sorted(missing)}")


def build_tiered_indexes(store: "CorpusStore", embedder: "Embedder") -> TieredIndexSet:
    abstracts = build_abstracts_index(store, embedder)
    fulltext = {
        analysis_id: build_fulltext_index(store, analysis_id, embedder)
        for analysis_id in store.analyses
    }
    tiered = TieredIndexSet(abstracts=abstracts, fulltext=fulltext)
    tiered.validate()
    return tiered


def save_tiered(tiered: TieredIndexSet, directory: str | Path) -> None:
    """Persist as one file per index plus a manifest mapping analysis ids to
    file names (analysis ids are opaque and may not be filesystem-safe)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_index(tiered.abstracts, directory / "abstracts.vidx")
    manifest: dict[str, str] = {}
    for i, analysis_id in enumerate(sorted(tiered.fulltext)):
        filename = f"fulltext-{i:04d}.vidx"
        save_index(tiered.fulltext[analysis_id], directory / filename)
        manifest[analysis_id] = filename
    (directory / "manifest.json").write_text(
        json.dumps({"abstracts": "abstracts.vidx", "fulltext": manifest}, indent=2),
        encoding="utf-8",
    )


def load_tiered(directory: str | Path) -> TieredIndexSet:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"corrupt index manifest {manifest_path}: {exc}") from exc
    abstracts = load_index(directory / manifest["abstracts"])
    fulltext = {
        analysis_id: load_index(directory / filename)
        for analysis_id, filename in manifest["fulltext"].items()
    }
    tiered = TieredIndexSet(abstracts=abstracts, fulltext=fulltext)
    try:
        tiered.validate()
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    return tiered
