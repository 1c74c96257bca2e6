"""Embedding boundary: remote on-premise server client plus a deterministic
in-process stub, both producing unit-normalized fixed-dimension vectors.

The stub exists because the test suite must exercise the full retrieval
pipeline without any neural model: it hashes each canonical token to a
pseudo-random unit vector and embeds a text as the normalized sum of its
token vectors. An optional synonym table maps surface phrases to canonical
tokens first, which is what lets paraphrased queries land near the document
phrasing the way a trained encoder would.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .errors import DimensionMismatch, EmbedderUnavailable, FormatError, ZeroVector
from .lexical import tokenize
from .wire import RequestsTransport, Transport, TransportError

DEFAULT_DIMENSION = 768
DEFAULT_MAX_BATCH = 32
DEFAULT_MAX_IN_FLIGHT = 4

SynonymTable = dict[tuple[str, ...], str]


@dataclass
class EmbedderConfig:
    mode: str = "stub"  # "remote" | "stub"
    endpoint_url: str | None = None
    dimension: int = DEFAULT_DIMENSION
    stub_seed: int = 0
    synonym_table_path: str | None = None
    max_batch: int = DEFAULT_MAX_BATCH
    timeout_s: float = 30.0
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT

    def __post_init__(self) -> None:
        if self.dimension <= 0:
            raise ValueError("dimension must be positive")
        if self.mode not in ("remote", "stub"):
            raise ValueError(f"unknown embedder mode {self.mode!r}")
        if self.mode == "remote" and not self.endpoint_url:
            raise ValueError("remote embedder requires endpoint_url")


def normalize(vector: np.ndarray) -> np.ndarray:
    """Scale to unit Euclidean norm; rejects the all-zero vector."""
    v = np.asarray(vector, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ZeroVector("cannot normalize a zero vector")
    return v / norm


def load_synonym_table(path: str | Path) -> SynonymTable:
    """Parse a two-column TSV of (surface form, canonical form).

    Surface forms may span several tokens; they are stored as token tuples
    so canonicalization can do longest-match phrase replacement.
    """
    table: SynonymTable = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected two tab-separated columns")
            surface, canonical = parts
            surface_tokens = tuple(tokenize(surface))
            canonical_tokens = tokenize(canonical)
            if not surface_tokens or len(canonical_tokens) != 1:
                raise FormatError(
                    f"{path}:{lineno}: surface must tokenize non-empty and canonical to one token"
                )
            table[surface_tokens] = canonical_tokens[0]
    return table


def canonicalize(tokens: Sequence[str], table: Mapping[tuple[str, ...], str] | None) -> list[str]:
    """Replace synonym-table surface phrases with their canonical token,
    longest match first; tokens without an entry pass through unchanged."""
    if not table:
        return list(tokens)
    longest = max(len(key) for key in table)
    out: list[str] = []
    i = 0
    while i < len(tokens):
        for span in range(min(longest, len(tokens) - i), 0, -1):
            canonical = table.get(tuple(tokens[i : i + span]))
            if canonical is not None:
                out.append(canonical)
                i += span
                break
        else:
            out.append(tokens[i])
            i += 1
    return out


class Embedder(Protocol):
    dimension: int

    def embed_texts(self, texts: Sequence[str], role: str | None = None) -> np.ndarray: ...


class StubEmbedder:
    """Deterministic bag-of-words embedder; same config + text => same vector."""

    def __init__(self, config: EmbedderConfig):
        self.config = config
        self.dimension = config.dimension
        self._synonyms = (
            load_synonym_table(config.synonym_table_path) if config.synonym_table_path else None
        )
        self._token_vectors: dict[str, np.ndarray] = {}
        self._cache_lock = threading.Lock()

    def _token_vector(self, token: str) -> np.ndarray:
        with self._cache_lock:
            cached = self._token_vectors.get(token)
        if cached is not None:
            return cached
        digest = hashlib.blake2b(
            f"{self.config.stub_seed}|{token}".encode("utf-8"), digest_size=8
        ).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        vector = normalize(rng.standard_normal(self.dimension))
        with self._cache_lock:
            self._token_vectors[token] = vector
        return vector

    def embed_texts(self, texts: Sequence[str], role: str | None = None) -> np.ndarray:
        del role  # single-encoder stub; dual-encoder dispatch is a server concern
        vectors = np.empty((len(texts), self.dimension), dtype=np.float64)
        for i, text in enumerate(texts):
            if not text:
                raise ValueError("cannot embed an empty text")
            tokens = canonicalize(tokenize(text), self._synonyms)
            if not tokens:
                tokens = [text.strip().lower()]
            acc = np.zeros(self.dimension, dtype=np.float64)
            # Accumulate in sorted order: float addition is not associative,
            # and token permutations must yield bitwise-identical vectors.
            for token in sorted(tokens):
                acc += self._token_vector(token)
            vectors[i] = normalize(acc)
        return vectors


class RemoteEmbedder:
    """Client for the on-premise embedding server.

    Wire contract: POST {"texts": [...], "role": "query"|"passage"?} to
    endpoint_url, response {"vectors": [[...]]} in the same order. The role
    field lets a dual-encoder server dispatch; servers may ignore it.
    """

    def __init__(self, config: EmbedderConfig, transport: Transport | None = None):
        self.config = config
        self.dimension = config.dimension
        self._transport = transport or RequestsTransport()
        self._gate = threading.BoundedSemaphore(config.max_in_flight)

    def embed_texts(self, texts: Sequence[str], role: str | None = None) -> np.ndarray:
        for text in texts:
            if not text:
                raise ValueError("cannot embed an empty text")
        vectors = np.empty((len(texts), self.dimension), dtype=np.float64)
        for start in range(0, len(texts), self.config.max_batch):
            batch = list(texts[start : start + self.config.max_batch])
            payload: dict = {"texts": batch}
            if role is not None:
                payload["role"] = role
            try:
                with self._gate:
                    data = self._transport.post_json(
                        self.config.endpoint_url, payload, self.config.timeout_s
                    )
            except TransportError as exc:
                raise EmbedderUnavailable(str(exc)) from exc
            returned = data.get("vectors") if isinstance(data, dict) else None
            if not isinstance(returned, list) or len(returned) != len(batch):
                raise DimensionMismatch(
                    f"server returned {len(returned) if isinstance(returned, list) else 'no'} "
                    f"vectors for a batch of {len(batch)}"
                )
            for offset, values in enumerate(returned):
                if len(values) != self.dimension:
                    raise DimensionMismatch(
                        f"server returned a {len(values)}-dimensional vector, "
                        f"expected {self.dimension}"
                    )
                vectors[start + offset] = normalize(np.asarray(values, dtype=np.float64))
        return vectors


def embed_texts(
    texts: Sequence[str], config: EmbedderConfig, transport: Transport | None = None, role: str | None = None
) -> np.ndarray:
    return make_embedder(config, transport).embed_texts(texts, role=role)


def make_embedder(config: EmbedderConfig, transport: Transport | None = None) -> Embedder:
    if config.mode == "stub":
        return StubEmbedder(config)
    return RemoteEmbedder(config, transport)
