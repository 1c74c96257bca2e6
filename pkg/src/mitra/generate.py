"""Grounded answer generation against a locally served model.

The prompt layer is the hallucination defence: the model only ever sees the
reranked passages plus an instruction to stay inside them. Remote mode talks
to a local generation server; stub mode deterministically echoes the chunk
ids it finds in the prompt, which is enough to test citation plumbing end to
end without a model.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from typing import Protocol, Sequence

from .errors import GenerationTimeout, GeneratorUnavailable
from .index import RankedHit
from .wire import RequestsTransport, Transport, TransportError

GROUNDING_SENTENCE = (
    "Answer strictly and only from the numbered context passages above; "
    "if the context does not contain the answer, say so."
)

DEFAULT_PREAMBLE = (
    "You are an assistant answering questions about a single internal analysis. "
    + GROUNDING_SENTENCE
)

NO_CONTEXT_MARKER = "NO CONTEXT AVAILABLE"

_CHUNK_HEADER_RE = re.compile(r"^\[\d+\] \((.+)\)$", re.MULTILINE)


@dataclass
class GenerationConfig:
    mode: str = "stub"  # "remote" | "stub"
    endpoint_url: str | None = None
    model_name: str = "local-model"
    max_context_chars: int = 12000
    grounding_preamble: str = DEFAULT_PREAMBLE
    timeout_s: float = 60.0
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.max_context_chars <= 0:
            raise ValueError("max_context_chars must be positive")
        if self.mode not in ("remote", "stub"):
            raise ValueError(f"unknown generator mode {self.mode!r}")
        if self.mode == "remote" and not self.endpoint_url:
            raise ValueError("remote generator requires endpoint_url")


def assemble_prompt(
    query: str, passages: Sequence[tuple[RankedHit, str]], config: GenerationConfig
) -> str:
    """Build the grounding prompt: preamble, numbered passages, question.

    Each passage is headed ``[i] (chunk_id)`` in rank order. When the
    assembled prompt would exceed max_context_chars, passages are dropped
    from the tail (lowest rank first); the rank-1 passage is always kept.
    """
    preamble = config.grounding_preamble
    if GROUNDING_SENTENCE not in preamble:
        preamble = f"{preamble}\n{GROUNDING_SENTENCE}"

    question_block = f"Question: {query}\nAnswer:"
    if not passages:
        return f"{preamble}\n\n{NO_CONTEXT_MARKER}\n\n{question_block}"

    blocks = [f"[{hit.rank}] ({hit.chunk_id})\n{text}" for hit, text in passages]
    fixed_length = len(preamble) + len(question_block) + 4  # the four joining newlines
    kept: list[str] = []
    used = fixed_length
    for block in blocks:
        cost = len(block) + (2 if kept else 0)
        if kept and used + cost > config.max_context_chars:
            break
        kept.append(block)
        used += cost
    passage_section = "\n\n".join(kept)
    return f"{preamble}\n\n{passage_section}\n\n{question_block}"


def chunk_ids_in_prompt(prompt: str) -> list[str]:
    """Chunk ids named by the prompt's passage headers, in order."""
    return _CHUNK_HEADER_RE.findall(prompt)


class Generator(Protocol):
    config: GenerationConfig

    def generate(self, prompt: str) -> str: ...


class StubGenerator:
    """Echoes the cited chunk ids; byte-identical for identical prompts."""

    def __init__(self, config: GenerationConfig):
        self.config = config

    def generate(self, prompt: str) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        ids = chunk_ids_in_prompt(prompt)
        if not ids:
            return "The provided context does not contain the answer."
        return "Grounded stub answer citing: " + ", ".join(ids) + "."


class RemoteGenerator:
    """Client for the local generation server.

    Wire contract: POST {"model": ..., "prompt": ..., "stream": false} to
    endpoint_url, response {"response": "..."} — the de-facto local model
    server convention. The model name passes through verbatim.
    """

    def __init__(self, config: GenerationConfig, transport: Transport | None = None):
        self.config = config
        self._transport = transport or RequestsTransport()
        self._gate = threading.BoundedSemaphore(config.max_in_flight)

    def generate(self, prompt: str) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        payload = {"model": self.config.model_name, "prompt": prompt, "stream": False}
        try:
            with self._gate:
                data = self._transport.post_json(
                    self.config.endpoint_url, payload, self.config.timeout_s
                )
        except TransportError as exc:
            if exc.timed_out:
                raise GenerationTimeout(str(exc)) from exc
            raise GeneratorUnavailable(str(exc)) from exc
        response = data.get("response") if isinstance(data, dict) else None
        if not isinstance(response, str):
            raise GeneratorUnavailable("server response lacks a 'response' string")
        return response


def generate_answer(prompt: str, config: GenerationConfig, transport: Transport | None = None) -> str:
    return make_generator(config, transport).generate(prompt)


def make_generator(config: GenerationConfig, transport: Transport | None = None) -> Generator:
    if config.mode == "stub":
        return StubGenerator(config)
    return RemoteGenerator(config, transport)
