"""Two-tier conversation state machine.

A fresh session's first query searches the abstracts index and proposes one
candidate analysis. A human must accept or reject that candidate: accepting
locks the session onto the analysis's full-text index for every later query;
rejecting returns to fresh so the user can rephrase. Reset is always legal.
No other transitions exist, and retrieval against a full-text index happens
only while locked — that is what keeps every answer grounded in exactly one
analysis.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Union

from .errors import (
    EmptyCorpus,
    EmptyQuery,
    NotAwaitingConfirmation,
    QueryBeforeConfirmation,
    UnknownSession,
)
from .index import TieredIndexSet
from .pipeline import Citation, RetrievalPipeline

Clock = Callable[[], datetime]


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


class SessionPhase(str, Enum):
    FRESH = "fresh"
    CANDIDATE_PROPOSED = "awaiting_confirmation"
    LOCKED = "locked"


@dataclass
class Session:
    session_id: str
    phase: SessionPhase = SessionPhase.FRESH
    candidate_analysis_id: str | None = None
    candidate_score: float | None = None
    locked_analysis_id: str | None = None
    created_at: datetime = field(default_factory=_utc_now)
    last_active: datetime = field(default_factory=_utc_now)


@dataclass(frozen=True)
class CandidateSummary:
    analysis_id: str
    title: str
    score: float


@dataclass(frozen=True)
class ConfirmationRequest:
    kind = "confirmation_request"
    analysis_id: str
    title: str
    abstract_excerpt: str
    score: float
    alternatives: tuple[CandidateSummary, ...] = ()


@dataclass(frozen=True)
class Answer:
    kind = "answer"
    text: str
    citations: tuple[Citation, ...]


@dataclass(frozen=True)
class Rejected:
    kind = "rejected"


QueryOutcome = Union[ConfirmationRequest, Answer, Rejected]


def create_session(clock: Clock = _utc_now) -> Session:
    now = clock()
    return Session(session_id=uuid.uuid4().hex, created_at=now, last_active=now)


def handle_query(
    session: Session,
    query_text: str,
    tiered: TieredIndexSet,
    pipeline: RetrievalPipeline,
    clock: Clock = _utc_now,
) -> QueryOutcome:
    """Route a query according to the session phase.

    Errors never mutate the session; state advances only on success.
    """
    query = query_text.strip()
    if not query:
        raise EmptyQuery("query text is empty")

    if session.phase is SessionPhase.CANDIDATE_PROPOSED:
        raise QueryBeforeConfirmation(
            f"session {session.session_id} awaits confirmation of "
            f"{session.candidate_analysis_id!r}"
        )

    if session.phase is SessionPhase.FRESH:
        if len(tiered.abstracts) == 0:
            raise EmptyCorpus("no analyses available to search")
        hits = pipeline.propose(query, tiered.abstracts)
        top = hits[0]
        record = pipeline.store.analyses[top.analysis_id]
        excerpt_chars = pipeline.config.abstract_excerpt_chars
        alternatives = tuple(
            CandidateSummary(
                analysis_id=hit.analysis_id,
                title=pipeline.store.analyses[hit.analysis_id].title,
                score=hit.score,
            )
            for hit in hits[1:]
        )
        session.phase = SessionPhase.CANDIDATE_PROPOSED
        session.candidate_analysis_id = top.analysis_id
        session.candidate_score = top.score
        session.last_active = clock()
        return ConfirmationRequest(
            analysis_id=top.analysis_id,
            title=record.title,
            abstract_excerpt=record.abstract_text[:excerpt_chars],
            score=top.score,
            alternatives=alternatives,
        )

    # Locked: retrieval is confined to the locked analysis's full-text index.
    analysis_id = session.locked_analysis_id
    assert analysis_id is not None
    text, citations = pipeline.answer(query, tiered.fulltext[analysis_id])
    session.last_active = clock()
    return Answer(text=text, citations=tuple(citations))


def confirm(session: Session, accept: bool, clock: Clock = _utc_now) -> Session:
    if session.phase is not SessionPhase.CANDIDATE_PROPOSED:
        raise NotAwaitingConfirmation(
            f"session {session.session_id} is {session.phase.value}, not awaiting confirmation"
        )
    if accept:
        session.locked_analysis_id = session.candidate_analysis_id
        session.phase = SessionPhase.LOCKED
    else:
        session.phase = SessionPhase.FRESH
        session.locked_analysis_id = None
    session.candidate_analysis_id = None
    session.candidate_score = None
    session.last_active = clock()
    return session


def reset(session: Session, clock: Clock = _utc_now) -> Session:
    session.phase = SessionPhase.FRESH
    session.candidate_analysis_id = None
    session.candidate_score = None
    session.locked_analysis_id = None
    session.last_active = clock()
    return session


class SessionTable:
    """Concurrent session registry with per-session operation serialization.

    Distinct sessions run fully concurrently; operations on one session are
    serialized by its lock. Sessions idle beyond the expiry are evictable.
    """

    def __init__(self, idle_expiry_s: float = 24 * 3600.0, clock: Clock = _utc_now):
        self.idle_expiry_s = idle_expiry_s
        self._clock = clock
        self._table_lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}

    def __len__(self) -> int:
        with self._table_lock:
            return len(self._sessions)

    def create(self) -> Session:
        session = create_session(self._clock)
        with self._table_lock:
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()
        return session

    def get(self, session_id: str) -> Session:
        with self._table_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        return session

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._table_lock:
            lock = self._locks.get(session_id)
        if lock is None:
            raise UnknownSession(f"no session {session_id!r}")
        return lock

    def evict_idle(self) -> int:
        now = self._clock()
        evicted = 0
        with self._table_lock:
            for session_id in list(self._sessions):
                idle = (now - self._sessions[session_id].last_active).total_seconds()
                if idle > self.idle_expiry_s:
                    del self._sessions[session_id]
                    del self._locks[session_id]
                    evicted += 1
        return evicted
