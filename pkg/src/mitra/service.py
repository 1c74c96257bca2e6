"""HTTP+JSON session service.

Every response body is JSON with a ``kind`` discriminator; errors carry
``error_code`` and ``message``. Request handling is concurrent across
sessions while operations on a single session are serialized by its lock.

Endpoints:
    POST /v1/sessions                     create a session
    POST /v1/sessions/{id}/query          {"text": ...}
    POST /v1/sessions/{id}/confirm        {"accept": true|false}
    POST /v1/sessions/{id}/reset
    GET  /v1/analyses
    GET  /v1/health
    POST /v1/eval/run                     {"gold_paths": [...]}
"""

from __future__ import annotations

import json
import logging
import mimetypes
import re
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import evalkit, session as sessions
from .config import ServiceConfig
from .corpus import CorpusStore, load_corpus
from .embed import make_embedder
from .errors import (
    EmptyCorpus,
    EmptyQuery,
    MissingIndex,
    MitraError,
    NotAwaitingConfirmation,
    QueryBeforeConfirmation,
    UnknownSession,
)
from .generate import make_generator
from .index import TieredIndexSet, load_tiered
from .pipeline import PipelineConfig, RetrievalPipeline
from .rerank import make_reranker
from .report import format_tables
from .wire import Transport

log = logging.getLogger(__name__)

_SESSION_ROUTE = re.compile(r"^/v1/sessions/([0-9a-f]{32})/(query|confirm|reset)$")

_ERROR_STATUS = {
    "unknown_session": 404,
    "empty_query": 400,
    "query_before_confirmation": 409,
    "not_awaiting_confirmation": 409,
    "empty_corpus": 409,
    "missing_index": 409,
    "bad_request": 400,
    "not_found": 404,
    "internal": 500,
}


class ApiError(Exception):
    def __init__(self, error_code: str, message: str):
        super().__init__(message)
        self.error_code = error_code
        self.status = _ERROR_STATUS.get(error_code, 500)


def _to_api_error(exc: Exception) -> ApiError:
    mapping = [
        (UnknownSession, "unknown_session"),
        (EmptyQuery, "empty_query"),
        (QueryBeforeConfirmation, "query_before_confirmation"),
        (NotAwaitingConfirmation, "not_awaiting_confirmation"),
        (EmptyCorpus, "empty_corpus"),
        (MissingIndex, "missing_index"),
    ]
    for exc_type, code in mapping:
        if isinstance(exc, exc_type):
            return ApiError(code, str(exc))
    if isinstance(exc, MitraError):
        return ApiError("bad_request", str(exc))
    return ApiError("internal", f"{type(exc).__name__}: {exc}")


def _session_payload(state: sessions.Session) -> dict:
    return {
        "kind": "session",
        "session_id": state.session_id,
        "phase": state.phase.value,
        "locked_analysis_id": state.locked_analysis_id,
        "created_at": state.created_at.isoformat(),
        "last_active": state.last_active.isoformat(),
    }


def _outcome_payload(outcome: sessions.QueryOutcome) -> dict:
    if isinstance(outcome, sessions.ConfirmationRequest):
        return {
            "kind": "confirmation_request",
            "analysis_id": outcome.analysis_id,
            "title": outcome.title,
            "abstract_excerpt": outcome.abstract_excerpt,
            "score": outcome.score,
            "alternatives": [
                {"analysis_id": alt.analysis_id, "title": alt.title, "score": alt.score}
                for alt in outcome.alternatives
            ],
        }
    if isinstance(outcome, sessions.Answer):
        return {
            "kind": "answer",
            "text": outcome.text,
            "citations": [
                {
                    "chunk_id": c.chunk_id,
                    "analysis_id": c.analysis_id,
                    "score": c.score,
                    "rank": c.rank,
                    "text": c.text,
                }
                for c in outcome.citations
            ],
        }
    return {"kind": "rejected"}


@dataclass
class ServiceState:
    config: ServiceConfig
    store: CorpusStore
    tiered: TieredIndexSet
    pipeline: RetrievalPipeline
    sessions: sessions.SessionTable
    lock: threading.Lock  # guards tiered-index swaps


def build_state(config: ServiceConfig, transport: Transport | None = None) -> ServiceState:
    """Load persisted artifacts and assemble the runtime object graph."""
    if not config.corpus_path.exists():
        raise MissingIndex(f"corpus snapshot not found at {config.corpus_path}; run ingest first")
    if not (config.index_dir / "manifest.json").exists():
        raise MissingIndex(f"indexes not found under {config.index_dir}; run build-index first")
    store = load_corpus(config.corpus_path)
    tiered = load_tiered(config.index_dir)
    pipeline = RetrievalPipeline(
        store=store,
        embedder=make_embedder(config.embedder, transport),
        reranker=make_reranker(config.reranker, transport),
        generator=make_generator(config.generator, transport),
        config=PipelineConfig(k_retrieve=config.k_retrieve, k_final=config.k_final),
    )
    return ServiceState(
        config=config,
        store=store,
        tiered=tiered,
        pipeline=pipeline,
        sessions=sessions.SessionTable(idle_expiry_s=config.session_idle_expiry_s),
        lock=threading.Lock(),
    )


class _Handler(BaseHTTPRequestHandler):
    server_version = "mitra/0.1"
    state: ServiceState  # set by the server factory

    # -- plumbing ---------------------------------------------------------

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s %s", self.address_string(), fmt % args)

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_error(self, err: ApiError) -> None:
        self._send_json(
            err.status,
            {"kind": "error", "error_code": err.error_code, "message": str(err)},
        )

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            body = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ApiError("bad_request", f"request body is not valid JSON: {exc}") from exc
        if not isinstance(body, dict):
            raise ApiError("bad_request", "request body must be a JSON object")
        return body

    # -- routing ----------------------------------------------------------

    def do_OPTIONS(self) -> None:  # CORS preflight for the web UI
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self) -> None:
        try:
            if self.path == "/v1/health":
                self._handle_health()
            elif self.path == "/v1/analyses":
                self._handle_analyses()
            else:
                self._serve_static()
        except ApiError as err:
            self._send_error(err)
        except Exception as exc:  # pragma: no cover - defensive
            log.exception("unhandled error on GET %s", self.path)
            self._send_error(_to_api_error(exc))

    def do_POST(self) -> None:
        try:
            if self.path == "/v1/sessions":
                self._handle_create_session()
                return
            if self.path == "/v1/eval/run":
                self._handle_eval_run()
                return
            match = _SESSION_ROUTE.match(self.path)
            if match:
                self._handle_session_op(match.group(1), match.group(2))
                return
            raise ApiError("not_found", f"no route for POST {self.path}")
        except ApiError as err:
            self._send_error(err)
        except Exception as exc:
            log.exception("unhandled error on POST %s", self.path)
            self._send_error(_to_api_error(exc))

    # -- handlers ---------------------------------------------------------

    def _handle_health(self) -> None:
        state = self.state
        self._send_json(
            200,
            {
                "kind": "health",
                "status": "ok",
                "analyses": len(state.store.analyses),
                "documents": len(state.store.documents),
                "chunks": len(state.store.chunks),
                "sessions": len(state.sessions),
            },
        )

    def _handle_analyses(self) -> None:
        records = sorted(self.state.store.analyses.values(), key=lambda a: a.analysis_id)
        self._send_json(
            200,
            {
                "kind": "analyses",
                "analyses": [
                    {"analysis_id": a.analysis_id, "title": a.title} for a in records
                ],
            },
        )

    def _handle_create_session(self) -> None:
        self.state.sessions.evict_idle()
        created = self.state.sessions.create()
        self._send_json(201, _session_payload(created))

    def _handle_session_op(self, session_id: str, op: str) -> None:
        state = self.state
        try:
            session = state.sessions.get(session_id)
            op_lock = state.sessions.lock_for(session_id)
        except UnknownSession as exc:
            raise _to_api_error(exc) from exc
        body = self._read_body()
        try:
            with op_lock:
                if op == "query":
                    text = body.get("text")
                    if not isinstance(text, str):
                        raise ApiError("bad_request", "'text' must be a string")
                    with state.lock:
                        tiered = state.tiered
                    outcome = sessions.handle_query(session, text, tiered, state.pipeline)
                    self._send_json(200, _outcome_payload(outcome))
                elif op == "confirm":
                    accept = body.get("accept")
                    if not isinstance(accept, bool):
                        raise ApiError("bad_request", "'accept' must be a boolean")
                    sessions.confirm(session, accept)
                    self._send_json(200, _session_payload(session))
                else:  # reset
                    sessions.reset(session)
                    self._send_json(200, _session_payload(session))
        except ApiError:
            raise
        except Exception as exc:
            raise _to_api_error(exc) from exc

    def _handle_eval_run(self) -> None:
        state = self.state
        body = self._read_body()
        paths = body.get("gold_paths") or ([body["gold_path"]] if "gold_path" in body else None)
        if not paths:
            raise ApiError("bad_request", "provide 'gold_paths' (list) or 'gold_path'")
        gold: list[evalkit.GoldQuery] = []
        for path in paths:
            try:
                gold.extend(evalkit.load_gold(path))
            except (OSError, MitraError) as exc:
                raise ApiError("bad_request", f"cannot load gold file {path}: {exc}") from exc
        try:
            report = evalkit.run_eval(
                state.store,
                state.tiered,
                evalkit.build_bm25_indexes(state.store),
                gold,
                state.pipeline,
            )
        except MitraError as exc:
            raise _to_api_error(exc) from exc
        self._send_json(
            200,
            {"kind": "eval_report", "report": report.to_dict(), "tables": format_tables(report)},
        )

    # -- static UI --------------------------------------------------------

    def _serve_static(self) -> None:
        ui_dir = self.state.config.ui_dir
        if ui_dir is None:
            raise ApiError("not_found", f"no route for GET {self.path}")
        relative = self.path.lstrip("/") or "index.html"
        target = (ui_dir / relative).resolve()
        if not target.is_relative_to(ui_dir.resolve()) or not target.is_file():
            # SPA fallback: unknown (or escaping) paths get the shell page.
            target = (ui_dir / "index.html").resolve()
            if not target.is_file():
                raise ApiError("not_found", f"no route for GET {self.path}")
        body = target.read_bytes()
        content_type = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class MitraService:
    """Threaded HTTP server wrapper; shutdown drains in-flight requests."""

    def __init__(self, state: ServiceState):
        handler = type("BoundHandler", (_Handler,), {"state": state})
        self.state = state
        self._httpd = ThreadingHTTPServer(
            (state.config.listen_host, state.config.listen_port), handler
        )
        self._httpd.daemon_threads = False
        self._thread: threading.Thread | None = None

    @property
    def host(self) -> str:
        return self._httpd.server_address[0]

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def serve_forever(self) -> None:
        log.info("listening on %s", self.base_url)
        self._httpd.serve_forever()

    def start_background(self) -> None:
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    def shutdown(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=10)


def serve(config: ServiceConfig, transport: Transport | None = None) -> MitraService:
    """Build state and bind the listener (callers run serve_forever)."""
    state = build_state(config, transport)
    try:
        return MitraService(state)
    except OSError as exc:
        raise MitraError(f"cannot bind {config.listen_host}:{config.listen_port}: {exc}") from exc
