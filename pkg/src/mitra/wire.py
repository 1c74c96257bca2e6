"""HTTP JSON transport used by every remote model client.

All outbound traffic funnels through a Transport so the privacy boundary can
be audited: tests swap in RecordingTransport and assert that no destination
outside the configured endpoints is ever contacted.
"""

from __future__ import annotations

from typing import Callable, Protocol
from urllib.parse import urlsplit

import requests


class TransportError(Exception):
    def __init__(self, url: str, message: str, timed_out: bool = False):
        super().__init__(f"{url}: {message}")
        self.url = url
        self.timed_out = timed_out


class Transport(Protocol):
    def post_json(self, url: str, payload: dict, timeout: float) -> dict: ...


class RequestsTransport:
    """Default transport over a pooled requests session."""

    def __init__(self, session: requests.Session | None = None):
        self._session = session or requests.Session()

    def post_json(self, url: str, payload: dict, timeout: float) -> dict:
        try:
            response = self._session.post(url, json=payload, timeout=timeout)
            response.raise_for_status()
            return response.json()
        except requests.Timeout as exc:
            raise TransportError(url, str(exc), timed_out=True) from exc
        except requests.RequestException as exc:
            raise TransportError(url, str(exc)) from exc
        except ValueError as exc:  # body is not JSON
            raise TransportError(url, f"non-JSON response ({exc})") from exc


class RecordingTransport:
    """Test double that records every destination before answering.

    `responder(url, payload) -> dict` supplies the fake server behaviour.
    """

    def __init__(self, responder: Callable[[str, dict], dict]):
        self._responder = responder
        self.calls: list[tuple[str, dict]] = []

    def post_json(self, url: str, payload: dict, timeout: float) -> dict:
        self.calls.append((url, payload))
        return self._responder(url, payload)

    def hosts(self) -> set[str]:
        return {urlsplit(url).netloc for url, _ in self.calls}
