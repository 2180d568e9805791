"""HTTP clients for remote backends, built on requests.

Every call makes up to three attempts with exponential backoff (1s, 2s by
default; override the base via RVOS_RETRY_BASE for fast tests). Only
transport-level failures are retried: connection errors, timeouts, and
gateway statuses. Anything else maps straight to a typed error.
"""

from __future__ import annotations

import os
import time

import requests

from ..errors import Timeout, Transport
from ..masks import RleMask, rle_to_text
from . import wire
from .protocol import (
    ChatRequest,
    SegmentCandidate,
    SegmentRequest,
    TrackSession,
)

ATTEMPTS = 3
_RETRY_STATUSES = (502, 503, 504)
DEFAULT_TIMEOUT = 60.0


def _backoff_base() -> float:
    return float(os.environ.get("RVOS_RETRY_BASE", "1.0"))


def _post(base_url: str, path: str, body: dict, timeout: float) -> dict:
    url = base_url.rstrip("/") + path
    base = _backoff_base()
    last: Exception | None = None
    for attempt in range(ATTEMPTS):
        if attempt:
            time.sleep(base * (2 ** (attempt - 1)))
        try:
            resp = requests.post(url, json=body, timeout=timeout)
        except requests.Timeout as e:
            last = Timeout(f"{url}: {e}")
            continue
        except requests.RequestException as e:
            last = Transport(f"{url}: {e}")
            continue
        if resp.status_code in _RETRY_STATUSES:
            try:
                payload = resp.json()
            except ValueError:
                payload = {"code": "transport", "message": resp.text[:200]}
            last = Timeout(payload.get("message", "")) if resp.status_code == 504 else Transport(
                f"{url}: {payload.get('code')}: {payload.get('message')}"
            )
            continue
        if resp.status_code != 200:
            try:
                payload = resp.json()
            except ValueError:
                payload = {"code": "internal", "message": resp.text[:200]}
            wire.raise_from_wire(resp.status_code, payload)
        try:
            return resp.json()
        except ValueError as e:
            raise Transport(f"{url}: non-JSON body in 200 response: {e}") from e
    assert last is not None
    raise last


class HttpChat:
    def __init__(self, base_url: str, timeout: float = DEFAULT_TIMEOUT):
        self.base_url = base_url
        self.timeout = timeout

    def complete(self, req: ChatRequest) -> str:
        body = wire.chat_request_to_wire(req)
        return str(_post(self.base_url, wire.CHAT_PATH, body, self.timeout)["text"])


class HttpSegmenter:
    def __init__(self, base_url: str, timeout: float = DEFAULT_TIMEOUT):
        self.base_url = base_url
        self.timeout = timeout

    def segment(self, req: SegmentRequest) -> list[SegmentCandidate]:
        body = wire.segment_request_to_wire(req)
        return wire.candidates_from_wire(_post(self.base_url, wire.SEGMENT_PATH, body, self.timeout))


class HttpTracker:
    def __init__(self, base_url: str, timeout: float = DEFAULT_TIMEOUT):
        self.base_url = base_url
        self.timeout = timeout

    def init(self, clip_id: str, frame_index: int, seed: RleMask) -> TrackSession:
        body = {"clip": clip_id, "frame_index": frame_index, "seed_rle": rle_to_text(seed)}
        resp = _post(self.base_url, wire.TRACK_INIT_PATH, body, self.timeout)
        return TrackSession(
            session_id=str(resp["session_id"]),
            clip_id=clip_id,
            frame_index=frame_index,
            seed=seed,
        )

    def propagate(self, session_id: str, direction: str) -> list[tuple[int, RleMask]]:
        body = {"session_id": session_id, "direction": direction}
        return wire.masks_from_wire(_post(self.base_url, wire.TRACK_PROPAGATE_PATH, body, self.timeout))
