"""In-memory tracking sessions with TTL eviction.

Single-run usage keeps the session count tiny, so the store sweeps expired
entries inline on every access instead of running a reaper thread. A lease
context manager enforces the one-propagate-in-flight rule per session;
violating it raises Conflict, which the wire layer reports as 409.
"""

from __future__ import annotations

import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable

from .errors import Conflict, UnknownSession


@dataclass
class _Session:
    handle: object
    expires: float
    busy: bool = False


class SessionStore:
    def __init__(self, ttl: float = 3600.0, clock: Callable[[], float] = time.monotonic):
        self._ttl = float(ttl)
        self._clock = clock
        self._lock = threading.Lock()
        self._sessions: dict[str, _Session] = {}
        self._counter = 0

    def _sweep(self) -> None:
        now = self._clock()
        dead = [sid for sid, s in self._sessions.items() if s.expires <= now and not s.busy]
        for sid in dead:
            del self._sessions[sid]

    def create(self, handle: object) -> str:
        with self._lock:
            self._sweep()
            self._counter += 1
            sid = f"a{self._counter:06d}"
            self._sessions[sid] = _Session(handle, self._clock() + self._ttl)
        return sid

    def __len__(self) -> int:
        with self._lock:
            self._sweep()
            return len(self._sessions)

    @contextmanager
    def lease(self, session_id: str):
        """Exclusive use of one session for the duration of a propagate."""
        with self._lock:
            self._sweep()
            session = self._sessions.get(session_id)
            if session is None:
                raise UnknownSession(f"no live session {session_id!r}")
            if session.busy:
                raise Conflict(f"a propagate is already in flight for session {session_id!r}")
            session.busy = True
        try:
            yield session.handle
        finally:
            with self._lock:
                session.busy = False
                session.expires = self._clock() + self._ttl
