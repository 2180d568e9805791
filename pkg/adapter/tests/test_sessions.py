import pytest

from rvos_adapter.errors import Conflict, UnknownSession
from rvos_adapter.sessions import SessionStore


class Clock:
    def __init__(self):
        self.now = 0.0

    def __call__(self) -> float:
        return self.now


def test_create_and_lease():
    store = SessionStore(ttl=10.0, clock=Clock())
    sid = store.create({"clip": "c"})
    with store.lease(sid) as handle:
        assert handle == {"clip": "c"}


def test_unknown_session():
    store = SessionStore(ttl=10.0, clock=Clock())
    with pytest.raises(UnknownSession, match="no live session 'nope'"):
        with store.lease("nope"):
            pass


def test_ttl_eviction():
    clock = Clock()
    store = SessionStore(ttl=3600.0, clock=clock)
    sid = store.create("h")
    clock.now = 3599.0
    with store.lease(sid):
        pass
    # the lease refreshed the expiry; only a full idle hour evicts
    clock.now = 3599.0 + 3600.0
    with pytest.raises(UnknownSession):
        with store.lease(sid):
            pass
    assert len(store) == 0


def test_concurrent_lease_conflicts():
    store = SessionStore(ttl=10.0, clock=Clock())
    sid = store.create("h")
    with store.lease(sid):
        with pytest.raises(Conflict, match=f"session '{sid}'"):
            with store.lease(sid):
                pass
    # released; usable again
    with store.lease(sid):
        pass


def test_other_sessions_unaffected_by_busy_one():
    store = SessionStore(ttl=10.0, clock=Clock())
    a = store.create("a")
    b = store.create("b")
    with store.lease(a):
        with store.lease(b) as handle:
            assert handle == "b"


def test_busy_session_survives_ttl_sweep():
    clock = Clock()
    store = SessionStore(ttl=5.0, clock=clock)
    sid = store.create("h")
    with store.lease(sid):
        clock.now = 100.0
        store.create("other")  # triggers a sweep while sid is busy
        assert len(store) == 2
