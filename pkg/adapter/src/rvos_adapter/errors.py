"""Typed errors and their wire form.

Every error that can cross the HTTP boundary maps to a (code, status) pair;
the body is always {code, message}. The registry is ordered so subclasses
can shadow a base class if that ever becomes necessary.
"""

from __future__ import annotations


class AdapterError(Exception):
    """Base class for everything this service raises deliberately."""


class ConfigError(AdapterError):
    """Bad or incomplete service configuration; refuses to start."""


class ConversionError(AdapterError):
    """Video container could not be decoded into frames."""


class VendorTimeout(AdapterError):
    pass


class BadImage(AdapterError):
    pass


class OutOfRange(AdapterError):
    pass


class EmptySeed(AdapterError):
    pass


class UnknownSession(AdapterError):
    pass


class MalformedRle(AdapterError):
    pass


class DimensionMismatch(AdapterError):
    pass


class Conflict(AdapterError):
    pass


class FixtureExhausted(AdapterError):
    pass


class Upstream(AdapterError):
    """Vendor or local service unreachable or misbehaving."""


# exception class -> (wire code, http status)
ERROR_CODES: list[tuple[type, str, int]] = [
    (VendorTimeout, "timeout", 504),
    (BadImage, "bad_image", 400),
    (OutOfRange, "out_of_range", 400),
    (EmptySeed, "empty_seed", 400),
    (UnknownSession, "unknown_session", 404),
    (MalformedRle, "malformed_rle", 400),
    (DimensionMismatch, "dimension_mismatch", 400),
    (Conflict, "conflict", 409),
    (FixtureExhausted, "fixture_exhausted", 500),
    (Upstream, "transport", 502),
]

CODE_TO_ERROR = {code: cls for cls, code, _ in ERROR_CODES}


def error_to_wire(exc: Exception) -> tuple[int, dict]:
    for cls, code, status in ERROR_CODES:
        if isinstance(exc, cls):
            return status, {"code": code, "message": str(exc)}
    return 500, {"code": "internal", "message": str(exc)}


def error_from_wire(status: int, body: dict) -> AdapterError:
    """Rebuild the typed error a proxied service reported, message intact."""
    code = body.get("code", "internal") if isinstance(body, dict) else "internal"
    message = body.get("message", "") if isinstance(body, dict) else str(body)
    cls = CODE_TO_ERROR.get(code, Upstream)
    return cls(message)
