"""JSON wire codec for the backend protocol, plus a server-side dispatcher.

Bodies mirror the protocol domain types: masks travel as the textual RLE
form, images as base64 PNG. Errors travel as {code, message} with an HTTP
status. The dispatcher maps a (path, request body) onto in-process backends,
which is what the test server and the golden conformance suite run against.
"""

from __future__ import annotations

import base64

from ..errors import (
    BadImage,
    DimensionMismatch,
    EmptySeed,
    FixtureExhausted,
    MalformedRle,
    OutOfRange,
    ProtocolViolation,
    RvosError,
    Timeout,
    Transport,
    UnknownSession,
)
from ..masks import rle_from_text, rle_to_text
from .protocol import (
    BoxPrompt,
    ChatMessage,
    ChatRequest,
    ImagePart,
    PointsPrompt,
    SegmentCandidate,
    SegmentRequest,
    TextPart,
    TextPrompt,
)

CHAT_PATH = "/v1/chat"
SEGMENT_PATH = "/v1/segment"
TRACK_INIT_PATH = "/v1/track/init"
TRACK_PROPAGATE_PATH = "/v1/track/propagate"

# exception class -> (wire code, http status)
_ERROR_CODES: list[tuple[type, str, int]] = [
    (Timeout, "timeout", 504),
    (BadImage, "bad_image", 400),
    (OutOfRange, "out_of_range", 400),
    (EmptySeed, "empty_seed", 400),
    (UnknownSession, "unknown_session", 404),
    (MalformedRle, "malformed_rle", 400),
    (DimensionMismatch, "dimension_mismatch", 400),
    (ProtocolViolation, "conflict", 409),
    (FixtureExhausted, "fixture_exhausted", 500),
    (Transport, "transport", 502),
]

_CODE_TO_ERROR = {code: cls for cls, code, _ in _ERROR_CODES}


def error_to_wire(exc: Exception) -> tuple[int, dict]:
    for cls, code, status in _ERROR_CODES:
        if isinstance(exc, cls):
            return status, {"code": code, "message": str(exc)}
    return 500, {"code": "internal", "message": str(exc)}


def raise_from_wire(status: int, body: dict) -> None:
    code = body.get("code", "internal") if isinstance(body, dict) else "internal"
    message = body.get("message", "") if isinstance(body, dict) else str(body)
    cls = _CODE_TO_ERROR.get(code, Transport)
    raise cls(f"{code}: {message}")


def chat_request_to_wire(req: ChatRequest) -> dict:
    messages = []
    for msg in req.messages:
        parts = []
        for part in msg.parts:
            if isinstance(part, TextPart):
                parts.append({"type": "text", "text": part.text})
            else:
                parts.append({"type": "image", "png_base64": base64.b64encode(part.png).decode()})
        messages.append({"role": msg.role, "parts": parts})
    return {"messages": messages, "schema": req.schema, "temperature": req.temperature}


def chat_request_from_wire(body: dict) -> ChatRequest:
    messages = []
    for msg in body["messages"]:
        parts: list = []
        for part in msg["parts"]:
            if part["type"] == "text":
                parts.append(TextPart(part["text"]))
            elif part["type"] == "image":
                parts.append(ImagePart(base64.b64decode(part["png_base64"])))
            else:
                raise ValueError(f"unknown part type {part['type']!r}")
        messages.append(ChatMessage(role=msg["role"], parts=tuple(parts)))
    if not messages:
        raise ValueError("chat request carries no messages")
    return ChatRequest(
        messages=tuple(messages),
        schema=body.get("schema"),
        temperature=float(body.get("temperature", 0.0)),
    )


def segment_request_to_wire(req: SegmentRequest) -> dict:
    prompt: dict
    if isinstance(req.prompt, TextPrompt):
        prompt = {"kind": "text", "text": req.prompt.text}
    elif isinstance(req.prompt, PointsPrompt):
        prompt = {"kind": "points", "points": [[x, y, bool(p)] for x, y, p in req.prompt.points]}
    else:
        prompt = {"kind": "box", "box": list(req.prompt.box)}
    return {
        "image_png_base64": base64.b64encode(req.image_png).decode(),
        "prompt": prompt,
        "max_candidates": req.max_candidates,
    }


def segment_request_from_wire(body: dict) -> SegmentRequest:
    p = body["prompt"]
    kind = p.get("kind")
    if kind == "text":
        prompt = TextPrompt(str(p["text"]))
    elif kind == "points":
        prompt = PointsPrompt(tuple((float(x), float(y), bool(pos)) for x, y, pos in p["points"]))
    elif kind == "box":
        x0, y0, x1, y1 = p["box"]
        prompt = BoxPrompt((float(x0), float(y0), float(x1), float(y1)))
    else:
        raise ValueError(f"unknown prompt kind {kind!r}")
    return SegmentRequest(
        image_png=base64.b64decode(body["image_png_base64"]),
        prompt=prompt,
        max_candidates=int(body.get("max_candidates", 3)),
    )


def candidates_to_wire(candidates: list[SegmentCandidate]) -> dict:
    return {
        "candidates": [
            {"rle": rle_to_text(c.mask), "score": float(c.score)} for c in candidates
        ]
    }


def candidates_from_wire(body: dict) -> list[SegmentCandidate]:
    return [
        SegmentCandidate(mask=rle_from_text(c["rle"]), score=float(c["score"]))
        for c in body.get("candidates", [])
    ]


def masks_to_wire(masks: list[tuple[int, "RleMask"]]) -> dict:  # noqa: F821
    return {"masks": [{"frame_index": i, "rle": rle_to_text(m)} for i, m in masks]}


def masks_from_wire(body: dict) -> list:
    return [(int(m["frame_index"]), rle_from_text(m["rle"])) for m in body.get("masks", [])]


def dispatch(path: str, body: dict, *, chat_backend=None, segmenter=None, tracker=None) -> tuple[int, dict]:
    """Serve one wire request against in-process backends."""
    try:
        if path == CHAT_PATH:
            if chat_backend is None:
                raise ProtocolViolation("no chat backend mounted")
            req = chat_request_from_wire(body)
            return 200, {"text": chat_backend.complete(req)}
        if path == SEGMENT_PATH:
            if segmenter is None:
                raise ProtocolViolation("no segmenter mounted")
            req = segment_request_from_wire(body)
            return 200, candidates_to_wire(segmenter.segment(req))
        if path == TRACK_INIT_PATH:
            if tracker is None:
                raise ProtocolViolation("no tracker mounted")
            session = tracker.init(
                str(body["clip"]), int(body["frame_index"]), rle_from_text(body["seed_rle"])
            )
            return 200, {"session_id": session.session_id}
        if path == TRACK_PROPAGATE_PATH:
            if tracker is None:
                raise ProtocolViolation("no tracker mounted")
            masks = tracker.propagate(str(body["session_id"]), str(body["direction"]))
            return 200, masks_to_wire(masks)
        return 404, {"code": "not_found", "message": f"unknown path {path}"}
    except (KeyError, TypeError, ValueError) as e:
        return 400, {"code": "bad_request", "message": str(e)}
    except RvosError as e:
        return error_to_wire(e)
