"""Domain types and call wrappers for the planner/refiner/segmenter/tracker roles.

Backends are duck-typed: a chat backend exposes complete(req) -> str, a
segmenter exposes segment(req) -> [SegmentCandidate], a tracker exposes
init(...) -> TrackSession and propagate(session, direction). The wrappers
here add schema validation and the single repair re-ask on top.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Union

from ..errors import SchemaViolation
from ..masks import RleMask
from ..schemas import validate_payload


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    png: bytes  # raw PNG bytes; base64 only happens on the wire


Part = Union[TextPart, ImagePart]


@dataclass(frozen=True)
class ChatMessage:
    role: str
    parts: tuple[Part, ...]


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[ChatMessage, ...]
    schema: str | None = None
    temperature: float = 0.0

    def text(self) -> str:
        """All text parts joined; what scripted fixtures match against."""
        chunks = []
        for msg in self.messages:
            for part in msg.parts:
                if isinstance(part, TextPart):
                    chunks.append(part.text)
        return "\n".join(chunks)


@dataclass(frozen=True)
class ChatResponse:
    text: str
    parsed: dict | None = None


@dataclass(frozen=True)
class TextPrompt:
    text: str


@dataclass(frozen=True)
class PointsPrompt:
    points: tuple[tuple[float, float, bool], ...]  # (x, y, positive)


@dataclass(frozen=True)
class BoxPrompt:
    box: tuple[float, float, float, float]  # x0, y0, x1, y1


SegmentPrompt = Union[TextPrompt, PointsPrompt, BoxPrompt]


@dataclass(frozen=True)
class SegmentRequest:
    image_png: bytes
    prompt: SegmentPrompt
    max_candidates: int = 3


@dataclass(frozen=True)
class SegmentCandidate:
    mask: RleMask
    score: float


@dataclass(frozen=True)
class TrackSession:
    session_id: str
    clip_id: str
    frame_index: int
    seed: RleMask


class ChatBackend(Protocol):
    def complete(self, req: ChatRequest) -> str: ...


class SegmenterBackend(Protocol):
    def segment(self, req: SegmentRequest) -> list[SegmentCandidate]: ...


class TrackerBackend(Protocol):
    def init(self, clip_id: str, frame_index: int, seed: RleMask) -> TrackSession: ...

    def propagate(self, session_id: str, direction: str) -> list[tuple[int, RleMask]]: ...


def user_message(*parts: Part) -> ChatMessage:
    return ChatMessage(role="user", parts=tuple(parts))


def chat(backend: ChatBackend, req: ChatRequest) -> ChatResponse:
    """One chat round; validates the response when a schema was requested."""
    text = backend.complete(req)
    parsed = validate_payload(req.schema, text) if req.schema else None
    return ChatResponse(text=text, parsed=parsed)


REPAIR_INSTRUCTION = (
    "The previous reply did not match the required JSON schema. "
    "Respond again with only a valid JSON object for schema {schema}. "
    "Previous reply was:\n{raw}"
)


def chat_with_repair(backend: ChatBackend, req: ChatRequest) -> ChatResponse:
    """chat() plus a single repair re-ask on SchemaViolation, then fatal."""
    try:
        return chat(backend, req)
    except SchemaViolation as first:
        repair_part = TextPart(REPAIR_INSTRUCTION.format(schema=req.schema, raw=first.raw_text))
        last = req.messages[-1]
        patched = ChatMessage(role=last.role, parts=last.parts + (repair_part,))
        repaired = ChatRequest(
            messages=req.messages[:-1] + (patched,),
            schema=req.schema,
            temperature=req.temperature,
        )
        return chat(backend, repaired)


def segment(backend: SegmenterBackend, req: SegmentRequest) -> list[SegmentCandidate]:
    candidates = backend.segment(req)
    candidates = sorted(candidates, key=lambda c: -c.score)
    return candidates[: req.max_candidates]


def track_init(backend: TrackerBackend, clip_id: str, frame_index: int, seed: RleMask) -> TrackSession:
    return backend.init(clip_id, frame_index, seed)


def track_propagate(backend: TrackerBackend, session: TrackSession, direction: str) -> list[tuple[int, RleMask]]:
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be forward|backward, got {direction!r}")
    return backend.propagate(session.session_id, direction)
