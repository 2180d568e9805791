"""Clients, mocks, and wire protocol for the four external model roles."""

from .protocol import (
    BoxPrompt,
    ChatMessage,
    ChatRequest,
    ChatResponse,
    ImagePart,
    PointsPrompt,
    SegmentCandidate,
    SegmentRequest,
    TextPart,
    TextPrompt,
    TrackSession,
    chat,
    chat_with_repair,
    segment,
    track_init,
    track_propagate,
)
from .resolve import Services, resolve_endpoint, resolve_services

__all__ = [
    "BoxPrompt",
    "ChatMessage",
    "ChatRequest",
    "ChatResponse",
    "ImagePart",
    "PointsPrompt",
    "SegmentCandidate",
    "SegmentRequest",
    "Services",
    "TextPart",
    "TextPrompt",
    "TrackSession",
    "chat",
    "chat_with_repair",
    "resolve_endpoint",
    "resolve_services",
    "segment",
    "track_init",
    "track_propagate",
]
