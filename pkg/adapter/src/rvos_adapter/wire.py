"""Request parsing for the wire protocol bodies.

Parsed chat messages keep parts as (kind, value) tuples with image bytes
already base64-decoded; segment prompts become plain dicts. Validation
failures raise ValueError and surface as 400 bad_request, keeping the
error text identical to the reference mock server's.
"""

from __future__ import annotations

import base64

CHAT_PATH = "/v1/chat"
SEGMENT_PATH = "/v1/segment"
TRACK_INIT_PATH = "/v1/track/init"
TRACK_PROPAGATE_PATH = "/v1/track/propagate"


def parse_chat(body: dict) -> tuple[list[dict], str | None, float]:
    messages = []
    for msg in body["messages"]:
        parts: list[tuple[str, object]] = []
        for part in msg["parts"]:
            if part["type"] == "text":
                parts.append(("text", str(part["text"])))
            elif part["type"] == "image":
                parts.append(("image", base64.b64decode(part["png_base64"])))
            else:
                raise ValueError(f"unknown part type {part['type']!r}")
        messages.append({"role": str(msg["role"]), "parts": parts})
    if not messages:
        raise ValueError("chat request carries no messages")
    return messages, body.get("schema"), float(body.get("temperature", 0.0))


def chat_text(messages: list[dict]) -> str:
    """All text parts joined, the form scripted fixtures match against."""
    chunks = []
    for msg in messages:
        for kind, value in msg["parts"]:
            if kind == "text":
                chunks.append(value)
    return "\n".join(chunks)


def parse_segment(body: dict) -> tuple[bytes, dict, int]:
    p = body["prompt"]
    kind = p.get("kind")
    if kind == "text":
        prompt = {"kind": "text", "text": str(p["text"])}
    elif kind == "points":
        prompt = {
            "kind": "points",
            "points": [(float(x), float(y), bool(pos)) for x, y, pos in p["points"]],
        }
    elif kind == "box":
        x0, y0, x1, y1 = p["box"]
        prompt = {"kind": "box", "box": (float(x0), float(y0), float(x1), float(y1))}
    else:
        raise ValueError(f"unknown prompt kind {kind!r}")
    image_png = base64.b64decode(body["image_png_base64"])
    return image_png, prompt, int(body.get("max_candidates", 3))


def prompt_to_wire(prompt: dict) -> dict:
    """Re-serialize a parsed prompt for forwarding to a local service."""
    if prompt["kind"] == "text":
        return {"kind": "text", "text": prompt["text"]}
    if prompt["kind"] == "points":
        return {"kind": "points", "points": [[x, y, bool(p)] for x, y, p in prompt["points"]]}
    return {"kind": "box", "box": list(prompt["box"])}
