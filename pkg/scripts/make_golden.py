#!/usr/bin/env python3
"""Regenerate the frozen wire-protocol conformance fixtures.

Runs a canonical request sequence against the in-process mock backends and
records every (path, request, status, response) exchange. Tracker session
ids are replaced with $S0, $S1, ... placeholders so any server that mints
its own ids can still be compared byte for byte.

Usage: python3 scripts/make_golden.py [--check]
"""

import argparse
import base64
import json
import sys
import tempfile
from pathlib import Path

from rvos.backends import wire
from rvos.backends.mocks import OracleSegmenter, ScriptedChat, SyntheticTracker
from rvos.backends.protocol import (
    BoxPrompt,
    ChatRequest,
    ImagePart,
    PointsPrompt,
    SegmentRequest,
    TextPart,
    TextPrompt,
    user_message,
)
from rvos.datasets import DatasetIndex, generate_dataset
from rvos.masks import rle_encode, rle_to_text

GOLDEN_DIR = Path(__file__).resolve().parents[1] / "tests" / "golden"

SCENE_DOC = {
    "seed": 5,
    "scenes": [
        {
            "clip_id": "g1",
            "frames": 4,
            "height": 20,
            "width": 24,
            "shapes": [
                {"name": "red square", "kind": "square", "size": 5,
                 "color": [200, 40, 40],
                 "motion": {"kind": "linear", "start": [3, 3], "velocity": [2, 1]}},
                {"name": "blue disc", "kind": "disc", "size": 3,
                 "color": [40, 40, 200],
                 "motion": {"kind": "linear", "start": [18, 13], "velocity": [0, 0]}},
            ],
        },
    ],
    "tasks": [
        {"task_id": "g-square", "clip_id": "g1", "expression": "the red square",
         "shapes": ["red square"]},
    ],
}

CHAT_ENTRIES = [
    {"tag": "golden-plain", "text": "two geometric shapes on a grey field"},
    {"tag": "stage1", "when": "expression: the red square",
     "json": {"no_target": False, "targets": [
         {"keyframe_index": 1, "description": "the red square",
          "is_central_subject": True}]}},
    {"tag": "solo", "text": "only answered once"},
]


def canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def substitute(obj, mapping):
    """Replace string values per mapping, recursively."""
    if isinstance(obj, str):
        return mapping.get(obj, obj)
    if isinstance(obj, list):
        return [substitute(x, mapping) for x in obj]
    if isinstance(obj, dict):
        return {k: substitute(v, mapping) for k, v in obj.items()}
    return obj


def build_exchanges(root: Path) -> list[dict]:
    generate_dataset(SCENE_DOC, seed=SCENE_DOC["seed"], out_dir=root)
    index = DatasetIndex(root)
    fixture = root / "chat_fixture.json"
    fixture.write_text(json.dumps({"entries": CHAT_ENTRIES}))

    chat = ScriptedChat(fixture)
    segmenter = OracleSegmenter(index)
    tracker = SyntheticTracker(index)

    frame1 = (root / "clips" / "g1" / "00001.png").read_bytes()
    seed_rle = rle_to_text(rle_encode(index.shape_mask("g1", "red_square", 1)))

    exchanges: list[dict] = []

    def call(path, request):
        status, response = wire.dispatch(
            path, request, chat_backend=chat, segmenter=segmenter, tracker=tracker)
        exchanges.append({"path": path, "request": request,
                          "status": status, "response": response})
        return response

    # chat: plain text, then a schema request with an image attached
    call(wire.CHAT_PATH, wire.chat_request_to_wire(ChatRequest(
        messages=(user_message(TextPart("#tag:golden-plain\ndescribe the frame")),))))
    call(wire.CHAT_PATH, wire.chat_request_to_wire(ChatRequest(
        messages=(user_message(
            TextPart("#tag:stage1\nexpression: the red square"),
            ImagePart(frame1)),),
        schema="decomposition_v1")))

    # chat: scripted fixture runs dry
    solo = wire.chat_request_to_wire(ChatRequest(
        messages=(user_message(TextPart("#tag:solo\nanything")),)))
    call(wire.CHAT_PATH, solo)
    call(wire.CHAT_PATH, solo)

    # segment: one clear match, a deliberate tie, point and box prompts
    call(wire.SEGMENT_PATH, wire.segment_request_to_wire(SegmentRequest(
        image_png=frame1, prompt=TextPrompt("the red square"))))
    call(wire.SEGMENT_PATH, wire.segment_request_to_wire(SegmentRequest(
        image_png=frame1, prompt=TextPrompt("the red disc"))))
    call(wire.SEGMENT_PATH, wire.segment_request_to_wire(SegmentRequest(
        image_png=frame1,
        prompt=PointsPrompt(((6.0, 5.0, True), (19.0, 14.0, False))),
        max_candidates=2)))
    call(wire.SEGMENT_PATH, wire.segment_request_to_wire(SegmentRequest(
        image_png=frame1, prompt=BoxPrompt((15.0, 10.0, 22.0, 17.0)))))
    call(wire.SEGMENT_PATH, {
        "image_png_base64": base64.b64encode(b"not a png").decode(),
        "prompt": {"kind": "text", "text": "anything"}, "max_candidates": 3})
    call(wire.SEGMENT_PATH, {
        "image_png_base64": base64.b64encode(frame1).decode(),
        "prompt": {"kind": "blob"}})

    # tracker: two sessions, both directions, plus every init failure mode
    square_session = call(wire.TRACK_INIT_PATH, {
        "clip": "g1", "frame_index": 1, "seed_rle": seed_rle})["session_id"]
    call(wire.TRACK_PROPAGATE_PATH, {"session_id": square_session, "direction": "forward"})
    call(wire.TRACK_PROPAGATE_PATH, {"session_id": square_session, "direction": "backward"})

    disc0 = rle_to_text(rle_encode(index.shape_mask("g1", "blue_disc", 0)))
    disc_session = call(wire.TRACK_INIT_PATH, {
        "clip": "g1", "frame_index": 0, "seed_rle": disc0})["session_id"]
    call(wire.TRACK_PROPAGATE_PATH, {"session_id": disc_session, "direction": "backward"})

    call(wire.TRACK_PROPAGATE_PATH, {"session_id": "nope", "direction": "forward"})
    call(wire.TRACK_INIT_PATH, {"clip": "g1", "frame_index": 99, "seed_rle": seed_rle})
    call(wire.TRACK_INIT_PATH, {"clip": "g1", "frame_index": 0,
                                "seed_rle": "20,24:480"})
    call(wire.TRACK_INIT_PATH, {"clip": "g1", "frame_index": 0,
                                "seed_rle": "20,24:1 2 banana"})
    call("/v1/flip", {})

    sessions = {}
    for ex in exchanges:
        if ex["path"] == wire.TRACK_INIT_PATH and ex["status"] == 200:
            sid = ex["response"]["session_id"]
            sessions.setdefault(sid, f"$S{len(sessions)}")
    return [substitute(ex, sessions) for ex in exchanges]


def build_docs() -> dict[str, dict]:
    with tempfile.TemporaryDirectory() as tmp:
        exchanges = build_exchanges(Path(tmp))
    return {
        "scene.json": SCENE_DOC,
        "chat_fixture.json": {"entries": CHAT_ENTRIES},
        "exchanges.json": {"exchanges": exchanges},
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--check", action="store_true",
                        help="Verify the stored fixtures instead of rewriting them.")
    args = parser.parse_args()

    docs = build_docs()
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    stale = []
    for name, doc in docs.items():
        path = GOLDEN_DIR / name
        text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
        if args.check:
            if not path.is_file() or path.read_text() != text:
                stale.append(name)
        else:
            path.write_text(text)
            print(f"wrote {path}")
    if stale:
        print(f"stale golden fixtures: {', '.join(stale)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
