"""Offline stand-in vendors, answering from fixture files and ground truth.

These exist so the service can be exercised, and its protocol conformance
proven, without any hosted model or local inference server. The chat stub
replays a scripted fixture; the segmenter and tracker stubs answer from a
generated dataset directory (scene_index.json, clips/, gt/shapes/). Their
observable behavior matches the reference mock backends down to the error
messages, which is what the golden conformance suite checks.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import BadImage, EmptySeed, FixtureExhausted, OutOfRange, Upstream
from ..imaging import decode_png, pixel_key, read_mask_png
from ..rle import rle_encode_text
from ..wire import chat_text

_TAG_RE = re.compile(r"#tag:([\w-]+)")


@dataclass
class _FixtureEntry:
    tag: str
    when: str | None
    text: str
    remaining: int


class StubChat:
    """Replays canned chat responses from a fixture file.

    Entries match on the ``#tag:`` marker embedded in the prompt plus an
    optional ``when`` substring, each with a repeat budget; the first
    matching entry with repeats left wins. Running dry raises
    FixtureExhausted so a drifted fixture fails loudly.
    """

    def __init__(self, fixture_path: Path | str):
        path = Path(fixture_path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise Upstream(f"cannot load chat fixture {path}: {e}") from e
        self._entries: list[_FixtureEntry] = []
        for raw in doc.get("entries", []):
            if "json" in raw:
                # canonical form, so fixture files can be reformatted freely
                text = json.dumps(raw["json"], sort_keys=True)
            else:
                text = str(raw["text"])
            self._entries.append(
                _FixtureEntry(
                    tag=str(raw["tag"]),
                    when=raw.get("when"),
                    text=text,
                    remaining=int(raw.get("repeat", 1)),
                )
            )
        self._lock = threading.Lock()
        self._path = path

    def complete(self, messages: list[dict], schema: str | None, temperature: float) -> str:
        prompt = chat_text(messages)
        m = _TAG_RE.search(prompt)
        tag = m.group(1) if m else ""
        with self._lock:
            for entry in self._entries:
                if entry.remaining <= 0 or entry.tag != tag:
                    continue
                if entry.when is not None and entry.when not in prompt:
                    continue
                entry.remaining -= 1
                return entry.text
        snippet = " ".join(prompt.split())[:160]
        raise FixtureExhausted(
            f"no fixture entry left in {self._path.name} for tag {tag!r} (prompt: {snippet!r})"
        )


@dataclass
class _ClipInfo:
    frames: int
    height: int
    width: int
    shapes: list[dict]  # {"name", "slug"}


class DatasetView:
    """Read side of a generated dataset directory.

    Frames are indexed by pixel hash so requests carrying re-encoded PNGs
    still resolve to a (clip, frame) identity; ground-truth masks load
    lazily and are cached.
    """

    def __init__(self, root: Path | str):
        self.root = Path(root)
        index = json.loads((self.root / "scene_index.json").read_text())
        self.clips: dict[str, _ClipInfo] = {}
        for clip_id, rec in index.get("clips", {}).items():
            self.clips[clip_id] = _ClipInfo(
                frames=int(rec["frames"]),
                height=int(rec["height"]),
                width=int(rec["width"]),
                shapes=list(rec["shapes"]),
            )
        self._frame_lookup: dict[str, tuple[str, int]] = {}
        for clip_id in self.clips:
            frame_dir = self.root / "clips" / clip_id
            for i, path in enumerate(sorted(frame_dir.glob("*.png"))):
                frame = decode_png(path.read_bytes())
                self._frame_lookup[pixel_key(frame)] = (clip_id, i)
        self._gt_cache: dict[tuple[str, str], list[np.ndarray]] = {}

    def locate_frame(self, frame: np.ndarray) -> tuple[str, int] | None:
        return self._frame_lookup.get(pixel_key(frame))

    def shape_mask(self, clip_id: str, slug: str, frame_index: int) -> np.ndarray:
        key = (clip_id, slug)
        if key not in self._gt_cache:
            shape_dir = self.root / "gt" / "shapes" / clip_id / slug
            self._gt_cache[key] = [read_mask_png(p) for p in sorted(shape_dir.glob("*.png"))]
        return self._gt_cache[key][frame_index]


def _mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    inter = int(np.count_nonzero(a & b))
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 1.0
    return inter / union


def _slug_tokens(slug: str) -> list[str]:
    return [t for t in slug.split("_") if t]


class StubSegmenter:
    """Answers segmentation prompts from ground truth.

    Text prompts match shapes whose slug tokens occur in the prompt, scored
    by the matched-token fraction; point prompts score the net inside-hit
    balance; box prompts require covering more than half the shape.
    """

    def __init__(self, view: DatasetView):
        self._view = view

    def segment(self, image_png: bytes, prompt: dict, max_candidates: int) -> list[dict]:
        frame = decode_png(image_png)
        located = self._view.locate_frame(frame)
        if located is None:
            raise BadImage("frame does not belong to any indexed clip")
        clip_id, frame_index = located
        shapes = self._view.clips[clip_id].shapes

        scored: list[tuple[float, str]] = []
        if prompt["kind"] == "text":
            text = prompt["text"].lower()
            for shape in shapes:
                tokens = _slug_tokens(shape["slug"])
                hits = sum(1 for t in tokens if t in text)
                if hits:
                    scored.append((hits / len(tokens), shape["slug"]))
        elif prompt["kind"] == "points":
            points = prompt["points"]
            for shape in shapes:
                gt = self._view.shape_mask(clip_id, shape["slug"], frame_index)
                h, w = gt.shape
                balance = 0
                for x, y, positive in points:
                    r, c = int(round(y)), int(round(x))
                    inside = 0 <= r < h and 0 <= c < w and bool(gt[r, c])
                    balance += (1 if positive else -1) if inside else 0
                if balance > 0:
                    scored.append((balance / len(points), shape["slug"]))
        else:
            x0, y0, x1, y1 = prompt["box"]
            for shape in shapes:
                gt = self._view.shape_mask(clip_id, shape["slug"], frame_index)
                total = int(gt.sum())
                if not total:
                    continue
                box = np.zeros_like(gt)
                r0, r1 = max(int(round(y0)), 0), min(int(round(y1)), gt.shape[0])
                c0, c1 = max(int(round(x0)), 0), min(int(round(x1)), gt.shape[1])
                if r1 > r0 and c1 > c0:
                    box[r0:r1, c0:c1] = True
                covered = int((gt & box).sum()) / total
                if covered > 0.5:
                    scored.append((covered, shape["slug"]))

        scored.sort(key=lambda s: (-s[0], s[1]))
        out = []
        for score, slug in scored[:max_candidates]:
            gt = self._view.shape_mask(clip_id, slug, frame_index)
            out.append({"rle": rle_encode_text(gt), "score": float(score)})
        return out


class StubTracker:
    """Propagates by replaying ground truth for the best-matching shape.

    The seed is matched to the ground-truth shape with the highest overlap
    at the seed frame; a seed matching nothing is carried rigidly. State
    lives in the handle the service's session store keeps, so the stub
    itself is stateless.
    """

    def __init__(self, view: DatasetView):
        self._view = view

    def start(self, clip_id: str, frame_index: int, seed_mask: np.ndarray, seed_text: str) -> dict:
        clip = self._view.clips.get(clip_id)
        if clip is None:
            raise OutOfRange(f"clip {clip_id!r} is not indexed")
        if not 0 <= frame_index < clip.frames:
            raise OutOfRange(f"frame {frame_index} outside clip of {clip.frames} frames")
        if seed_mask.shape != (clip.height, clip.width):
            raise OutOfRange(
                f"seed is {seed_mask.shape}, clip frames are {(clip.height, clip.width)}"
            )
        if not seed_mask.any():
            raise EmptySeed("tracking seed mask is empty")

        best_slug, best_iou = None, 0.0
        for shape in clip.shapes:
            gt = self._view.shape_mask(clip_id, shape["slug"], frame_index)
            v = _mask_iou(seed_mask, gt)
            if v > best_iou:
                best_slug, best_iou = shape["slug"], v
        return {"clip": clip_id, "frame": frame_index, "slug": best_slug, "seed": seed_mask}

    def propagate(self, handle: dict, direction: str) -> list[dict]:
        clip = self._view.clips[handle["clip"]]
        if direction == "forward":
            frames = range(handle["frame"] + 1, clip.frames)
        else:
            frames = range(0, handle["frame"])
        out = []
        for i in frames:
            slug = handle["slug"]
            mask = self._view.shape_mask(handle["clip"], slug, i) if slug else handle["seed"]
            out.append({"frame_index": i, "rle": rle_encode_text(mask)})
        return out
