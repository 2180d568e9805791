"""Scripted and oracle-driven backends for offline runs.

ScriptedChat replays a fixture file; OracleSegmenter and SyntheticTracker
answer from generated ground truth, optionally degraded by a seeded
perturbation so robustness paths can be exercised deterministically.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..datasets import DatasetIndex
from ..errors import BadImage, EmptySeed, FixtureExhausted, OutOfRange, UnknownSession
from ..masks import RleMask, as_mask, iou, rle_decode, rle_encode
from ..video import decode_frame_png
from .protocol import (
    BoxPrompt,
    ChatRequest,
    PointsPrompt,
    SegmentCandidate,
    SegmentRequest,
    TextPrompt,
    TrackSession,
)

_TAG_RE = re.compile(r"#tag:([\w-]+)")


def _derive_seed(base: int, *parts: str) -> int:
    h = hashlib.sha256(str(base).encode())
    for p in parts:
        h.update(b"\x00")
        h.update(p.encode())
    return int.from_bytes(h.digest()[:8], "big")


def _shift(mask: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Translate a mask, dropping pixels that leave the canvas."""
    out = np.zeros_like(mask)
    h, w = mask.shape
    ys = slice(max(dy, 0), h + min(dy, 0))
    xs = slice(max(dx, 0), w + min(dx, 0))
    ys_src = slice(max(-dy, 0), h + min(-dy, 0))
    xs_src = slice(max(-dx, 0), w + min(-dx, 0))
    out[ys, xs] = mask[ys_src, xs_src]
    return out


@dataclass
class _FixtureEntry:
    tag: str
    when: str | None
    text: str
    remaining: int


class ScriptedChat:
    """Chat backend that replays canned responses from a fixture file.

    Each entry carries a ``tag`` (matched against the ``#tag:`` marker a
    prompt embeds), an optional ``when`` substring that must occur in the
    prompt text, the response (``text`` or ``json``), and an optional
    ``repeat`` count (default 1). The first entry that still has repeats
    left and matches wins; matching on content rather than call order keeps
    replay independent of worker scheduling. Running past the script raises
    FixtureExhausted so a drifted fixture fails loudly instead of silently
    degrading the run.
    """

    def __init__(self, fixture_path: Path | str):
        path = Path(fixture_path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise FixtureExhausted(f"cannot load chat fixture {path}: {e}") from e
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

    def complete(self, req: ChatRequest) -> str:
        prompt = req.text()
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


def _slug_tokens(slug: str) -> list[str]:
    return [t for t in slug.split("_") if t]


class OracleSegmenter:
    """Segmenter that answers from ground truth for any frame it can identify.

    Frames are recognized by pixel hash, so the backend works on re-encoded
    PNGs without any registration step. Text prompts match shapes whose slug
    tokens occur in the prompt; the score is the matched-token fraction,
    scaled by IoU against ground truth when a perturbation is applied.
    ``perturb`` is a pixel amplitude by which candidates are deterministically
    shifted.
    """

    def __init__(self, index: DatasetIndex, perturb: float = 0.0, seed: int = 0):
        self._index = index
        self._perturb = int(round(perturb))
        self._seed = seed

    def _candidates_for(self, clip_id: str, frame_index: int, scored: list[tuple[float, str]]) -> list[SegmentCandidate]:
        out = []
        for base_score, slug in scored:
            gt = self._index.shape_mask(clip_id, slug, frame_index)
            mask = gt
            if self._perturb:
                rng = np.random.default_rng(
                    _derive_seed(self._seed, clip_id, str(frame_index), slug)
                )
                dy, dx = rng.integers(-self._perturb, self._perturb + 1, size=2)
                mask = _shift(gt, int(dy), int(dx))
            score = base_score * (iou(mask, gt) if self._perturb else 1.0)
            out.append(SegmentCandidate(mask=rle_encode(as_mask(mask)), score=float(score)))
        return out

    def segment(self, req: SegmentRequest) -> list[SegmentCandidate]:
        try:
            frame = decode_frame_png(req.image_png)
        except Exception as e:
            # keep the message stable: PIL's own embeds a BytesIO repr
            raise BadImage("undecodable image payload") from e
        located = self._index.locate_frame(frame)
        if located is None:
            raise BadImage("frame does not belong to any indexed clip")
        clip_id, frame_index = located
        shapes = self._index.clips[clip_id].shapes

        scored: list[tuple[float, str]] = []
        if isinstance(req.prompt, TextPrompt):
            text = req.prompt.text.lower()
            for shape in shapes:
                tokens = _slug_tokens(shape["slug"])
                hits = sum(1 for t in tokens if t in text)
                if hits:
                    scored.append((hits / len(tokens), shape["slug"]))
        elif isinstance(req.prompt, PointsPrompt):
            for shape in shapes:
                gt = self._index.shape_mask(clip_id, shape["slug"], frame_index)
                h, w = gt.shape
                balance = 0
                for x, y, positive in req.prompt.points:
                    r, c = int(round(y)), int(round(x))
                    inside = 0 <= r < h and 0 <= c < w and bool(gt[r, c])
                    balance += (1 if positive else -1) if inside else 0
                if balance > 0:
                    scored.append((balance / len(req.prompt.points), shape["slug"]))
        elif isinstance(req.prompt, BoxPrompt):
            x0, y0, x1, y1 = req.prompt.box
            for shape in shapes:
                gt = self._index.shape_mask(clip_id, shape["slug"], frame_index)
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
        return self._candidates_for(clip_id, frame_index, scored[: req.max_candidates])


class SyntheticTracker:
    """Tracker that propagates by replaying ground truth.

    The seed mask is matched to the closest ground-truth shape at the seed
    frame; propagation then reads that shape's masks on the requested side of
    the clip. A seed matching nothing is carried rigidly across frames. The
    optional ``jitter`` amplitude shifts each propagated mask by a seeded,
    per-frame offset so imperfect tracking can be simulated reproducibly.
    """

    def __init__(self, index: DatasetIndex, jitter: int = 0, seed: int = 0):
        self._index = index
        self._jitter = int(jitter)
        self._seed = seed
        self._lock = threading.Lock()
        self._sessions: dict[str, tuple[str, int, str | None, np.ndarray]] = {}
        self._counter = 0

    def init(self, clip_id: str, frame_index: int, seed: RleMask) -> TrackSession:
        clip = self._index.clips.get(clip_id)
        if clip is None:
            raise OutOfRange(f"clip {clip_id!r} is not indexed")
        if not 0 <= frame_index < clip.frames:
            raise OutOfRange(f"frame {frame_index} outside clip of {clip.frames} frames")
        seed_mask = rle_decode(seed)
        if seed_mask.shape != (clip.height, clip.width):
            raise OutOfRange(
                f"seed is {seed_mask.shape}, clip frames are {(clip.height, clip.width)}"
            )
        if not seed_mask.any():
            raise EmptySeed("tracking seed mask is empty")

        best_slug, best_iou = None, 0.0
        for shape in clip.shapes:
            gt = self._index.shape_mask(clip_id, shape["slug"], frame_index)
            v = iou(seed_mask, gt)
            if v > best_iou:
                best_slug, best_iou = shape["slug"], v
        with self._lock:
            self._counter += 1
            sid = f"s{self._counter:06d}"
            self._sessions[sid] = (clip_id, frame_index, best_slug, seed_mask)
        return TrackSession(session_id=sid, clip_id=clip_id, frame_index=frame_index, seed=seed)

    def propagate(self, session_id: str, direction: str) -> list[tuple[int, RleMask]]:
        with self._lock:
            state = self._sessions.get(session_id)
        if state is None:
            raise UnknownSession(f"no live session {session_id!r}")
        clip_id, seed_frame, slug, seed_mask = state
        clip = self._index.clips[clip_id]
        if direction == "forward":
            frames = range(seed_frame + 1, clip.frames)
        else:
            frames = range(0, seed_frame)

        out: list[tuple[int, RleMask]] = []
        for i in frames:
            mask = self._index.shape_mask(clip_id, slug, i) if slug else seed_mask
            if self._jitter:
                rng = np.random.default_rng(
                    _derive_seed(self._seed, clip_id, str(seed_frame), slug or "", direction, str(i))
                )
                dy, dx = rng.integers(-self._jitter, self._jitter + 1, size=2)
                mask = _shift(mask, int(dy), int(dx))
            out.append((i, rle_encode(as_mask(mask))))
        return out
