"""Synthetic clip generator: moving shapes with exact ground-truth masks."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SceneSpecError, ShapeOutOfCanvas
from .masks import Mask
from .video import VideoClip


@dataclass(frozen=True)
class MotionSpec:
    """Linear or circular path of a shape center, in (x, y) pixel units."""

    kind: str  # "linear" | "circular"
    start: tuple[float, float] = (0.0, 0.0)       # linear
    velocity: tuple[float, float] = (0.0, 0.0)    # linear, pixels/frame
    center: tuple[float, float] = (0.0, 0.0)      # circular
    radius: float = 0.0                           # circular
    omega_deg: float = 0.0                        # circular, degrees/frame
    phase_deg: float = 0.0                        # circular

    def position(self, t: int) -> tuple[float, float]:
        if self.kind == "linear":
            return (self.start[0] + self.velocity[0] * t,
                    self.start[1] + self.velocity[1] * t)
        angle = math.radians(self.phase_deg + self.omega_deg * t)
        return (self.center[0] + self.radius * math.cos(angle),
                self.center[1] + self.radius * math.sin(angle))


@dataclass(frozen=True)
class ShapeSpec:
    name: str             # also the concept string oracle backends match on
    kind: str             # "square" | "disc"
    size: int             # side length for squares, radius for discs
    color: tuple[int, int, int]
    motion: MotionSpec

    @property
    def slug(self) -> str:
        return self.name.strip().lower().replace(" ", "_")


@dataclass(frozen=True)
class SceneSpec:
    clip_id: str
    frame_count: int
    height: int
    width: int
    background: tuple[int, int, int] = (18, 18, 22)
    shapes: tuple[ShapeSpec, ...] = ()
    fps: float = 5.0
    speckle: float = 0.0  # fraction of background pixels textured per frame


def _render_shape(shape: ShapeSpec, t: int, height: int, width: int) -> Mask:
    cx, cy = shape.motion.position(t)
    mask = np.zeros((height, width), dtype=bool)
    if shape.kind == "square":
        s = int(shape.size)
        x0 = round(cx - s / 2)
        y0 = round(cy - s / 2)
        if x0 < 0 or y0 < 0 or x0 + s > width or y0 + s > height:
            raise ShapeOutOfCanvas(
                f"{shape.name!r} leaves the canvas at frame {t} (x0={x0}, y0={y0})")
        mask[y0:y0 + s, x0:x0 + s] = True
    elif shape.kind == "disc":
        r = float(shape.size)
        if cx - r < -0.5 or cy - r < -0.5 or cx + r > width - 0.5 or cy + r > height - 0.5:
            raise ShapeOutOfCanvas(
                f"{shape.name!r} leaves the canvas at frame {t} (center=({cx}, {cy}))")
        ys, xs = np.ogrid[:height, :width]
        mask = (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
    else:
        raise SceneSpecError(f"unknown shape kind {shape.kind!r}")
    return mask


def gen_synthetic(scene: SceneSpec, seed: int) -> tuple[VideoClip, dict[str, list[Mask]]]:
    """Render a scene deterministically.

    Returns the clip plus a ground-truth mask per shape per frame, keyed by
    shape slug. Identical (scene, seed) pairs produce identical bytes.
    """
    if scene.frame_count < 1:
        raise SceneSpecError("frame_count must be >= 1")
    if scene.height < 1 or scene.width < 1:
        raise SceneSpecError("canvas must be at least 1x1")
    slugs = [s.slug for s in scene.shapes]
    if len(set(slugs)) != len(slugs):
        raise SceneSpecError(f"duplicate shape names in {scene.clip_id}")

    frames: list[np.ndarray] = []
    gt: dict[str, list[Mask]] = {s.slug: [] for s in scene.shapes}
    for t in range(scene.frame_count):
        frame = np.empty((scene.height, scene.width, 3), dtype=np.uint8)
        frame[:] = np.asarray(scene.background, dtype=np.uint8)
        if scene.speckle > 0.0:
            rng = np.random.default_rng(_derive_seed(seed, scene.clip_id, t))
            spots = rng.random((scene.height, scene.width)) < scene.speckle
            frame[spots] = np.minimum(frame[spots].astype(np.int16) + 24, 255).astype(np.uint8)
        for shape in scene.shapes:
            mask = _render_shape(shape, t, scene.height, scene.width)
            gt[shape.slug].append(mask)
            frame[mask] = np.asarray(shape.color, dtype=np.uint8)
        frames.append(frame)
    clip = VideoClip(clip_id=scene.clip_id, frames=frames, fps=scene.fps,
                     height=scene.height, width=scene.width)
    return clip, gt


def _derive_seed(seed: int, *parts) -> int:
    digest = hashlib.sha256(":".join([str(seed), *map(str, parts)]).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def scene_from_dict(doc: dict) -> SceneSpec:
    """Parse one scene from the declarative document format."""
    try:
        shapes = []
        for s in doc.get("shapes", []):
            m = s["motion"]
            motion = MotionSpec(
                kind=m["kind"],
                start=tuple(m.get("start", (0.0, 0.0))),
                velocity=tuple(m.get("velocity", (0.0, 0.0))),
                center=tuple(m.get("center", (0.0, 0.0))),
                radius=float(m.get("radius", 0.0)),
                omega_deg=float(m.get("omega_deg", 0.0)),
                phase_deg=float(m.get("phase_deg", 0.0)),
            )
            if motion.kind not in ("linear", "circular"):
                raise SceneSpecError(f"unknown motion kind {motion.kind!r}")
            shapes.append(ShapeSpec(
                name=s["name"],
                kind=s["kind"],
                size=int(s["size"]),
                color=tuple(s["color"]),
                motion=motion,
            ))
        return SceneSpec(
            clip_id=doc["clip_id"],
            frame_count=int(doc["frames"]),
            height=int(doc["height"]),
            width=int(doc["width"]),
            background=tuple(doc.get("background", (18, 18, 22))),
            shapes=tuple(shapes),
            fps=float(doc.get("fps", 5.0)),
            speckle=float(doc.get("speckle", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise SceneSpecError(f"bad scene document: {e}") from e
