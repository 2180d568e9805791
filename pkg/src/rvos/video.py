"""Frame-directory video clips: loading, PNG codec helpers, uniform sampling."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import EmptyClip, InconsistentDimensions, UnreadableFrame

FRAME_NAME_FORMAT = "{:05d}.png"


@dataclass
class VideoClip:
    clip_id: str
    frames: list[np.ndarray]  # HxWx3 uint8, all same shape
    fps: float
    height: int
    width: int

    def __len__(self) -> int:
        return len(self.frames)


def encode_frame_png(frame: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(frame, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_frame_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as img:
        return np.asarray(img.convert("RGB"))


def load_clip(source: Path | str, fps: float = 24.0, clip_id: str | None = None) -> VideoClip:
    """Load a clip from a directory of lexicographically ordered frame PNGs."""
    source = Path(source)
    paths = sorted(source.glob("*.png"))
    if not paths:
        raise EmptyClip(f"no frames in {source}")
    frames = []
    for p in paths:
        try:
            with Image.open(p) as img:
                frames.append(np.asarray(img.convert("RGB")))
        except (OSError, UnidentifiedImageError) as e:
            raise UnreadableFrame(f"{p}: {e}") from e
    h, w = frames[0].shape[:2]
    for p, f in zip(paths, frames):
        if f.shape[:2] != (h, w):
            raise InconsistentDimensions(f"{p} is {f.shape[:2]}, expected {(h, w)}")
    return VideoClip(clip_id=clip_id or source.name, frames=frames, fps=fps, height=h, width=w)


def write_clip(clip: VideoClip, out_dir: Path | str) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(clip.frames):
        Image.fromarray(frame, mode="RGB").save(out_dir / FRAME_NAME_FORMAT.format(i), format="PNG")


def sample_indices(length: int, k: int) -> list[int]:
    """k indices evenly spaced over [0, length-1].

    Endpoints are included for k >= 2; duplicates from rounding (k >= length)
    are collapsed, so the result is strictly increasing.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return [0]
    step = (length - 1) / (k - 1)
    return sorted({round(i * step) for i in range(k)})


def sample_uniform(clip: VideoClip, k: int) -> list[int]:
    return sample_indices(len(clip.frames), k)
