"""Video container to frame-directory conversion."""

from __future__ import annotations

from pathlib import Path

import cv2

from .errors import ConversionError

FRAME_NAME_FORMAT = "{:05d}.png"


def probe_frame_count(source: Path | str) -> int:
    """Frame count according to container metadata."""
    cap = cv2.VideoCapture(str(source))
    try:
        if not cap.isOpened():
            raise ConversionError(f"cannot open video {source}")
        return int(cap.get(cv2.CAP_PROP_FRAME_COUNT) or 0)
    finally:
        cap.release()


def convert_video(source: Path | str, out_dir: Path | str) -> int:
    """Decode a container into zero-padded frame PNGs; returns the count."""
    cap = cv2.VideoCapture(str(source))
    if not cap.isOpened():
        cap.release()
        raise ConversionError(f"cannot open video {source}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    dims: tuple[int, int] | None = None
    try:
        while True:
            ok, frame = cap.read()
            if not ok:
                break
            if dims is None:
                dims = frame.shape[:2]
            elif frame.shape[:2] != dims:
                raise ConversionError(
                    f"frame {count} is {frame.shape[:2]}, previous frames were {dims}"
                )
            if not cv2.imwrite(str(out / FRAME_NAME_FORMAT.format(count)), frame):
                raise ConversionError(f"cannot write frame {count} under {out}")
            count += 1
    finally:
        cap.release()
    if count == 0:
        raise ConversionError(f"no frames decoded from {source}")
    return count
