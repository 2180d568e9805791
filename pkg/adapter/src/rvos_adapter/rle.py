"""Run-length mask codec matching the wire protocol's textual form.

Counts alternate background/foreground over a column-major scan, starting
with a background run; only the first count may be zero. The textual form
is `h,w:c0 c1 ...`. Validation messages are part of the protocol surface
(clients see them in error bodies), so they are kept stable.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import MalformedRle


def rle_encode_text(mask: np.ndarray) -> str:
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    flat = m.reshape(-1, order="F")
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    counts = [int(c) for c in np.diff(bounds)]
    if flat[0]:
        counts.insert(0, 0)
    return f"{h},{w}:" + " ".join(str(c) for c in counts)


def _decode(h: int, w: int, counts: tuple[int, ...]) -> np.ndarray:
    if h < 1 or w < 1:
        raise MalformedRle(f"bad dimensions {h}x{w}")
    if not counts:
        raise MalformedRle("empty count list")
    for i, c in enumerate(counts):
        if c < 0:
            raise MalformedRle(f"negative count at position {i}")
        if c == 0 and i != 0:
            raise MalformedRle(f"zero count at position {i} (only the first may be zero)")
    total = sum(counts)
    if total != h * w:
        raise MalformedRle(f"counts sum to {total}, expected {h * w}")
    values = (np.arange(len(counts)) % 2).astype(bool)
    flat = np.repeat(values, counts)
    return flat.reshape((h, w), order="F")


def rle_decode_text(text: str) -> np.ndarray:
    try:
        dims, _, body = text.partition(":")
        h_s, w_s = dims.split(",")
        counts = tuple(int(c) for c in body.split())
        h, w = int(h_s), int(w_s)
    except (ValueError, AttributeError) as e:
        raise MalformedRle(f"unparsable RLE text: {e}") from e
    return _decode(h, w, counts)


def resize_mask(mask: np.ndarray, height: int, width: int) -> np.ndarray:
    """Nearest-neighbour resize, for undoing an image downscale."""
    m = np.asarray(mask, dtype=bool)
    if m.shape == (height, width):
        return m
    img = Image.fromarray(m.astype(np.uint8) * 255, mode="L")
    return np.asarray(img.resize((width, height), Image.NEAREST)) > 0
