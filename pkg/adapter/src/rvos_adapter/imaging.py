"""PNG decode/encode helpers and the image downscale cap."""

from __future__ import annotations

import hashlib
import io

import numpy as np
from PIL import Image

from .errors import BadImage


def decode_png(data: bytes) -> np.ndarray:
    """Decode to an HxWx3 uint8 RGB array."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            return np.asarray(img.convert("RGB"))
    except Exception as e:
        # keep the message stable: PIL's own embeds a BytesIO repr
        raise BadImage("undecodable image payload") from e


def encode_png(frame: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(frame, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def pixel_key(frame: np.ndarray) -> str:
    """Content hash identifying a frame by decoded pixels, not file bytes."""
    arr = np.ascontiguousarray(np.asarray(frame, dtype=np.uint8))
    h = hashlib.sha256()
    h.update(str(arr.shape).encode())
    h.update(arr.tobytes())
    return h.hexdigest()


def read_mask_png(path) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return arr > 0


def shrink_to_cap(png: bytes, max_edge: int) -> tuple[bytes, tuple[int, int]]:
    """Downscale so the longer edge fits max_edge.

    Returns the (possibly re-encoded) PNG plus the original (height, width)
    so masks produced against the shrunk image can be sized back up.
    """
    frame = decode_png(png)
    h, w = frame.shape[:2]
    if max(h, w) <= max_edge:
        return png, (h, w)
    scale = max_edge / max(h, w)
    h2 = max(1, round(h * scale))
    w2 = max(1, round(w * scale))
    img = Image.fromarray(frame, mode="RGB").resize((w2, h2), Image.BILINEAR)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue(), (h, w)
