"""Binary mask algebra: RLE codec, region and boundary metrics, overlays.

A mask is a 2D numpy bool array of shape (height, width). All functions here
are pure; nothing mutates its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

from .errors import DimensionMismatch, MalformedRle

Mask = np.ndarray  # 2D bool array


@dataclass(frozen=True)
class RleMask:
    """Run-length encoded mask.

    Counts alternate background/foreground starting with a background run,
    over a column-major scan of the pixel grid (COCO's uncompressed layout,
    so real-dataset annotations can be ingested unchanged). Only the first
    count may be zero.
    """

    height: int
    width: int
    counts: tuple[int, ...]


@dataclass(frozen=True)
class OverlayStyle:
    color: tuple[int, int, int] = (255, 0, 0)
    width: int = 2


def as_mask(a) -> Mask:
    """Coerce to a validated 2D bool array."""
    m = np.asarray(a, dtype=bool)
    if m.ndim != 2:
        raise DimensionMismatch(f"mask must be 2D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionMismatch(f"mask must be at least 1x1, got {m.shape}")
    return m


def _check_same_shape(a: Mask, b: Mask) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape {a.shape} vs {b.shape}")


def rle_encode(mask: Mask) -> RleMask:
    """Encode a mask losslessly; column-major scan, background run first."""
    m = as_mask(mask)
    h, w = m.shape
    flat = m.reshape(-1, order="F")
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    counts = [int(c) for c in np.diff(bounds)]
    if flat[0]:
        counts.insert(0, 0)
    return RleMask(h, w, tuple(counts))


def rle_decode(rle: RleMask) -> Mask:
    """Inverse of rle_encode. Raises MalformedRle on invariant violations."""
    h, w = rle.height, rle.width
    if h < 1 or w < 1:
        raise MalformedRle(f"bad dimensions {h}x{w}")
    counts = list(rle.counts)
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


def rle_to_text(rle: RleMask) -> str:
    """Serialize to the `h,w:c0 c1 ...` textual form used in prediction files."""
    return f"{rle.height},{rle.width}:" + " ".join(str(c) for c in rle.counts)


def rle_from_text(text: str) -> RleMask:
    try:
        dims, _, body = text.partition(":")
        h_s, w_s = dims.split(",")
        counts = tuple(int(c) for c in body.split())
        rle = RleMask(int(h_s), int(w_s), counts)
    except (ValueError, AttributeError) as e:
        raise MalformedRle(f"unparsable RLE text: {e}") from e
    # round-trip through decode to reject invalid counts early
    rle_decode(rle)
    return rle


def area(mask: Mask) -> int:
    return int(np.count_nonzero(as_mask(mask)))


def iou(a: Mask, b: Mask) -> float:
    """Jaccard index. Both masks empty scores 1.0 (correct empty prediction)."""
    a = as_mask(a)
    b = as_mask(b)
    _check_same_shape(a, b)
    inter = int(np.count_nonzero(a & b))
    union_ = int(np.count_nonzero(a | b))
    if union_ == 0:
        return 1.0
    return inter / union_


def union(masks: Sequence[Mask], *, shape: tuple[int, int] | None = None) -> Mask:
    """Pixelwise OR. An empty list needs an explicit dimension hint."""
    masks = list(masks)
    if not masks:
        if shape is None:
            raise DimensionMismatch("union of zero masks requires a shape hint")
        return np.zeros(shape, dtype=bool)
    out = as_mask(masks[0]).copy()
    for m in masks[1:]:
        m = as_mask(m)
        _check_same_shape(out, m)
        out |= m
    return out


def boundary_map(mask: Mask) -> Mask:
    """Foreground pixels 4-adjacent to background or to the image border."""
    m = as_mask(mask)
    h, w = m.shape
    p = np.zeros((h + 2, w + 2), dtype=bool)
    p[1:-1, 1:-1] = m
    interior = p[:-2, 1:-1] & p[2:, 1:-1] & p[1:-1, :-2] & p[1:-1, 2:]
    return m & ~interior


def dilate_disc(mask: Mask, radius: int) -> Mask:
    """Dilate with a disc of the given integer radius (Euclidean offsets)."""
    m = as_mask(mask)
    r = int(radius)
    if r <= 0 or not m.any():
        return m.copy()
    h, w = m.shape
    out = np.zeros_like(m)
    for dy in range(-r, r + 1):
        if abs(dy) >= h:
            continue
        span = math.isqrt(r * r - dy * dy)
        for dx in range(-span, span + 1):
            if abs(dx) >= w:
                continue
            ys = slice(max(0, dy), h + min(0, dy))
            xs = slice(max(0, dx), w + min(0, dx))
            ys_src = slice(max(0, -dy), h + min(0, -dy))
            xs_src = slice(max(0, -dx), w + min(0, -dx))
            out[ys, xs] |= m[ys_src, xs_src]
    return out


def boundary_f(pred: Mask, gt: Mask, tol: int) -> float:
    """Boundary F-measure at a pixel tolerance.

    A boundary pixel matches when some boundary pixel of the other mask lies
    within Euclidean distance `tol`, implemented by dilating the other
    boundary with a disc of radius `tol`. Both boundaries empty scores 1.0;
    exactly one empty scores 0.0.
    """
    pred = as_mask(pred)
    gt = as_mask(gt)
    _check_same_shape(pred, gt)
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    pb = boundary_map(pred)
    gb = boundary_map(gt)
    n_pb = int(np.count_nonzero(pb))
    n_gb = int(np.count_nonzero(gb))
    if n_pb == 0 and n_gb == 0:
        return 1.0
    if n_pb == 0 or n_gb == 0:
        return 0.0
    precision = int(np.count_nonzero(pb & dilate_disc(gb, tol))) / n_pb
    recall = int(np.count_nonzero(gb & dilate_disc(pb, tol))) / n_gb
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def default_boundary_tolerance(height: int, width: int) -> int:
    """round(0.8% of the image diagonal), at least 1 pixel."""
    return max(1, round(0.008 * math.hypot(height, width)))


def overlay_boundary(frame: np.ndarray, mask: Mask, style: OverlayStyle = OverlayStyle()) -> np.ndarray:
    """Recolor the mask boundary band on a copy of an RGB frame.

    The band is the boundary dilated to style.width pixels; every other pixel
    is returned byte-identical.
    """
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise DimensionMismatch(f"frame must be HxWx3, got {frame.shape}")
    m = as_mask(mask)
    if frame.shape[:2] != m.shape:
        raise DimensionMismatch(f"frame {frame.shape[:2]} vs mask {m.shape}")
    band = dilate_disc(boundary_map(m), max(0, int(style.width) - 1))
    out = frame.copy()
    out[band] = np.asarray(style.color, dtype=np.uint8)
    return out


def write_mask_png(mask: Mask, path) -> None:
    """8-bit grayscale PNG, foreground = 255."""
    m = as_mask(mask)
    Image.fromarray((m.astype(np.uint8) * 255), mode="L").save(path, format="PNG")


def read_mask_png(path) -> Mask:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return arr > 0
