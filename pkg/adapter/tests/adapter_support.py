"""Shared test helpers for the adapter tree.

Lives outside conftest.py so test modules can import it by a name that stays
unique when several test trees are collected in one pytest run.
"""

import io
from pathlib import Path

import numpy as np
from PIL import Image

GOLDEN = Path(__file__).resolve().parents[2] / "tests" / "golden"


def make_png(height: int, width: int, value: int = 90) -> bytes:
    arr = np.full((height, width, 3), value, dtype=np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
