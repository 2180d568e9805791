"""Proxies to locally hosted segmentation and tracking services.

The local services speak the same wire protocol this adapter exposes, so
forwarding is mostly pass-through: the adapter adds the image downscale
cap, its own session discipline, and error translation. A non-200 from the
service is rebuilt as the matching typed error, message intact, so callers
see the upstream diagnosis rather than a generic proxy failure.
"""

from __future__ import annotations

import base64

import httpx
import numpy as np

from ..errors import Upstream, VendorTimeout
from ..errors import error_from_wire
from ..wire import SEGMENT_PATH, TRACK_INIT_PATH, TRACK_PROPAGATE_PATH, prompt_to_wire


def _post(client: httpx.Client, url: str, body: dict) -> dict:
    try:
        resp = client.post(url, json=body)
    except httpx.TimeoutException as e:
        raise VendorTimeout(f"{url}: {e}") from e
    except httpx.HTTPError as e:
        raise Upstream(f"{url}: {e}") from e
    if resp.status_code != 200:
        try:
            payload = resp.json()
        except ValueError:
            payload = {"code": "transport", "message": resp.text[:200]}
        raise error_from_wire(resp.status_code, payload)
    try:
        return resp.json()
    except ValueError as e:
        raise Upstream(f"{url}: non-JSON body in 200 response: {e}") from e


class LocalSegmenter:
    def __init__(self, base_url: str, timeout: float, client: httpx.Client | None = None):
        self._base = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=timeout)

    def segment(self, image_png: bytes, prompt: dict, max_candidates: int) -> list[dict]:
        body = {
            "image_png_base64": base64.b64encode(image_png).decode(),
            "prompt": prompt_to_wire(prompt),
            "max_candidates": max_candidates,
        }
        data = _post(self._client, self._base + SEGMENT_PATH, body)
        return [
            {"rle": str(c["rle"]), "score": float(c["score"])}
            for c in data.get("candidates", [])
        ]


class LocalTracker:
    def __init__(self, base_url: str, timeout: float, client: httpx.Client | None = None):
        self._base = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=timeout)

    def start(self, clip_id: str, frame_index: int, seed_mask: np.ndarray, seed_text: str) -> dict:
        body = {"clip": clip_id, "frame_index": frame_index, "seed_rle": seed_text}
        data = _post(self._client, self._base + TRACK_INIT_PATH, body)
        return {"session_id": str(data["session_id"])}

    def propagate(self, handle: dict, direction: str) -> list[dict]:
        body = {"session_id": handle["session_id"], "direction": direction}
        data = _post(self._client, self._base + TRACK_PROPAGATE_PATH, body)
        return [
            {"frame_index": int(m["frame_index"]), "rle": str(m["rle"])}
            for m in data.get("masks", [])
        ]
