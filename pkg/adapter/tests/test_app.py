import base64
import json
import threading
import types

import numpy as np
import pytest
from fastapi.testclient import TestClient

from adapter_support import make_png
from rvos_adapter.app import build_app
from rvos_adapter.config import load_config
from rvos_adapter.rle import rle_decode_text, rle_encode_text


def chat_body(text: str) -> dict:
    return {
        "messages": [{"role": "user", "parts": [{"type": "text", "text": text}]}],
        "schema": None,
        "temperature": 0.0,
    }


@pytest.fixture()
def stub_client(stub_env) -> TestClient:
    return TestClient(build_app(load_config(stub_env)))


def test_chat_echo_against_stub(stub_client):
    resp = stub_client.post("/v1/chat", json=chat_body("#tag:golden-plain\ndescribe"))
    assert resp.status_code == 200
    assert resp.json() == {"text": "two geometric shapes on a grey field"}


def test_role_prefixes_reach_their_own_vendor(stub_env, tmp_path):
    for name, reply in [("p.json", "planner speaking"), ("r.json", "refiner speaking")]:
        (tmp_path / name).write_text(
            json.dumps({"entries": [{"tag": "who", "text": reply, "repeat": 5}]})
        )
    env = dict(stub_env)
    env["ADAPTER_PLANNER_MODEL"] = str(tmp_path / "p.json")
    env["ADAPTER_REFINER_MODEL"] = str(tmp_path / "r.json")
    client = TestClient(build_app(load_config(env)))

    body = chat_body("#tag:who\nhello")
    assert client.post("/planner/v1/chat", json=body).json()["text"] == "planner speaking"
    assert client.post("/refiner/v1/chat", json=body).json()["text"] == "refiner speaking"
    # bare chat is the planner
    assert client.post("/v1/chat", json=body).json()["text"] == "planner speaking"


class RecordingSegmenter:
    def __init__(self):
        self.saw = None

    def segment(self, image_png, prompt, max_candidates):
        from rvos_adapter.imaging import decode_png

        frame = decode_png(image_png)
        self.saw = frame.shape[:2]
        return [{"rle": rle_encode_text(np.ones(frame.shape[:2], dtype=bool)), "score": 0.9}]


class IdleTracker:
    def start(self, clip_id, frame_index, seed_mask, seed_text):
        return {}

    def propagate(self, handle, direction):
        return []


def test_oversized_image_downscaled_and_mask_restored(stub_env):
    env = dict(stub_env, ADAPTER_MAX_IMAGE_EDGE="16")
    config = load_config(env)
    segmenter = RecordingSegmenter()
    vendors = types.SimpleNamespace(
        planner=None, refiner=None, segmenter=segmenter, tracker=IdleTracker()
    )
    client = TestClient(build_app(config, vendors=vendors))

    resp = client.post("/v1/segment", json={
        "image_png_base64": base64.b64encode(make_png(48, 64)).decode(),
        "prompt": {"kind": "text", "text": "anything"},
        "max_candidates": 3,
    })
    assert resp.status_code == 200
    assert segmenter.saw == (12, 16)  # longer edge capped to 16, aspect kept
    mask = rle_decode_text(resp.json()["candidates"][0]["rle"])
    assert mask.shape == (48, 64)
    assert mask.all()
    assert resp.json()["candidates"][0]["score"] == 0.9


def test_image_under_cap_passes_through_untouched(stub_env):
    config = load_config(dict(stub_env, ADAPTER_MAX_IMAGE_EDGE="64"))
    segmenter = RecordingSegmenter()
    vendors = types.SimpleNamespace(
        planner=None, refiner=None, segmenter=segmenter, tracker=IdleTracker()
    )
    client = TestClient(build_app(config, vendors=vendors))
    resp = client.post("/v1/segment", json={
        "image_png_base64": base64.b64encode(make_png(48, 64)).decode(),
        "prompt": {"kind": "text", "text": "anything"},
    })
    assert resp.status_code == 200
    assert segmenter.saw == (48, 64)
    assert rle_decode_text(resp.json()["candidates"][0]["rle"]).shape == (48, 64)


class BlockingTracker:
    """Propagate blocks until released, to stage a concurrency violation."""

    def __init__(self):
        self.entered = threading.Event()
        self.release = threading.Event()

    def start(self, clip_id, frame_index, seed_mask, seed_text):
        return {"clip": clip_id}

    def propagate(self, handle, direction):
        self.entered.set()
        assert self.release.wait(timeout=10)
        return [{"frame_index": 0, "rle": "1,1:0 1"}]


def test_second_propagate_on_same_session_is_409(stub_env):
    config = load_config(stub_env)
    tracker = BlockingTracker()
    vendors = types.SimpleNamespace(planner=None, refiner=None, segmenter=None, tracker=tracker)
    client = TestClient(build_app(config, vendors=vendors))

    sid = client.post("/v1/track/init", json={
        "clip": "c", "frame_index": 0, "seed_rle": "1,1:0 1",
    }).json()["session_id"]

    first: dict = {}

    def long_call():
        first["resp"] = client.post(
            "/v1/track/propagate", json={"session_id": sid, "direction": "forward"}
        )

    worker = threading.Thread(target=long_call)
    worker.start()
    assert tracker.entered.wait(timeout=10)

    blocked = client.post(
        "/v1/track/propagate", json={"session_id": sid, "direction": "forward"}
    )
    assert blocked.status_code == 409
    assert blocked.json()["code"] == "conflict"

    tracker.release.set()
    worker.join(timeout=10)
    assert first["resp"].status_code == 200
    # the lease was released; the session is usable again
    tracker.release.set()
    again = client.post(
        "/v1/track/propagate", json={"session_id": sid, "direction": "forward"}
    )
    assert again.status_code == 200


def test_unknown_path_shape(stub_client):
    resp = stub_client.post("/v1/flip", json={})
    assert resp.status_code == 404
    assert resp.json() == {"code": "not_found", "message": "unknown path /v1/flip"}
    assert stub_client.get("/v1/flip").status_code == 404


def test_non_json_body_is_bad_request(stub_client):
    resp = stub_client.post(
        "/v1/chat", content=b"{broken", headers={"content-type": "application/json"}
    )
    assert resp.status_code == 400
    assert resp.json()["code"] == "bad_request"


def test_prefixed_service_routes_work(stub_client, golden_dataset):
    png = (golden_dataset / "clips" / "g1" / "00001.png").read_bytes()
    resp = stub_client.post("/segmenter/v1/segment", json={
        "image_png_base64": base64.b64encode(png).decode(),
        "prompt": {"kind": "text", "text": "the red square"},
    })
    assert resp.status_code == 200
    assert len(resp.json()["candidates"]) == 1
