import base64
import json

import httpx
import pytest

from adapter_support import make_png
from rvos_adapter import errors
from rvos_adapter.vendors.gemini import GeminiChat
from rvos_adapter.vendors.local import LocalSegmenter, LocalTracker
from rvos_adapter.vendors.openai import OpenAiChat


def capture_client(respond):
    seen: list[httpx.Request] = []

    def handler(request: httpx.Request) -> httpx.Response:
        seen.append(request)
        return respond(request)

    return httpx.Client(transport=httpx.MockTransport(handler)), seen


def simple_messages(text="hello", image: bytes | None = None):
    parts = [("text", text)]
    if image is not None:
        parts.append(("image", image))
    return [{"role": "user", "parts": parts}]


class TestOpenAi:
    def ok(self, text="fine"):
        def respond(request):
            return httpx.Response(
                200, json={"choices": [{"message": {"content": text}}]}
            )

        return respond

    def test_request_shape(self):
        client, seen = capture_client(self.ok("the reply"))
        chat = OpenAiChat("gpt-test", "sk-secret", timeout=5.0, client=client)
        out = chat.complete(simple_messages("describe", make_png(8, 8)), None, 0.3)
        assert out == "the reply"

        request = seen[0]
        assert request.url == httpx.URL("https://api.openai.com/v1/chat/completions")
        assert request.headers["authorization"] == "Bearer sk-secret"
        body = json.loads(request.content)
        assert body["model"] == "gpt-test"
        assert body["temperature"] == 0.3
        content = body["messages"][0]["content"]
        assert content[0] == {"type": "text", "text": "describe"}
        assert content[1]["type"] == "image_url"
        assert content[1]["image_url"]["url"].startswith("data:image/png;base64,")
        assert "response_format" not in body

    def test_schema_requests_json_output(self):
        client, seen = capture_client(self.ok())
        chat = OpenAiChat("gpt-test", "k", timeout=5.0, client=client)
        chat.complete(simple_messages(), {"type": "object"}, 0.0)
        body = json.loads(seen[0].content)
        assert body["response_format"] == {"type": "json_object"}

    def test_custom_base_url(self):
        client, seen = capture_client(self.ok())
        chat = OpenAiChat(
            "m", "k", timeout=5.0, base_url="http://proxy.local/v2/", client=client
        )
        chat.complete(simple_messages(), None, 0.0)
        assert str(seen[0].url) == "http://proxy.local/v2/chat/completions"

    def test_timeout_maps_to_vendor_timeout(self):
        def respond(request):
            raise httpx.ReadTimeout("slow", request=request)

        client, _ = capture_client(respond)
        chat = OpenAiChat("m", "k", timeout=0.1, client=client)
        with pytest.raises(errors.VendorTimeout):
            chat.complete(simple_messages(), None, 0.0)

    def test_http_error_maps_to_upstream_without_leaking_key(self):
        client, _ = capture_client(lambda r: httpx.Response(401, text="nope"))
        chat = OpenAiChat("m", "sk-secret-key", timeout=5.0, client=client)
        with pytest.raises(errors.Upstream) as info:
            chat.complete(simple_messages(), None, 0.0)
        assert "401" in str(info.value)
        assert "sk-secret-key" not in str(info.value)

    def test_malformed_success_body_is_upstream(self):
        client, _ = capture_client(lambda r: httpx.Response(200, json={"weird": 1}))
        chat = OpenAiChat("m", "k", timeout=5.0, client=client)
        with pytest.raises(errors.Upstream):
            chat.complete(simple_messages(), None, 0.0)


class TestGemini:
    def ok(self, text="fine"):
        def respond(request):
            return httpx.Response(
                200,
                json={"candidates": [{"content": {"parts": [{"text": text}]}}]},
            )

        return respond

    def test_request_shape(self):
        client, seen = capture_client(self.ok("g says"))
        chat = GeminiChat("gem-test", "g-key", timeout=5.0, client=client)
        messages = [
            {"role": "assistant", "parts": [("text", "earlier")]},
            {"role": "user", "parts": [("text", "now"), ("image", make_png(4, 4))]},
        ]
        out = chat.complete(messages, {"type": "object"}, 0.7)
        assert out == "g says"

        request = seen[0]
        assert request.url.path.endswith("/models/gem-test:generateContent")
        # the key travels in a header, never in the URL
        assert "g-key" not in str(request.url)
        assert request.headers["x-goog-api-key"] == "g-key"
        body = json.loads(request.content)
        assert body["contents"][0]["role"] == "model"
        assert body["contents"][1]["role"] == "user"
        parts = body["contents"][1]["parts"]
        assert parts[0] == {"text": "now"}
        assert parts[1]["inline_data"]["mime_type"] == "image/png"
        config = body["generationConfig"]
        assert config["temperature"] == 0.7
        assert config["responseMimeType"] == "application/json"

    def test_multi_part_reply_is_joined(self):
        def respond(request):
            return httpx.Response(
                200,
                json={
                    "candidates": [
                        {"content": {"parts": [{"text": "a"}, {"text": "b"}]}}
                    ]
                },
            )

        client, _ = capture_client(respond)
        chat = GeminiChat("m", "k", timeout=5.0, client=client)
        assert chat.complete(simple_messages(), None, 0.0) == "ab"

    def test_error_status_maps_to_upstream(self):
        client, _ = capture_client(lambda r: httpx.Response(500, text="boom"))
        chat = GeminiChat("m", "k", timeout=5.0, client=client)
        with pytest.raises(errors.Upstream):
            chat.complete(simple_messages(), None, 0.0)


class TestLocalVendors:
    def test_segment_forwards_wire_body(self):
        def respond(request):
            body = json.loads(request.content)
            assert body["prompt"] == {"kind": "text", "text": "the disc"}
            assert body["max_candidates"] == 2
            base64.b64decode(body["image_png_base64"], validate=True)
            return httpx.Response(
                200, json={"candidates": [{"rle": "1,1:0 1", "score": 0.5}]}
            )

        client, seen = capture_client(respond)
        segmenter = LocalSegmenter("http://seg.local:9000", timeout=5.0, client=client)
        out = segmenter.segment(make_png(4, 4), {"kind": "text", "text": "the disc"}, 2)
        assert out == [{"rle": "1,1:0 1", "score": 0.5}]
        assert str(seen[0].url) == "http://seg.local:9000/v1/segment"

    def test_typed_error_is_reraised_with_message(self):
        def respond(request):
            return httpx.Response(
                400, json={"code": "empty_seed", "message": "tracking seed mask is empty"}
            )

        client, _ = capture_client(respond)
        tracker = LocalTracker("http://trk.local", timeout=5.0, client=client)
        with pytest.raises(errors.EmptySeed) as info:
            tracker.start("c", 0, None, "2,2:4")
        assert str(info.value) == "tracking seed mask is empty"

    def test_tracker_start_and_propagate_use_vendor_session(self):
        calls = []

        def respond(request):
            calls.append((request.url.path, json.loads(request.content)))
            if request.url.path.endswith("init"):
                return httpx.Response(200, json={"session_id": "vend-42"})
            return httpx.Response(
                200, json={"masks": [{"frame_index": 3, "rle": "1,1:0 1"}]}
            )

        client, _ = capture_client(respond)
        tracker = LocalTracker("http://trk.local", timeout=5.0, client=client)
        handle = tracker.start("clipA", 2, None, "1,1:0 1")
        masks = tracker.propagate(handle, "forward")
        assert masks == [{"frame_index": 3, "rle": "1,1:0 1"}]

        init_path, init_body = calls[0]
        prop_path, prop_body = calls[1]
        assert init_path == "/v1/track/init"
        assert init_body == {"clip": "clipA", "frame_index": 2, "seed_rle": "1,1:0 1"}
        assert prop_path == "/v1/track/propagate"
        assert prop_body == {"session_id": "vend-42", "direction": "forward"}

    def test_unreachable_host_is_upstream(self):
        def respond(request):
            raise httpx.ConnectError("refused", request=request)

        client, _ = capture_client(respond)
        segmenter = LocalSegmenter("http://down.local", timeout=1.0, client=client)
        with pytest.raises(errors.Upstream):
            segmenter.segment(make_png(2, 2), {"kind": "text", "text": "x"}, 1)
