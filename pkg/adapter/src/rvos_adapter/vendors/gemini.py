"""Chat vendor speaking the Gemini generateContent shape."""

from __future__ import annotations

import base64

import httpx

from ..errors import Upstream
from ..imaging import shrink_to_cap
from .common import vendor_post

DEFAULT_BASE_URL = "https://generativelanguage.googleapis.com/v1beta"


class GeminiChat:
    def __init__(
        self,
        model: str,
        api_key: str,
        timeout: float,
        base_url: str | None = None,
        max_image_edge: int = 1024,
        client: httpx.Client | None = None,
    ):
        self._model = model
        self._key = api_key
        self._base = (base_url or DEFAULT_BASE_URL).rstrip("/")
        self._client = client or httpx.Client(timeout=timeout)
        self._max_edge = max_image_edge

    def complete(self, messages: list[dict], schema: str | None, temperature: float) -> str:
        contents = []
        for msg in messages:
            parts = []
            for kind, value in msg["parts"]:
                if kind == "text":
                    parts.append({"text": value})
                else:
                    png, _ = shrink_to_cap(value, self._max_edge)
                    parts.append(
                        {"inline_data": {"mime_type": "image/png",
                                         "data": base64.b64encode(png).decode()}}
                    )
            role = "model" if msg["role"] == "assistant" else "user"
            contents.append({"role": role, "parts": parts})
        generation: dict = {"temperature": temperature}
        if schema:
            generation["responseMimeType"] = "application/json"
        body = {"contents": contents, "generationConfig": generation}
        # key travels in a header, keeping it out of URLs and error text
        data = vendor_post(
            self._client,
            f"{self._base}/models/{self._model}:generateContent",
            body,
            headers={"x-goog-api-key": self._key},
        )
        try:
            parts = data["candidates"][0]["content"]["parts"]
            return "".join(str(p.get("text", "")) for p in parts)
        except (KeyError, IndexError, TypeError) as e:
            raise Upstream(f"malformed generateContent response: {e}") from e
