"""Chat vendor speaking the OpenAI chat-completions shape.

Also covers every OpenAI-compatible gateway (set OPENAI_BASE_URL), which is
how Qwen-style deployments are reached in practice.
"""

from __future__ import annotations

import base64

import httpx

from ..errors import Upstream
from ..imaging import shrink_to_cap
from .common import vendor_post

DEFAULT_BASE_URL = "https://api.openai.com/v1"


class OpenAiChat:
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
        payload = []
        for msg in messages:
            content = []
            for kind, value in msg["parts"]:
                if kind == "text":
                    content.append({"type": "text", "text": value})
                else:
                    png, _ = shrink_to_cap(value, self._max_edge)
                    data_url = "data:image/png;base64," + base64.b64encode(png).decode()
                    content.append({"type": "image_url", "image_url": {"url": data_url}})
            payload.append({"role": msg["role"], "content": content})
        body: dict = {"model": self._model, "messages": payload, "temperature": temperature}
        if schema:
            body["response_format"] = {"type": "json_object"}
        data = vendor_post(
            self._client,
            self._base + "/chat/completions",
            body,
            headers={"Authorization": f"Bearer {self._key}"},
        )
        try:
            return str(data["choices"][0]["message"]["content"])
        except (KeyError, IndexError, TypeError) as e:
            raise Upstream(f"malformed chat completion response: {e}") from e
