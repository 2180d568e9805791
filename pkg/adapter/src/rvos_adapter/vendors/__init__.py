"""Vendor construction from role configuration.

Builders share instances within one service: two chat roles pointing at the
same stub fixture share its replay state (matching the reference mocks),
and the segmenter and tracker stubs share one dataset scan.
"""

from __future__ import annotations

from ..config import AdapterConfig, RoleConfig
from .gemini import GeminiChat
from .local import LocalSegmenter, LocalTracker
from .openai import OpenAiChat
from .stub import DatasetView, StubChat, StubSegmenter, StubTracker


class VendorSet:
    """All four role backends for one service instance."""

    def __init__(self, config: AdapterConfig):
        self._config = config
        self._chat_cache: dict[tuple[str, str], object] = {}
        self._view_cache: dict[str, DatasetView] = {}
        self.planner = self._chat(config.roles["planner"])
        self.refiner = self._chat(config.roles["refiner"])
        self.segmenter = self._segmenter(config.roles["segmenter"])
        self.tracker = self._tracker(config.roles["tracker"])

    def _chat(self, rc: RoleConfig):
        key = (rc.vendor, rc.model)
        if key not in self._chat_cache:
            if rc.vendor == "stub":
                vendor = StubChat(rc.model)
            elif rc.vendor == "openai":
                vendor = OpenAiChat(
                    rc.model, rc.api_key, self._config.timeout,
                    base_url=rc.base_url, max_image_edge=self._config.max_image_edge,
                )
            else:
                vendor = GeminiChat(
                    rc.model, rc.api_key, self._config.timeout,
                    base_url=rc.base_url, max_image_edge=self._config.max_image_edge,
                )
            self._chat_cache[key] = vendor
        return self._chat_cache[key]

    def _view(self, root: str) -> DatasetView:
        if root not in self._view_cache:
            self._view_cache[root] = DatasetView(root)
        return self._view_cache[root]

    def _segmenter(self, rc: RoleConfig):
        if rc.vendor == "stub":
            return StubSegmenter(self._view(rc.model))
        return LocalSegmenter(rc.model, self._config.timeout)

    def _tracker(self, rc: RoleConfig):
        if rc.vendor == "stub":
            return StubTracker(self._view(rc.model))
        return LocalTracker(rc.model, self._config.timeout)
