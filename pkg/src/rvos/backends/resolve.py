"""Turn endpoint strings into live backend objects.

An endpoint is either an HTTP base URL or ``mock:<path>`` where the path
names a chat fixture file (planner, refiner) or a generated dataset root
(segmenter, tracker). Mock endpoints accept query parameters:

    mock:suite/chat.json
    mock:out/dataset?perturb=2&seed=7      (segmenter)
    mock:out/dataset?jitter=1&seed=7       (tracker)

The four roles come from RVOS_PLANNER_URL, RVOS_REFINER_URL,
RVOS_SEGMENTER_URL and RVOS_TRACKER_URL unless overridden per call.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from urllib.parse import parse_qs

from ..datasets import load_dataset_index
from ..errors import ConfigError
from .http import HttpChat, HttpSegmenter, HttpTracker
from .mocks import OracleSegmenter, ScriptedChat, SyntheticTracker

ROLES = ("planner", "refiner", "segmenter", "tracker")

ENV_VARS = {role: f"RVOS_{role.upper()}_URL" for role in ROLES}


@dataclass
class Services:
    planner: object
    refiner: object
    segmenter: object
    tracker: object

    def for_role(self, role: str):
        return getattr(self, role)


def _parse_mock(spec: str) -> tuple[str, dict]:
    rest = spec[len("mock:"):]
    path, _, query = rest.partition("?")
    if not path:
        raise ConfigError(f"mock endpoint {spec!r} names no path")
    params = {k: v[-1] for k, v in parse_qs(query).items()}
    return path, params


def resolve_endpoint(spec: str, role: str):
    """Build one backend for a role from its endpoint string."""
    if role not in ROLES:
        raise ConfigError(f"unknown backend role {role!r}")
    spec = spec.strip()
    if spec.startswith(("http://", "https://")):
        if role in ("planner", "refiner"):
            return HttpChat(spec)
        if role == "segmenter":
            return HttpSegmenter(spec)
        return HttpTracker(spec)
    if spec.startswith("mock:"):
        path, params = _parse_mock(spec)
        seed = int(params.get("seed", "0"))
        if role in ("planner", "refiner"):
            return ScriptedChat(path)
        index = load_dataset_index(path)
        if role == "segmenter":
            return OracleSegmenter(index, perturb=float(params.get("perturb", "0")), seed=seed)
        return SyntheticTracker(index, jitter=int(params.get("jitter", "0")), seed=seed)
    raise ConfigError(f"endpoint {spec!r} must start with http://, https:// or mock:")


def resolve_services(overrides: dict[str, str] | None = None) -> Services:
    """Resolve all four roles, sharing one mock instance per endpoint string.

    Scripted fixtures are stateful (repeat counters), so instances are fresh
    per call; sharing within a call keeps two roles pointed at the same
    fixture coherent.
    """
    overrides = overrides or {}
    specs: dict[str, str] = {}
    for role in ROLES:
        spec = overrides.get(role) or os.environ.get(ENV_VARS[role], "")
        if not spec:
            raise ConfigError(f"no endpoint for {role}: set {ENV_VARS[role]} or pass --{role}")
        specs[role] = spec
    built: dict[str, object] = {}
    by_role = {}
    for role in ROLES:
        key = f"{'chat' if role in ('planner', 'refiner') else role}|{specs[role]}"
        if key not in built:
            built[key] = resolve_endpoint(specs[role], role)
        by_role[role] = built[key]
    return Services(**by_role)
