"""Service configuration from environment variables.

Each role (planner, refiner, segmenter, tracker) maps to exactly one vendor
backend, selected by ADAPTER_<ROLE>_VENDOR with its model or resource named
by ADAPTER_<ROLE>_MODEL. Vendors that call a hosted API additionally need
their key variable. Keys are kept out of reprs and never logged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import ConfigError

ROLES = ("planner", "refiner", "segmenter", "tracker")
CHAT_ROLES = ("planner", "refiner")

# vendor -> env var holding its API key; vendors absent here need none
KEY_VARS = {"openai": "OPENAI_API_KEY", "gemini": "GEMINI_API_KEY"}
# vendor -> env var overriding its default endpoint
BASE_URL_VARS = {"openai": "OPENAI_BASE_URL", "gemini": "GEMINI_BASE_URL"}

CHAT_VENDORS = ("stub", "openai", "gemini")
SERVICE_VENDORS = ("stub", "local")

DEFAULT_TIMEOUT = 30.0
DEFAULT_MAX_IMAGE_EDGE = 1024
DEFAULT_SESSION_TTL = 3600.0


@dataclass
class RoleConfig:
    role: str
    vendor: str
    # model name for hosted vendors, base URL for `local`, resource path for `stub`
    model: str
    api_key: str | None = field(default=None, repr=False)
    base_url: str | None = None


@dataclass
class AdapterConfig:
    roles: dict[str, RoleConfig]
    timeout: float = DEFAULT_TIMEOUT
    max_image_edge: int = DEFAULT_MAX_IMAGE_EDGE
    session_ttl: float = DEFAULT_SESSION_TTL


def _positive(env: Mapping[str, str], var: str, default: float, cast) -> float:
    raw = env.get(var)
    if raw is None:
        return default
    try:
        value = cast(raw)
    except ValueError as e:
        raise ConfigError(f"{var} must be a number: {e}") from e
    if value <= 0:
        raise ConfigError(f"{var} must be positive, got {value}")
    return value


def load_config(env: Mapping[str, str]) -> AdapterConfig:
    """Validate the ADAPTER_* environment into a config, or refuse to start.

    Every failure message names the role it belongs to, so a misconfigured
    deployment points straight at the variable to fix.
    """
    roles: dict[str, RoleConfig] = {}
    for role in ROLES:
        vendor_var = f"ADAPTER_{role.upper()}_VENDOR"
        model_var = f"ADAPTER_{role.upper()}_MODEL"
        vendor = env.get(vendor_var)
        if not vendor:
            raise ConfigError(f"{role}: {vendor_var} is not set")
        allowed = CHAT_VENDORS if role in CHAT_ROLES else SERVICE_VENDORS
        if vendor not in allowed:
            raise ConfigError(
                f"{role}: unknown vendor {vendor!r} (expected one of: {', '.join(allowed)})"
            )
        model = env.get(model_var)
        if not model:
            raise ConfigError(f"{role}: {model_var} is not set")

        api_key = None
        key_var = KEY_VARS.get(vendor)
        if key_var:
            api_key = env.get(key_var)
            if not api_key:
                raise ConfigError(f"{role}: vendor {vendor!r} needs {key_var}")
        if vendor == "stub" and not Path(model).exists():
            raise ConfigError(f"{role}: stub resource {model} does not exist")
        if vendor == "local" and not model.startswith(("http://", "https://")):
            raise ConfigError(
                f"{role}: local vendor expects a base URL in {model_var}, got {model!r}"
            )
        roles[role] = RoleConfig(
            role=role,
            vendor=vendor,
            model=model,
            api_key=api_key,
            base_url=env.get(BASE_URL_VARS.get(vendor, "")),
        )

    return AdapterConfig(
        roles=roles,
        timeout=_positive(env, "ADAPTER_TIMEOUT", DEFAULT_TIMEOUT, float),
        max_image_edge=int(_positive(env, "ADAPTER_MAX_IMAGE_EDGE", DEFAULT_MAX_IMAGE_EDGE, int)),
        session_ttl=_positive(env, "ADAPTER_SESSION_TTL", DEFAULT_SESSION_TTL, float),
    )


def describe(config: AdapterConfig) -> list[str]:
    """Printable role table for startup logs. Credentials never appear."""
    lines = []
    for role in ROLES:
        rc = config.roles[role]
        keyed = " (keyed)" if rc.api_key else ""
        lines.append(f"{role}: vendor={rc.vendor} model={rc.model}{keyed}")
    return lines
