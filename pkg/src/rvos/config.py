"""Optional key=value run configuration files.

Lines are `key = value`; blank lines and #-comments are skipped. Values stay
strings here; the CLI owns coercion and lets explicit flags win over file
values.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError

KNOWN_KEYS = {
    "planner",
    "refiner",
    "segmenter",
    "tracker",
    "workers",
    "frame_budget",
    "max_rounds",
    "max_iterations",
    "overlap_threshold",
    "verify_frames",
}


def load_config(path: Path | str) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out
