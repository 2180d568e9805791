"""Shared fixtures.

The conformance dataset is produced by the engine's own CLI (an external
interface), never by importing its internals; the golden fixture files are
the shared ones at the repository root.
"""

import json
import shutil
import subprocess
from pathlib import Path

import pytest

from adapter_support import GOLDEN


@pytest.fixture(scope="session")
def golden_dataset(tmp_path_factory) -> Path:
    """The dataset the golden exchanges were recorded against."""
    cli = shutil.which("rvos")
    assert cli, "the rvos CLI must be installed to regenerate the conformance dataset"
    scene = json.loads((GOLDEN / "scene.json").read_text())
    root = tmp_path_factory.mktemp("golden-ds")
    subprocess.run(
        [cli, "gen-synthetic", str(root),
         "--scenes", str(GOLDEN / "scene.json"), "--seed", str(scene["seed"])],
        check=True, capture_output=True,
    )
    return root


@pytest.fixture(scope="session")
def stub_env(golden_dataset) -> dict:
    """Environment mapping that wires every role to its offline stub."""
    fixture = str(GOLDEN / "chat_fixture.json")
    dataset = str(golden_dataset)
    return {
        "ADAPTER_PLANNER_VENDOR": "stub",
        "ADAPTER_PLANNER_MODEL": fixture,
        "ADAPTER_REFINER_VENDOR": "stub",
        "ADAPTER_REFINER_MODEL": fixture,
        "ADAPTER_SEGMENTER_VENDOR": "stub",
        "ADAPTER_SEGMENTER_MODEL": dataset,
        "ADAPTER_TRACKER_VENDOR": "stub",
        "ADAPTER_TRACKER_MODEL": dataset,
    }
