"""Task manifest: the JSON document binding expressions to clips and ground truth."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ManifestParse


@dataclass(frozen=True)
class ExpressionTask:
    """One (video, language expression) pair, optionally linked to ground truth."""

    task_id: str
    clip_id: str
    expression: str
    no_target: bool = False
    gt_dir: str | None = None  # relative to the manifest's directory


def load_manifest(path: Path | str) -> list[ExpressionTask]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ManifestParse(f"{path}: {e}") from e
    if not isinstance(doc, dict) or not isinstance(doc.get("tasks"), list):
        raise ManifestParse(f"{path}: expected an object with a 'tasks' list")
    tasks = []
    seen = set()
    for i, t in enumerate(doc["tasks"]):
        try:
            task = ExpressionTask(
                task_id=str(t["task_id"]),
                clip_id=str(t["clip_id"]),
                expression=str(t["expression"]),
                no_target=bool(t.get("no_target", False)),
                gt_dir=t.get("gt_dir"),
            )
        except (KeyError, TypeError) as e:
            raise ManifestParse(f"{path}: task #{i}: {e}") from e
        if not task.expression:
            raise ManifestParse(f"{path}: task {task.task_id}: empty expression")
        if task.task_id in seen:
            raise ManifestParse(f"{path}: duplicate task_id {task.task_id}")
        seen.add(task.task_id)
        tasks.append(task)
    return tasks
