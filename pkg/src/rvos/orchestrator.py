"""Batch orchestration: run the three stages over a manifest of tasks.

Each task is independent; batches run on a thread pool and results are
assembled in manifest order, so the artifacts a run writes are identical
for any worker count. The engine never reads a task's no_target flag or
ground truth: whether a clip contains the referent is the planner's call,
and the flag in the manifest exists only for the evaluator.

A run writes, under its output directory:
    predictions/<task_id>.json  per-frame masks in textual RLE
    trace.jsonl                 one event per line, tasks in manifest order
    summary.json                status counts and per-task status
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backends.resolve import Services
from .errors import BackendFailure, InvariantViolation, RvosError
from .manifest import ExpressionTask
from .masks import Mask, rle_encode, rle_to_text
from .stage1 import DEFAULT_FRAME_BUDGET, decompose_event
from .stage2 import DEFAULT_MAX_ROUNDS, run_stage2
from .stage3 import (
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_OVERLAP_THRESHOLD,
    DEFAULT_VERIFY_FRAMES,
    run_refinement_loop,
)
from .video import VideoClip, load_clip

STATUS_OK = "ok"
STATUS_DEGRADED = "degraded"
STATUS_FAILED = "failed"


@dataclass
class RunConfig:
    frame_budget: int = DEFAULT_FRAME_BUDGET
    max_rounds: int = DEFAULT_MAX_ROUNDS
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD
    verify_frames: int = DEFAULT_VERIFY_FRAMES
    workers: int = 1


@dataclass
class TaskOutcome:
    task_id: str
    clip_id: str
    status: str
    prediction: list[Mask]
    events: list[dict] = field(default_factory=list)


@dataclass
class BatchResult:
    outcomes: list[TaskOutcome]

    @property
    def counts(self) -> dict[str, int]:
        c = {STATUS_OK: 0, STATUS_DEGRADED: 0, STATUS_FAILED: 0}
        for o in self.outcomes:
            c[o.status] += 1
        return c

    @property
    def worst_status(self) -> str:
        order = (STATUS_FAILED, STATUS_DEGRADED, STATUS_OK)
        for status in order:
            if any(o.status == status for o in self.outcomes):
                return status
        return STATUS_OK


class ClipCache:
    """Thread-safe clip loader shared by one batch."""

    def __init__(self, dataset_root: Path):
        self._root = Path(dataset_root)
        self._clips: dict[str, VideoClip] = {}
        self._lock = threading.Lock()

    def get(self, clip_id: str) -> VideoClip:
        with self._lock:
            if clip_id not in self._clips:
                self._clips[clip_id] = load_clip(
                    self._root / "clips" / clip_id, clip_id=clip_id
                )
            return self._clips[clip_id]


def _empty_prediction(clip: VideoClip) -> list[Mask]:
    return [np.zeros((clip.height, clip.width), dtype=bool) for _ in range(len(clip))]


def run_task(services: Services, clip: VideoClip, task: ExpressionTask, cfg: RunConfig) -> TaskOutcome:
    """Run stages 1 to 3 for one task and collect its trace events."""
    events: list[dict] = []

    decomposition = decompose_event(services.planner, task, clip, cfg.frame_budget)
    events.append(
        {
            "task": task.task_id,
            "event": "stage1.decomposed",
            "no_target": decomposition.no_target,
            "targets": [
                {
                    "id": t.target_id,
                    "description": t.description,
                    "keyframe": t.keyframe,
                    "subject": t.is_subject,
                }
                for t in decomposition.targets
            ],
            "warnings": decomposition.warnings,
        }
    )

    if decomposition.no_target:
        events.append({"task": task.task_id, "event": "stage2.skipped", "reason": "no_target"})
        events.append({"task": task.task_id, "event": "stage3.skipped", "reason": "no_target"})
        return TaskOutcome(
            task_id=task.task_id,
            clip_id=task.clip_id,
            status=STATUS_OK,
            prediction=_empty_prediction(clip),
            events=events,
        )

    stage2 = run_stage2(
        services.planner, services.segmenter, services.tracker, clip, decomposition, cfg.max_rounds
    )
    for r in stage2.results:
        events.append(_target_event(task.task_id, "stage2.target", r))
    report = run_refinement_loop(
        services.planner,
        services.refiner,
        services.segmenter,
        services.tracker,
        clip,
        task.expression,
        stage2,
        max_iterations=cfg.max_iterations,
        overlap_threshold=cfg.overlap_threshold,
        verify_frames=cfg.verify_frames,
        max_rounds=cfg.max_rounds,
    )
    for r in stage2.results:
        if r.target.generation > 0:
            events.append(_target_event(task.task_id, "stage3.reground", r))
    events.append(
        {
            "task": task.task_id,
            "event": "stage2.merged",
            "nonempty_frames": int(sum(1 for m in stage2.merged if m.any())),
            "degraded": stage2.degraded,
        }
    )
    events.extend(_stage3_events(task.task_id, report))

    degraded = stage2.degraded or any(r.failed for r in stage2.results)
    return TaskOutcome(
        task_id=task.task_id,
        clip_id=task.clip_id,
        status=STATUS_DEGRADED if degraded else STATUS_OK,
        prediction=stage2.merged,
        events=events,
    )


def _target_event(task_id: str, event: str, r) -> dict:
    return {
        "task": task_id,
        "event": event,
        "target": r.target.target_id,
        "description": r.target.description,
        "generation": r.target.generation,
        "subject": r.target.is_subject,
        "outcome": r.transcript.outcome if not r.failed else "failed",
        "rounds": len(r.transcript.rounds),
        "actions": [rd.action for rd in r.transcript.rounds],
        "tracked": r.masks is not None,
        "failure": r.failure,
    }


def _stage3_events(task_id: str, report) -> list[dict]:
    events = []
    if report.verification_needed is not None:
        events.append(
            {
                "task": task_id,
                "event": "stage3.classified",
                "needs_verification": report.verification_needed,
            }
        )
    for v in report.verdicts:
        events.append(
            {
                "task": task_id,
                "event": "stage3.verified",
                "consistent": v.consistent,
                "reason": v.reason,
            }
        )
    for entry in report.audit:
        events.append(
            {
                "task": task_id,
                "event": "stage3.flag",
                "iteration": entry.iteration,
                "kind": entry.flag.kind,
                "targets": list(entry.flag.target_ids),
                "detail": entry.flag.detail,
                "action": entry.action,
                "resolved": entry.resolved,
            }
        )
    events.append(
        {
            "task": task_id,
            "event": "stage3.done",
            "iterations": report.iterations_run,
            "unresolved": [f.kind for f in report.unresolved],
        }
    )
    return events


def _guarded_run_task(services, cache: ClipCache, task: ExpressionTask, cfg: RunConfig) -> TaskOutcome:
    try:
        clip = cache.get(task.clip_id)
    except RvosError as e:
        return TaskOutcome(
            task_id=task.task_id,
            clip_id=task.clip_id,
            status=STATUS_FAILED,
            prediction=[],
            events=[{"task": task.task_id, "event": "task.failed", "error": str(e)}],
        )
    try:
        return run_task(services, clip, task, cfg)
    except (BackendFailure, InvariantViolation) as e:
        return TaskOutcome(
            task_id=task.task_id,
            clip_id=task.clip_id,
            status=STATUS_FAILED,
            prediction=_empty_prediction(clip),
            events=[
                {
                    "task": task.task_id,
                    "event": "task.failed",
                    "error": f"{type(e).__name__}: {e}",
                }
            ],
        )


def run_batch(
    services: Services,
    dataset_root: Path | str,
    tasks: list[ExpressionTask],
    out_dir: Path | str,
    cfg: RunConfig | None = None,
) -> BatchResult:
    """Run every task and write predictions, trace, and summary."""
    cfg = cfg or RunConfig()
    out_dir = Path(out_dir)
    cache = ClipCache(Path(dataset_root))

    if cfg.workers <= 1:
        outcomes = [_guarded_run_task(services, cache, t, cfg) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [
                pool.submit(_guarded_run_task, services, cache, t, cfg) for t in tasks
            ]
            outcomes = [f.result() for f in futures]

    write_outputs(outcomes, out_dir)
    return BatchResult(outcomes=outcomes)


def write_outputs(outcomes: list[TaskOutcome], out_dir: Path) -> None:
    pred_dir = out_dir / "predictions"
    pred_dir.mkdir(parents=True, exist_ok=True)
    for o in outcomes:
        if not o.prediction:
            # Clip never loaded, so frame dims are unknown; the evaluator
            # scores a missing file as all-empty.
            continue
        doc = {
            "task_id": o.task_id,
            "clip_id": o.clip_id,
            "masks": [rle_to_text(rle_encode(m)) for m in o.prediction],
        }
        (pred_dir / f"{o.task_id}.json").write_text(
            json.dumps(doc, sort_keys=True, indent=1) + "\n"
        )

    with (out_dir / "trace.jsonl").open("w") as fh:
        for o in outcomes:
            for event in o.events:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    summary = {
        "counts": BatchResult(outcomes=outcomes).counts,
        "tasks": {o.task_id: o.status for o in outcomes},
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
