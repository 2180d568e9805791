"""Scoring: region similarity, boundary quality, and task-level accuracy.

Per positive task, J is the mean per-frame IoU against ground truth, F the
mean per-frame boundary F-measure, and J&F their average. Across tasks the
protocol adds two accuracies: N-acc, the fraction of no-target tasks whose
prediction is empty on every frame, and T-acc, the fraction of positive
tasks predicted non-empty on at least one frame. The headline number is

    final = (mean J&F + N-acc + T-acc) / 3

computed with exactly that expression. A mean over an empty set of tasks
scores 1.0, as does comparing an empty prediction to empty ground truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import PredictionParse
from .manifest import ExpressionTask, load_manifest
from .masks import (
    Mask,
    boundary_f,
    default_boundary_tolerance,
    iou,
    read_mask_png,
    rle_decode,
    rle_from_text,
)


def task_jf(pred: list[Mask], gt: list[Mask], tol: int | None = None) -> tuple[float, float]:
    """Frame-averaged (J, F) for one task; frames must align one to one."""
    if len(pred) != len(gt):
        raise ValueError(f"prediction has {len(pred)} frames, ground truth {len(gt)}")
    if not gt:
        return 1.0, 1.0
    js, fs = [], []
    for p, g in zip(pred, gt):
        t = default_boundary_tolerance(*g.shape) if tol is None else tol
        js.append(iou(p, g))
        fs.append(boundary_f(p, g, t))
    return sum(js) / len(js), sum(fs) / len(fs)


def n_accuracy(outcomes: list[tuple[bool, bool]]) -> float:
    """Share of no-target tasks predicted all-empty. (no_target, empty_pred) pairs."""
    relevant = [empty for no_target, empty in outcomes if no_target]
    return sum(relevant) / len(relevant) if relevant else 1.0


def t_accuracy(outcomes: list[tuple[bool, bool]]) -> float:
    """Share of positive tasks predicted non-empty somewhere."""
    relevant = [not empty for no_target, empty in outcomes if not no_target]
    return sum(relevant) / len(relevant) if relevant else 1.0


def final_score(jf_mean: float, n_acc: float, t_acc: float) -> float:
    return (jf_mean + n_acc + t_acc) / 3


@dataclass
class TaskRow:
    task_id: str
    no_target: bool
    empty_prediction: bool
    j: float | None = None
    f: float | None = None
    jf: float | None = None


@dataclass
class MetricsReport:
    j_mean: float
    f_mean: float
    jf_mean: float
    n_acc: float
    t_acc: float
    final: float
    rows: list[TaskRow] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "j_mean": self.j_mean,
            "f_mean": self.f_mean,
            "jf_mean": self.jf_mean,
            "n_acc": self.n_acc,
            "t_acc": self.t_acc,
            "final": self.final,
            "tasks": [
                {
                    "task_id": r.task_id,
                    "no_target": r.no_target,
                    "empty_prediction": r.empty_prediction,
                    "j": r.j,
                    "f": r.f,
                    "jf": r.jf,
                }
                for r in self.rows
            ],
            "warnings": self.warnings,
        }


def read_prediction(path: Path) -> list[Mask]:
    """Load one prediction file; errors always name the offending file."""
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise PredictionParse(f"{path}: {e}") from e
    try:
        rles = doc["masks"]
        return [rle_decode(rle_from_text(r)) for r in rles]
    except PredictionParse:
        raise
    except Exception as e:
        raise PredictionParse(f"{path}: bad prediction payload: {e}") from e


def load_task_gt(dataset_root: Path, task: ExpressionTask) -> list[Mask]:
    gt_dir = dataset_root / task.gt_dir
    paths = sorted(gt_dir.glob("*.png"))
    if not paths:
        raise PredictionParse(f"no ground-truth masks under {gt_dir}")
    return [read_mask_png(p) for p in paths]


def evaluate_dataset(
    dataset_root: Path | str,
    predictions_dir: Path | str,
    tol: int | None = None,
) -> MetricsReport:
    """Score every manifest task against files in the predictions directory.

    A missing prediction file counts as an all-empty prediction and leaves a
    warning; a malformed one is an error.
    """
    dataset_root = Path(dataset_root)
    predictions_dir = Path(predictions_dir)
    tasks = load_manifest(dataset_root / "manifest.json")

    rows: list[TaskRow] = []
    warnings: list[str] = []
    jf_rows: list[tuple[float, float]] = []

    for task in tasks:
        pred_path = predictions_dir / f"{task.task_id}.json"
        pred: list[Mask] | None
        if pred_path.exists():
            pred = read_prediction(pred_path)
        else:
            pred = None
            warnings.append(f"{task.task_id}: no prediction file, scoring as all-empty")

        empty = pred is None or not any(m.any() for m in pred)
        row = TaskRow(task_id=task.task_id, no_target=task.no_target, empty_prediction=empty)

        if not task.no_target:
            gt = load_task_gt(dataset_root, task)
            if pred is None:
                pred = [np.zeros_like(g) for g in gt]
            if len(pred) != len(gt):
                raise PredictionParse(
                    f"{pred_path}: {len(pred)} frames predicted, ground truth has {len(gt)}"
                )
            for p, g in zip(pred, gt):
                if p.shape != g.shape:
                    raise PredictionParse(
                        f"{pred_path}: mask {p.shape} does not match ground truth {g.shape}"
                    )
            row.j, row.f = task_jf(pred, gt, tol)
            row.jf = (row.j + row.f) / 2
            jf_rows.append((row.j, row.f))
        rows.append(row)

    outcomes = [(r.no_target, r.empty_prediction) for r in rows]
    j_mean = sum(j for j, _ in jf_rows) / len(jf_rows) if jf_rows else 1.0
    f_mean = sum(f for _, f in jf_rows) / len(jf_rows) if jf_rows else 1.0
    jf_mean = sum((j + f) / 2 for j, f in jf_rows) / len(jf_rows) if jf_rows else 1.0
    n_acc = n_accuracy(outcomes)
    t_acc = t_accuracy(outcomes)

    return MetricsReport(
        j_mean=j_mean,
        f_mean=f_mean,
        jf_mean=jf_mean,
        n_acc=n_acc,
        t_acc=t_acc,
        final=final_score(jf_mean, n_acc, t_acc),
        rows=rows,
        warnings=warnings,
    )


def format_table(report: MetricsReport) -> str:
    lines = [
        f"{'task':<12} {'J':>7} {'F':>7} {'J&F':>7}  note",
        "-" * 48,
    ]
    for r in report.rows:
        if r.no_target:
            note = "no-target, " + ("empty ok" if r.empty_prediction else "NON-EMPTY")
            lines.append(f"{r.task_id:<12} {'-':>7} {'-':>7} {'-':>7}  {note}")
        else:
            note = "empty prediction" if r.empty_prediction else ""
            lines.append(
                f"{r.task_id:<12} {r.j:>7.4f} {r.f:>7.4f} {r.jf:>7.4f}  {note}".rstrip()
            )
    lines.append("-" * 48)
    lines.append(
        f"J&F {report.jf_mean:.4f}  N-acc {report.n_acc:.4f}  "
        f"T-acc {report.t_acc:.4f}  final {report.final:.4f}"
    )
    return "\n".join(lines)
