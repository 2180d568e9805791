"""Command-line entry points.

Exit codes everywhere: 0 success, 1 degraded run or metric below threshold,
2 usage or wiring problems, 3 fatal errors.
"""

from __future__ import annotations

import importlib.resources
import json
import shutil
import sys
from pathlib import Path

import click
from PIL import Image

from . import __version__
from .backends.resolve import ROLES, resolve_services
from .config import load_config
from .datasets import generate_dataset
from .errors import ConfigError, ManifestParse, RvosError, SceneSpecError
from .evaluate import evaluate_dataset, format_table, read_prediction
from .manifest import load_manifest
from .masks import OverlayStyle, overlay_boundary, write_mask_png
from .orchestrator import STATUS_OK, RunConfig, run_batch
from .video import load_clip

EXIT_OK = 0
EXIT_DEGRADED = 1
EXIT_USAGE = 2
EXIT_FATAL = 3


def _fatal(e: Exception) -> "SystemExit":
    click.echo(f"error: {e}", err=True)
    code = EXIT_USAGE if isinstance(e, (ConfigError, ManifestParse, SceneSpecError)) else EXIT_FATAL
    return SystemExit(code)


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Referring video object segmentation over pluggable backends."""


@main.command("gen-synthetic")
@click.argument("out_dir", type=click.Path(path_type=Path))
@click.option("--scenes", type=click.Path(exists=True, path_type=Path), help="Scene suite JSON; defaults to the bundled suite.")
@click.option("--seed", default=0, show_default=True, type=int)
def gen_synthetic(out_dir: Path, scenes: Path | None, seed: int) -> None:
    """Render a synthetic dataset with ground truth under OUT_DIR."""
    try:
        if scenes is None:
            suite = importlib.resources.files("rvos") / "suite"
            doc = json.loads((suite / "suite.json").read_text())
            generate_dataset(doc, seed, out_dir)
            # The bundled chat fixture is written alongside so mock runs
            # can point planner and refiner at it directly.
            shutil.copyfile(str(suite / "chat_fixture.json"), out_dir / "chat_fixture.json")
        else:
            doc = json.loads(scenes.read_text())
            generate_dataset(doc, seed, out_dir)
    except (OSError, json.JSONDecodeError) as e:
        raise _fatal(SceneSpecError(f"cannot read scene suite: {e}"))
    except RvosError as e:
        raise _fatal(e)
    n_tasks = len(doc.get("tasks", []))
    click.echo(f"wrote {len(doc.get('scenes', []))} clips, {n_tasks} tasks to {out_dir}")


def _endpoint_overrides(flags: dict[str, str | None], file_cfg: dict[str, str]) -> dict[str, str]:
    overrides = {}
    for role in ROLES:
        value = flags.get(role) or file_cfg.get(role)
        if value:
            overrides[role] = value
    return overrides


def _int_opt(flag: int | None, file_cfg: dict[str, str], key: str, default: int) -> int:
    if flag is not None:
        return flag
    if key in file_cfg:
        try:
            return int(file_cfg[key])
        except ValueError as e:
            raise ConfigError(f"config key {key} must be an integer: {e}") from e
    return default


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--planner", help="Endpoint for the planning chat backend.")
@click.option("--refiner", help="Endpoint for the refinement chat backend.")
@click.option("--segmenter", help="Endpoint for the segmenter backend.")
@click.option("--tracker", help="Endpoint for the tracker backend.")
@click.option("--workers", type=int, default=None, help="Parallel tasks [default: 1].")
@click.option("--frame-budget", type=int, default=None)
@click.option("--max-rounds", type=int, default=None)
@click.option("--max-iterations", type=int, default=None)
@click.option("--overlap-threshold", type=float, default=None)
@click.option("--verify-frames", type=int, default=None)
def run(
    dataset: Path,
    out: Path,
    config_path: Path | None,
    planner: str | None,
    refiner: str | None,
    segmenter: str | None,
    tracker: str | None,
    workers: int | None,
    frame_budget: int | None,
    max_rounds: int | None,
    max_iterations: int | None,
    overlap_threshold: float | None,
    verify_frames: int | None,
) -> None:
    """Run the full pipeline over every task in DATASET's manifest."""
    try:
        file_cfg = load_config(config_path) if config_path else {}
        flags = {"planner": planner, "refiner": refiner, "segmenter": segmenter, "tracker": tracker}
        services = resolve_services(_endpoint_overrides(flags, file_cfg))
        if overlap_threshold is None and "overlap_threshold" in file_cfg:
            overlap_threshold = float(file_cfg["overlap_threshold"])
        cfg = RunConfig(
            frame_budget=_int_opt(frame_budget, file_cfg, "frame_budget", RunConfig.frame_budget),
            max_rounds=_int_opt(max_rounds, file_cfg, "max_rounds", RunConfig.max_rounds),
            max_iterations=_int_opt(
                max_iterations, file_cfg, "max_iterations", RunConfig.max_iterations
            ),
            overlap_threshold=(
                overlap_threshold if overlap_threshold is not None else RunConfig.overlap_threshold
            ),
            verify_frames=_int_opt(verify_frames, file_cfg, "verify_frames", RunConfig.verify_frames),
            workers=_int_opt(workers, file_cfg, "workers", RunConfig.workers),
        )
        tasks = load_manifest(dataset / "manifest.json")
        result = run_batch(services, dataset, tasks, out, cfg)
    except RvosError as e:
        raise _fatal(e)

    counts = result.counts
    click.echo(
        f"{len(result.outcomes)} tasks: {counts['ok']} ok, "
        f"{counts['degraded']} degraded, {counts['failed']} failed"
    )
    if result.worst_status != STATUS_OK:
        sys.exit(EXIT_DEGRADED)


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--predictions", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--report", "report_path", type=click.Path(path_type=Path), help="Also write the report as JSON.")
@click.option("--tol", type=int, default=None, help="Fixed boundary tolerance in pixels [default: scale with frame diagonal].")
@click.option("--min-final", type=float, default=None, help="Exit 1 when the final score is below this.")
@click.option("--components", is_flag=True, help="Print each component metric on its own line.")
def evaluate(
    dataset: Path,
    predictions: Path,
    report_path: Path | None,
    tol: int | None,
    min_final: float | None,
    components: bool,
) -> None:
    """Score predictions against DATASET ground truth."""
    try:
        report = evaluate_dataset(dataset, predictions, tol)
    except RvosError as e:
        raise _fatal(e)
    click.echo(format_table(report))
    for w in report.warnings:
        click.echo(f"warning: {w}", err=True)
    if components:
        for key in ("j_mean", "f_mean", "jf_mean", "n_acc", "t_acc", "final"):
            click.echo(f"{key} = {getattr(report, key):.6f}")
    if report_path is not None:
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(json.dumps(report.to_dict(), sort_keys=True, indent=1) + "\n")
    if min_final is not None and report.final < min_final:
        click.echo(f"final {report.final:.4f} below required {min_final}", err=True)
        sys.exit(EXIT_DEGRADED)


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--predictions", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--task", "task_id", required=True)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--masks/--no-masks", "dump_masks", default=False, help="Also write raw binary masks.")
def viz(dataset: Path, predictions: Path, task_id: str, out: Path, dump_masks: bool) -> None:
    """Write per-frame overlay PNGs for one task's prediction."""
    try:
        tasks = {t.task_id: t for t in load_manifest(dataset / "manifest.json")}
        if task_id not in tasks:
            raise ManifestParse(f"task {task_id!r} is not in the manifest")
        task = tasks[task_id]
        clip = load_clip(dataset / "clips" / task.clip_id, clip_id=task.clip_id)
        masks = read_prediction(predictions / f"{task_id}.json")
        if len(masks) != len(clip):
            raise ManifestParse(
                f"prediction has {len(masks)} frames, clip {task.clip_id} has {len(clip)}"
            )
    except RvosError as e:
        raise _fatal(e)

    out.mkdir(parents=True, exist_ok=True)
    style = OverlayStyle()
    for i, (frame, mask) in enumerate(zip(clip.frames, masks)):
        Image.fromarray(overlay_boundary(frame, mask, style)).save(out / f"{i:05d}.png")
        if dump_masks:
            write_mask_png(mask, out / f"{i:05d}_mask.png")
    click.echo(f"wrote {len(clip)} overlays to {out}")


if __name__ == "__main__":
    main()
