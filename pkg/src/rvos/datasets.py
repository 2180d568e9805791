"""Synthetic dataset assembly and indexing.

A generated dataset directory looks like:

    <root>/
      manifest.json                       tasks for the run/eval harness
      scene_index.json                    per-clip shape listing for oracle backends
      clips/<clip_id>/00000.png ...       frames
      gt/shapes/<clip_id>/<slug>/*.png    per-shape ground-truth masks
      gt/tasks/<task_id>/*.png            merged per-task ground truth

The scene index plus the per-shape masks are what the oracle segmenter and
synthetic tracker mocks consume; the manifest plus per-task masks feed the
evaluation harness.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SceneSpecError
from .masks import Mask, read_mask_png, union, write_mask_png
from .synthetic import SceneSpec, gen_synthetic, scene_from_dict
from .video import FRAME_NAME_FORMAT, VideoClip, load_clip, write_clip


def pixel_key(frame: np.ndarray) -> str:
    """Content hash identifying a frame by its decoded pixels."""
    arr = np.ascontiguousarray(np.asarray(frame, dtype=np.uint8))
    h = hashlib.sha256()
    h.update(str(arr.shape).encode())
    h.update(arr.tobytes())
    return h.hexdigest()


def generate_dataset(doc: dict, seed: int, out_dir: Path | str) -> dict:
    """Render every scene in a suite document and write the full layout.

    The document holds `scenes` (see synthetic.scene_from_dict) and `tasks`,
    each task being {task_id, clip_id, expression, no_target?, shapes?} where
    `shapes` names the ground-truth shapes whose union is the task's target.
    Returns the manifest document that was written.
    """
    out = Path(out_dir)
    scenes = [scene_from_dict(s) for s in doc.get("scenes", [])]
    if not scenes:
        raise SceneSpecError("suite document lists no scenes")
    rendered: dict[str, tuple[SceneSpec, VideoClip, dict[str, list[Mask]]]] = {}
    index: dict = {"clips": {}}
    for scene in scenes:
        if scene.clip_id in rendered:
            raise SceneSpecError(f"duplicate clip_id {scene.clip_id}")
        clip, gt = gen_synthetic(scene, seed)
        rendered[scene.clip_id] = (scene, clip, gt)
        write_clip(clip, out / "clips" / scene.clip_id)
        for shape in scene.shapes:
            shape_dir = out / "gt" / "shapes" / scene.clip_id / shape.slug
            shape_dir.mkdir(parents=True, exist_ok=True)
            for t, mask in enumerate(gt[shape.slug]):
                write_mask_png(mask, shape_dir / FRAME_NAME_FORMAT.format(t))
        index["clips"][scene.clip_id] = {
            "frames": scene.frame_count,
            "height": scene.height,
            "width": scene.width,
            "fps": scene.fps,
            "shapes": [{"name": s.name, "slug": s.slug} for s in scene.shapes],
        }
    (out / "scene_index.json").write_text(json.dumps(index, indent=2) + "\n")

    manifest: dict = {"tasks": []}
    for t in doc.get("tasks", []):
        try:
            task_id = str(t["task_id"])
            clip_id = str(t["clip_id"])
            expression = str(t["expression"])
            no_target = bool(t.get("no_target", False))
            shape_names = list(t.get("shapes", []))
        except (KeyError, TypeError) as e:
            raise SceneSpecError(f"bad task entry: {e}") from e
        if clip_id not in rendered:
            raise SceneSpecError(f"task {task_id} references unknown clip {clip_id}")
        entry = {
            "task_id": task_id,
            "clip_id": clip_id,
            "expression": expression,
            "no_target": no_target,
        }
        if not no_target:
            if not shape_names:
                raise SceneSpecError(f"task {task_id} declares no ground-truth shapes")
            scene, clip, gt = rendered[clip_id]
            slugs = []
            by_name = {s.name: s.slug for s in scene.shapes}
            for name in shape_names:
                if name not in by_name:
                    raise SceneSpecError(f"task {task_id}: unknown shape {name!r} in {clip_id}")
                slugs.append(by_name[name])
            task_dir = out / "gt" / "tasks" / task_id
            task_dir.mkdir(parents=True, exist_ok=True)
            for frame_idx in range(scene.frame_count):
                merged = union([gt[slug][frame_idx] for slug in slugs])
                write_mask_png(merged, task_dir / FRAME_NAME_FORMAT.format(frame_idx))
            entry["gt_dir"] = str(Path("gt") / "tasks" / task_id)
        manifest["tasks"].append(entry)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


@dataclass
class ClipRecord:
    clip_id: str
    frames: int
    height: int
    width: int
    shapes: list[dict]  # {"name", "slug"}


class DatasetIndex:
    """Read side of a generated dataset, as consumed by the oracle backends.

    Ground-truth masks are loaded lazily and cached; the pixel-hash index maps
    any frame an engine re-encodes back to its (clip, frame) identity.
    """

    def __init__(self, root: Path | str):
        self.root = Path(root)
        try:
            index = json.loads((self.root / "scene_index.json").read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise SceneSpecError(f"cannot read scene index under {self.root}: {e}") from e
        self.clips: dict[str, ClipRecord] = {}
        for clip_id, rec in index.get("clips", {}).items():
            self.clips[clip_id] = ClipRecord(
                clip_id=clip_id,
                frames=int(rec["frames"]),
                height=int(rec["height"]),
                width=int(rec["width"]),
                shapes=list(rec["shapes"]),
            )
        self._frame_lookup: dict[str, tuple[str, int]] = {}
        for clip_id in self.clips:
            clip = load_clip(self.root / "clips" / clip_id, clip_id=clip_id)
            for i, frame in enumerate(clip.frames):
                self._frame_lookup[pixel_key(frame)] = (clip_id, i)
        self._gt_cache: dict[tuple[str, str], list[Mask]] = {}

    def locate_frame(self, frame: np.ndarray) -> tuple[str, int] | None:
        return self._frame_lookup.get(pixel_key(frame))

    def shape_masks(self, clip_id: str, slug: str) -> list[Mask]:
        key = (clip_id, slug)
        if key not in self._gt_cache:
            shape_dir = self.root / "gt" / "shapes" / clip_id / slug
            paths = sorted(shape_dir.glob("*.png"))
            self._gt_cache[key] = [read_mask_png(p) for p in paths]
        return self._gt_cache[key]

    def shape_mask(self, clip_id: str, slug: str, frame_index: int) -> Mask:
        return self.shape_masks(clip_id, slug)[frame_index]


_INDEX_CACHE: dict[Path, DatasetIndex] = {}


def load_dataset_index(root: Path | str) -> DatasetIndex:
    """Cached DatasetIndex so the segmenter and tracker mocks share one scan."""
    key = Path(root).resolve()
    if key not in _INDEX_CACHE:
        _INDEX_CACHE[key] = DatasetIndex(key)
    return _INDEX_CACHE[key]
