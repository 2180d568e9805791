"""Stage 1: decompose a referring expression into groundable targets.

A planner chat backend is shown a budgeted sample of frames plus the
expression and must answer with structured JSON: either "no such object in
this clip" or a list of targets, each carrying a keyframe where the object
is clearly visible, a discriminative description, and whether it is the
central subject of the expression (as opposed to an auxiliary referent that
only helps locate the subject).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .backends.protocol import (
    ChatBackend,
    ChatRequest,
    ImagePart,
    TextPart,
    chat_with_repair,
    user_message,
)
from .errors import InvariantViolation
from .manifest import ExpressionTask
from .schemas import DECOMPOSITION_V1
from .video import VideoClip, encode_frame_png, sample_indices

DEFAULT_FRAME_BUDGET = 16

_INSTRUCTIONS = """\
#tag:stage1
You see frames sampled from a video clip, each preceded by its frame index.
Decompose the referring expression below into the object instances that the
expression is about. Reply with JSON only, of the form:
{"no_target": bool, "targets": [{"keyframe_index": int, "description": str,
"is_central_subject": bool}], "rationale": str}

Rules: pick each keyframe_index from the frame indices shown; write each
description so it discriminates its instance from everything else visible;
mark the instance(s) the expression asks to segment with
is_central_subject=true and helper referents with false; set no_target=true
with an empty target list if the described object never appears.

expression: {expression}
"""


@dataclass(frozen=True)
class GroundingTarget:
    """One groundable instance produced by decomposition."""

    target_id: str
    description: str
    keyframe: int
    is_subject: bool
    generation: int = 0

    def regenerated(self, description: str) -> "GroundingTarget":
        return dataclasses.replace(self, description=description, generation=self.generation + 1)


@dataclass
class DecompositionResult:
    task_id: str
    no_target: bool
    targets: list[GroundingTarget]
    shown_indices: list[int]
    rationale: str = ""
    warnings: list[str] = field(default_factory=list)


def build_decomposition_prompt(task: ExpressionTask, clip: VideoClip, budget: int = DEFAULT_FRAME_BUDGET) -> tuple[ChatRequest, list[int]]:
    if budget < 1:
        raise ValueError("frame budget must be at least 1")
    indices = sample_indices(len(clip), min(budget, len(clip)))
    parts: list = [TextPart(_INSTRUCTIONS.replace("{expression}", task.expression))]
    for i in indices:
        parts.append(TextPart(f"frame {i}"))
        parts.append(ImagePart(encode_frame_png(clip.frames[i])))
    req = ChatRequest(messages=(user_message(*parts),), schema=DECOMPOSITION_V1)
    return req, indices


def _snap(keyframe: int, shown: list[int]) -> int:
    return min(shown, key=lambda i: (abs(i - keyframe), i))


def decompose_event(planner: ChatBackend, task: ExpressionTask, clip: VideoClip, budget: int = DEFAULT_FRAME_BUDGET) -> DecompositionResult:
    """Run the decomposition round and normalize the planner's answer."""
    req, shown = build_decomposition_prompt(task, clip, budget)
    resp = chat_with_repair(planner, req)
    doc = resp.parsed
    assert doc is not None

    warnings: list[str] = []
    no_target = bool(doc["no_target"])
    raw_targets = doc.get("targets", [])
    if no_target and raw_targets:
        raise InvariantViolation(
            f"task {task.task_id}: planner set no_target but listed {len(raw_targets)} target(s)"
        )
    if not no_target and not raw_targets:
        raise InvariantViolation(f"task {task.task_id}: planner listed no targets for a positive call")

    targets: list[GroundingTarget] = []
    seen: set[tuple[str, int]] = set()
    for raw in raw_targets:
        description = str(raw["description"]).strip()
        keyframe = int(raw["keyframe_index"])
        if keyframe not in shown:
            snapped = _snap(keyframe, shown)
            warnings.append(
                f"keyframe {keyframe} was not among the shown frames; snapped to {snapped}"
            )
            keyframe = snapped
        key = (description.lower(), keyframe)
        if key in seen:
            warnings.append(f"dropped duplicate target {description!r} @ frame {keyframe}")
            continue
        seen.add(key)
        targets.append(
            GroundingTarget(
                target_id=f"t{len(targets):02d}",
                description=description,
                keyframe=keyframe,
                is_subject=bool(raw["is_central_subject"]),
            )
        )
    if targets and not any(t.is_subject for t in targets):
        warnings.append("no central subject among targets; merged prediction will be empty")

    return DecompositionResult(
        task_id=task.task_id,
        no_target=no_target,
        targets=targets,
        shown_indices=shown,
        rationale=str(doc.get("rationale", "")),
        warnings=warnings,
    )
