"""Stage 3: self-refinement of grounded tracks.

Two families of checks drive the loop. Structural checks need no model:
EmptyPrediction fires when a positive task produced an all-empty merged
track, HighOverlap when two central subjects cover the same region.
Behavior verification is model-driven and only consulted for expressions
that actually constrain behavior (directions, negations); the merged track
is burned onto sampled frames as a boundary overlay and a refiner backend
judges whether the highlighted object does what the expression says.

Each flagged target gets its description regenerated and is re-grounded and
re-tracked. The loop is bounded: at most ``max_iterations`` refinement
passes, after which remaining flags are recorded as unresolved.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .backends.protocol import (
    ChatBackend,
    ChatRequest,
    ImagePart,
    SegmenterBackend,
    TextPart,
    TrackerBackend,
    chat_with_repair,
    user_message,
)
from .errors import BackendFailure, SchemaViolation, Timeout, Transport, Unrefinable
from .masks import OverlayStyle, iou, overlay_boundary
from .schemas import NEEDS_VERIFICATION_V1, REFINED_DESCRIPTION_V1, VERDICT_V1
from .stage2 import (
    DEFAULT_MAX_ROUNDS,
    Stage2Result,
    TrackResult,
    ground_and_track_target,
    merge_subjects,
)
from .video import VideoClip, encode_frame_png, sample_indices

DEFAULT_OVERLAP_THRESHOLD = 0.5
DEFAULT_VERIFY_FRAMES = 8
DEFAULT_MAX_ITERATIONS = 2

FLAG_EMPTY = "EmptyPrediction"
FLAG_OVERLAP = "HighOverlap"
FLAG_BEHAVIOR = "BehaviorInconsistent"

# Fallback cue words when the classifier backend is unavailable.
_BEHAVIOR_CUES = re.compile(
    r"\b(not|without|except|left|right|toward|towards|away|clockwise|"
    r"counterclockwise|forward|backward)\b",
    re.IGNORECASE,
)

_CLASSIFY_PROMPT = """\
#tag:stage3-classify
Does this referring expression constrain the object's behavior over time,
such as a movement direction or a negated action, so that a still-frame
match could be the wrong object? Reply with JSON only:
{"needs_verification": bool}

expression: %s
"""

_VERIFY_HEADER = """\
#tag:stage3-verify
The frames below have the predicted object outlined. Judge whether the
outlined object's behavior over the clip matches the expression. Reply with
JSON only: {"consistent": bool, "reason": str}

expression: %s
"""

_REGEN_PROMPT = """\
#tag:stage3-regen
A previous attempt to ground this target failed a consistency check.
check: %s
previous description: %s
expression: %s
Write a different, more discriminative description of the same target.
Reply with JSON only: {"description": str}
"""

_REGEN_RETRY_SUFFIX = "\nThe new description must differ from the previous one.\n"


@dataclass(frozen=True)
class Flag:
    kind: str
    target_ids: tuple[str, ...]
    detail: str

    @property
    def signature(self) -> tuple:
        return (self.kind, self.target_ids)


@dataclass(frozen=True)
class Verdict:
    consistent: bool
    reason: str = ""


@dataclass
class AuditEntry:
    iteration: int
    flag: Flag
    action: str
    resolved: bool | None = None


@dataclass
class RefinementReport:
    iterations_run: int = 0
    verification_needed: bool | None = None
    verdicts: list[Verdict] = field(default_factory=list)
    audit: list[AuditEntry] = field(default_factory=list)
    unresolved: list[Flag] = field(default_factory=list)


def structural_check(
    stage2: Stage2Result,
    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD,
) -> list[Flag]:
    """Model-free checks. Callers only reach here for positive decompositions."""
    flags: list[Flag] = []
    subjects = [r for r in stage2.results if r.target.is_subject]
    tracked = [r for r in subjects if r.masks is not None and not r.failed]

    if subjects:
        all_empty = not any(m.any() for m in stage2.merged)
        declared_absent = all(r.transcript.outcome == "absent" or r.failed for r in subjects)
        if all_empty and not declared_absent:
            flags.append(
                Flag(
                    FLAG_EMPTY,
                    tuple(
                        r.target.target_id
                        for r in subjects
                        if r.transcript.outcome != "absent" and not r.failed
                    ),
                    "positive task produced an all-empty merged track",
                )
            )

    for i in range(len(tracked)):
        for j in range(i + 1, len(tracked)):
            a, b = tracked[i], tracked[j]
            per_frame = [
                iou(ma, mb)
                for ma, mb in zip(a.masks, b.masks)
                if ma.any() or mb.any()
            ]
            if not per_frame:
                continue
            mean_iou = sum(per_frame) / len(per_frame)
            if mean_iou > overlap_threshold:
                flags.append(
                    Flag(
                        FLAG_OVERLAP,
                        (a.target.target_id, b.target.target_id),
                        f"tracks overlap at mean IoU {mean_iou:.3f}",
                    )
                )
    return flags


def needs_behavior_verification(refiner: ChatBackend, expression: str) -> bool:
    """Ask the refiner whether the expression constrains behavior.

    Falls back to a keyword heuristic when the backend cannot answer, so a
    flaky classifier degrades gracefully instead of stalling refinement.
    """
    req = ChatRequest(
        messages=(user_message(TextPart(_CLASSIFY_PROMPT % expression)),),
        schema=NEEDS_VERIFICATION_V1,
    )
    try:
        doc = chat_with_repair(refiner, req).parsed
        assert doc is not None
        return bool(doc["needs_verification"])
    except (Timeout, Transport, SchemaViolation):
        return bool(_BEHAVIOR_CUES.search(expression))


def verify_behavior(
    refiner: ChatBackend,
    clip: VideoClip,
    merged,
    expression: str,
    verify_frames: int = DEFAULT_VERIFY_FRAMES,
    style: OverlayStyle = OverlayStyle(),
) -> Verdict:
    """Judge the merged track against the expression; fails open."""
    nonempty = [i for i in range(len(clip)) if merged[i].any()]
    if not nonempty:
        return Verdict(consistent=True, reason="nothing to verify: merged track is empty")
    if len(nonempty) > verify_frames:
        picks = [nonempty[j] for j in sample_indices(len(nonempty), verify_frames)]
    else:
        picks = nonempty

    parts: list = [TextPart(_VERIFY_HEADER % expression)]
    for i in picks:
        overlaid = overlay_boundary(clip.frames[i], merged[i], style)
        parts.append(TextPart(f"frame {i}"))
        parts.append(ImagePart(encode_frame_png(overlaid)))
    req = ChatRequest(messages=(user_message(*parts),), schema=VERDICT_V1)
    try:
        doc = chat_with_repair(refiner, req).parsed
        assert doc is not None
        return Verdict(consistent=bool(doc["consistent"]), reason=str(doc.get("reason", "")))
    except (Timeout, Transport, SchemaViolation) as e:
        return Verdict(consistent=True, reason=f"verification unavailable, failing open: {e}")


def regenerate_description(refiner: ChatBackend, target, expression: str, flag: Flag) -> str:
    """Get a replacement description; identical output gets one retry."""
    base = _REGEN_PROMPT % (f"{flag.kind}: {flag.detail}", target.description, expression)
    for attempt, prompt in enumerate((base, base + _REGEN_RETRY_SUFFIX)):
        req = ChatRequest(
            messages=(user_message(TextPart(prompt)),), schema=REFINED_DESCRIPTION_V1
        )
        doc = chat_with_repair(refiner, req).parsed
        assert doc is not None
        description = str(doc["description"]).strip()
        if description and description.lower() != target.description.lower():
            return description
    raise Unrefinable(
        f"{target.target_id}: refiner repeated the same description twice"
    )


def run_refinement_loop(
    planner: ChatBackend,
    refiner: ChatBackend,
    segmenter: SegmenterBackend,
    tracker: TrackerBackend,
    clip: VideoClip,
    expression: str,
    stage2: Stage2Result,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD,
    verify_frames: int = DEFAULT_VERIFY_FRAMES,
    max_rounds: int | None = None,
) -> RefinementReport:
    """Check, refine, re-check; mutates stage2 in place. Bounded."""
    rounds = max_rounds if max_rounds is not None else DEFAULT_MAX_ROUNDS
    report = RefinementReport()
    needs_verify: bool | None = None  # classifier verdict, memoized per task

    for iteration in range(max_iterations + 1):
        flags = structural_check(stage2, overlap_threshold)
        if not flags:
            if needs_verify is None:
                needs_verify = needs_behavior_verification(refiner, expression)
                report.verification_needed = needs_verify
            if needs_verify:
                verdict = verify_behavior(
                    refiner, clip, stage2.merged, expression, verify_frames
                )
                report.verdicts.append(verdict)
                if not verdict.consistent:
                    subject_ids = tuple(
                        r.target.target_id
                        for r in stage2.results
                        if r.target.is_subject and not r.failed
                    )
                    if subject_ids:
                        flags = [Flag(FLAG_BEHAVIOR, subject_ids, verdict.reason or "behavior mismatch")]

        if not flags:
            break
        if iteration == max_iterations:
            report.unresolved = flags
            for flag in flags:
                report.audit.append(
                    AuditEntry(iteration, flag, "iteration budget exhausted", resolved=False)
                )
            break

        report.iterations_run = iteration + 1
        flagged_ids = {tid for flag in flags for tid in flag.target_ids}
        for flag in flags:
            report.audit.append(AuditEntry(iteration, flag, "regenerate and re-ground"))
        changed = False
        for idx, result in enumerate(stage2.results):
            tid = result.target.target_id
            if tid not in flagged_ids or result.failed:
                continue
            flag = next(f for f in flags if tid in f.target_ids)
            try:
                new_description = regenerate_description(refiner, result.target, expression, flag)
            except (Unrefinable, BackendFailure) as e:
                for entry in report.audit:
                    if entry.iteration == iteration and tid in entry.flag.target_ids:
                        entry.action = f"regeneration failed: {e}"
                continue
            new_target = result.target.regenerated(new_description)
            try:
                stage2.results[idx] = ground_and_track_target(
                    planner, segmenter, tracker, clip, new_target, rounds
                )
                changed = True
            except BackendFailure as e:
                stage2.results[idx] = TrackResult(
                    target=new_target,
                    transcript=result.transcript,
                    masks=None,
                    failed=True,
                    failure=f"{type(e).__name__}: {e}",
                )
                stage2.degraded = True
        if not changed:
            report.unresolved = flags
            break
        stage2.merged = merge_subjects(stage2.results, clip)

    final_signatures = {f.signature for f in report.unresolved}
    for entry in report.audit:
        if entry.resolved is None:
            entry.resolved = entry.flag.signature not in final_signatures
    return report
