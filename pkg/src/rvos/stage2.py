"""Stage 2: ground each target with a tool-driven agent, then track it.

The agent holds a short dialogue with the planner: each round the planner
picks one tool action (segment by text, refine by points or box, select a
candidate, accept, or declare the object absent). Segmentation results are
auto-selected at the top-scoring candidate so a single accept can follow.
The accepted mask seeds a tracker session that is propagated in both
directions from the keyframe; by construction the seed frame of the final
track is the accepted mask, bit for bit.

Targets are grounded sequentially and failures are isolated per target: one
target's backend failure degrades the task instead of aborting it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .backends.protocol import (
    BoxPrompt,
    ChatBackend,
    ChatRequest,
    ImagePart,
    PointsPrompt,
    SegmentCandidate,
    SegmentRequest,
    SegmenterBackend,
    TextPart,
    TextPrompt,
    TrackerBackend,
    chat_with_repair,
    segment,
    track_init,
    track_propagate,
    user_message,
)
from .errors import BackendFailure, ProtocolViolation
from .masks import Mask, rle_decode, rle_encode, union
from .schemas import TOOL_ACTION_V1
from .stage1 import DecompositionResult, GroundingTarget
from .video import VideoClip, encode_frame_png

DEFAULT_MAX_ROUNDS = 6

OUTCOME_ACCEPTED = "accepted"
OUTCOME_ABSENT = "absent"
OUTCOME_BUDGET = "budget_exhausted"

_AGENT_HEADER = """\
#tag:stage2-agent
You are grounding one object instance in the single frame shown below.
target: {description}
round {round} of {max_rounds}

{candidates}
Reply with JSON only: {{"action": ...}} where action is one of
segment_by_text (needs "text"), refine_by_points (needs "points" as
[[x, y, is_positive], ...]), refine_by_box (needs "box" as [x0, y0, x1, y1]),
select_candidate (needs "candidate_index"), accept, declare_absent.
Accept only when the selected candidate covers the target well.
"""


@dataclass
class AgentRound:
    action: str
    detail: str
    candidate_count: int
    wasted: bool = False


@dataclass
class AgentTranscript:
    target_id: str
    rounds: list[AgentRound] = field(default_factory=list)
    outcome: str = OUTCOME_BUDGET
    mask: Mask | None = None


@dataclass
class TrackResult:
    """A grounded-and-tracked target; masks has one entry per clip frame."""

    target: GroundingTarget
    transcript: AgentTranscript
    masks: list[Mask] | None
    failed: bool = False
    failure: str = ""


@dataclass
class Stage2Result:
    results: list[TrackResult]
    merged: list[Mask]
    degraded: bool = False


def _describe_candidates(candidates: list[SegmentCandidate], selected: int | None) -> str:
    if not candidates:
        return "candidates: none yet\n"
    lines = ["candidates:"]
    for i, c in enumerate(candidates):
        marker = " (selected)" if i == selected else ""
        lines.append(f"  [{i}] score={c.score:.3f} area={sum(c.mask.counts[1::2])}{marker}")
    return "\n".join(lines) + "\n"


def agent_ground(
    planner: ChatBackend,
    segmenter: SegmenterBackend,
    clip: VideoClip,
    target: GroundingTarget,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> AgentTranscript:
    """Run the tool loop for one target on its keyframe."""
    keyframe_png = encode_frame_png(clip.frames[target.keyframe])
    transcript = AgentTranscript(target_id=target.target_id)
    candidates: list[SegmentCandidate] = []
    selected: int | None = None
    best: SegmentCandidate | None = None

    for round_no in range(1, max_rounds + 1):
        header = _AGENT_HEADER.format(
            description=target.description,
            round=round_no,
            max_rounds=max_rounds,
            candidates=_describe_candidates(candidates, selected),
        )
        req = ChatRequest(
            messages=(user_message(TextPart(header), ImagePart(keyframe_png)),),
            schema=TOOL_ACTION_V1,
        )
        doc = chat_with_repair(planner, req).parsed
        assert doc is not None
        action = doc["action"]

        if action in ("segment_by_text", "refine_by_points", "refine_by_box"):
            prompt, detail = _build_prompt(action, doc)
            candidates = segment(segmenter, SegmentRequest(image_png=keyframe_png, prompt=prompt))
            selected = 0 if candidates else None
            if candidates and (best is None or candidates[0].score > best.score):
                best = candidates[0]
            transcript.rounds.append(AgentRound(action, detail, len(candidates)))
        elif action == "select_candidate":
            idx = int(doc["candidate_index"])
            if 0 <= idx < len(candidates):
                selected = idx
                transcript.rounds.append(AgentRound(action, f"index={idx}", len(candidates)))
            else:
                transcript.rounds.append(
                    AgentRound(action, f"index={idx} out of range", len(candidates), wasted=True)
                )
        elif action == "accept":
            if selected is None:
                transcript.rounds.append(
                    AgentRound(action, "nothing selected", len(candidates), wasted=True)
                )
            else:
                chosen = candidates[selected]
                transcript.rounds.append(AgentRound(action, f"index={selected}", len(candidates)))
                transcript.outcome = OUTCOME_ACCEPTED
                transcript.mask = rle_decode(chosen.mask)
                return transcript
        elif action == "declare_absent":
            transcript.rounds.append(AgentRound(action, "", len(candidates)))
            transcript.outcome = OUTCOME_ABSENT
            transcript.mask = None
            return transcript
        else:  # schema keeps this unreachable; guard against enum drift
            raise ProtocolViolation(f"unknown agent action {action!r}")

    transcript.outcome = OUTCOME_BUDGET
    if best is not None:
        transcript.mask = rle_decode(best.mask)
    return transcript


def _build_prompt(action: str, doc: dict):
    if action == "segment_by_text":
        text = str(doc["text"])
        return TextPrompt(text), f"text={text!r}"
    if action == "refine_by_points":
        points = tuple((float(x), float(y), bool(p)) for x, y, p in doc["points"])
        return PointsPrompt(points), f"points={json.dumps([list(p) for p in doc['points']])}"
    box = doc["box"]
    x0, y0, x1, y1 = (float(v) for v in box)
    return BoxPrompt((x0, y0, x1, y1)), f"box={box}"


def propagate_bidirectional(
    tracker: TrackerBackend,
    clip: VideoClip,
    keyframe: int,
    seed: Mask,
) -> list[Mask]:
    """Track a seed mask across the whole clip, seed frame passed through."""
    n = len(clip)
    session = track_init(tracker, clip.clip_id, keyframe, rle_encode(seed))
    out: dict[int, Mask] = {keyframe: seed}
    if keyframe + 1 < n:
        for i, rle in track_propagate(tracker, session, "forward"):
            out[i] = rle_decode(rle)
    if keyframe > 0:
        for i, rle in track_propagate(tracker, session, "backward"):
            out[i] = rle_decode(rle)
    missing = [i for i in range(n) if i not in out]
    if missing:
        raise ProtocolViolation(f"tracker left frames {missing} uncovered")
    return [out[i] for i in range(n)]


def merge_subjects(results: list[TrackResult], clip: VideoClip) -> list[Mask]:
    """Union the central subjects' tracks; auxiliary targets never merge in."""
    shape = (clip.height, clip.width)
    merged: list[Mask] = []
    for i in range(len(clip)):
        layers = [
            r.masks[i]
            for r in results
            if r.target.is_subject and r.masks is not None
        ]
        merged.append(union(layers, shape=shape))
    return merged


def ground_and_track_target(
    planner: ChatBackend,
    segmenter: SegmenterBackend,
    tracker: TrackerBackend,
    clip: VideoClip,
    target: GroundingTarget,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> TrackResult:
    transcript = agent_ground(planner, segmenter, clip, target, max_rounds)
    if transcript.mask is None or not transcript.mask.any():
        return TrackResult(target=target, transcript=transcript, masks=None)
    masks = propagate_bidirectional(tracker, clip, target.keyframe, transcript.mask)
    return TrackResult(target=target, transcript=transcript, masks=masks)


def run_stage2(
    planner: ChatBackend,
    segmenter: SegmenterBackend,
    tracker: TrackerBackend,
    clip: VideoClip,
    decomposition: DecompositionResult,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> Stage2Result:
    results: list[TrackResult] = []
    degraded = False
    for target in decomposition.targets:
        try:
            results.append(
                ground_and_track_target(planner, segmenter, tracker, clip, target, max_rounds)
            )
        except BackendFailure as e:
            degraded = True
            results.append(
                TrackResult(
                    target=target,
                    transcript=AgentTranscript(target_id=target.target_id),
                    masks=None,
                    failed=True,
                    failure=f"{type(e).__name__}: {e}",
                )
            )
    return Stage2Result(results=results, merged=merge_subjects(results, clip), degraded=degraded)
