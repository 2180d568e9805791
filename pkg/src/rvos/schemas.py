"""Structured-response schemas for chat backends and their validation."""

from __future__ import annotations

import json
import re

import jsonschema

from .errors import SchemaViolation

DECOMPOSITION_V1 = "decomposition-v1"
TOOL_ACTION_V1 = "tool-action-v1"
NEEDS_VERIFICATION_V1 = "needs-verification-v1"
VERDICT_V1 = "verdict-v1"
REFINED_DESCRIPTION_V1 = "refined-description-v1"

SCHEMAS: dict[str, dict] = {
    DECOMPOSITION_V1: {
        "type": "object",
        "required": ["no_target", "targets"],
        "properties": {
            "no_target": {"type": "boolean"},
            "targets": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["keyframe_index", "description", "is_central_subject"],
                    "properties": {
                        "keyframe_index": {"type": "integer"},
                        "description": {"type": "string", "minLength": 1},
                        "is_central_subject": {"type": "boolean"},
                    },
                },
            },
            "rationale": {"type": "string"},
        },
    },
    TOOL_ACTION_V1: {
        "type": "object",
        "required": ["action"],
        "properties": {
            "action": {
                "enum": [
                    "segment_by_text",
                    "refine_by_points",
                    "refine_by_box",
                    "select_candidate",
                    "accept",
                    "declare_absent",
                ]
            },
            "text": {"type": "string"},
            "points": {
                "type": "array",
                "items": {
                    "type": "array",
                    "prefixItems": [
                        {"type": "number"},
                        {"type": "number"},
                        {"type": "boolean"},
                    ],
                    "minItems": 3,
                    "maxItems": 3,
                },
            },
            "box": {
                "type": "array",
                "items": {"type": "number"},
                "minItems": 4,
                "maxItems": 4,
            },
            "candidate_index": {"type": "integer"},
        },
        "allOf": [
            {
                "if": {"properties": {"action": {"const": "segment_by_text"}}},
                "then": {"required": ["text"]},
            },
            {
                "if": {"properties": {"action": {"const": "refine_by_points"}}},
                "then": {"required": ["points"]},
            },
            {
                "if": {"properties": {"action": {"const": "refine_by_box"}}},
                "then": {"required": ["box"]},
            },
            {
                "if": {"properties": {"action": {"const": "select_candidate"}}},
                "then": {"required": ["candidate_index"]},
            },
        ],
    },
    NEEDS_VERIFICATION_V1: {
        "type": "object",
        "required": ["needs_verification"],
        "properties": {"needs_verification": {"type": "boolean"}},
    },
    VERDICT_V1: {
        "type": "object",
        "required": ["consistent"],
        "properties": {
            "consistent": {"type": "boolean"},
            "reason": {"type": "string"},
        },
    },
    REFINED_DESCRIPTION_V1: {
        "type": "object",
        "required": ["description"],
        "properties": {"description": {"type": "string", "minLength": 1}},
    },
}

_FENCE_RE = re.compile(r"^\s*```[a-zA-Z0-9_-]*\s*\n(.*)\n\s*```\s*$", re.DOTALL)


def strip_fences(text: str) -> str:
    m = _FENCE_RE.match(text)
    return m.group(1) if m else text


def validate_payload(schema_name: str, text: str) -> dict:
    """Parse model text as JSON and validate against a named schema.

    Raises SchemaViolation (carrying the raw text) when the text does not
    parse or does not validate; unknown schema names are a programming error.
    """
    if schema_name not in SCHEMAS:
        raise ValueError(f"unknown schema {schema_name!r}")
    try:
        doc = json.loads(strip_fences(text))
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"{schema_name}: response is not JSON: {e}", raw_text=text) from e
    try:
        jsonschema.validate(doc, SCHEMAS[schema_name])
    except jsonschema.ValidationError as e:
        raise SchemaViolation(f"{schema_name}: {e.message}", raw_text=text) from e
    if not isinstance(doc, dict):
        raise SchemaViolation(f"{schema_name}: expected a JSON object", raw_text=text)
    return doc
