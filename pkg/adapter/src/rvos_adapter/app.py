"""FastAPI assembly of the wire protocol over the configured vendors.

Chat is mounted per role (/planner/v1/chat, /refiner/v1/chat) so one
service can host two differently configured chat vendors; the bare /v1
paths serve single-vendor deployments, with bare chat going to the
planner. Handlers run in the threadpool, so concurrent requests proceed
while a vendor call blocks; the session store serializes propagates per
session and answers 409 when that rule is violated.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from .config import AdapterConfig
from .errors import AdapterError, ConfigError, error_to_wire
from .imaging import shrink_to_cap
from .rle import resize_mask, rle_decode_text, rle_encode_text
from .sessions import SessionStore
from .vendors import VendorSet
from .wire import (
    CHAT_PATH,
    SEGMENT_PATH,
    TRACK_INIT_PATH,
    TRACK_PROPAGATE_PATH,
    parse_chat,
    parse_segment,
)


def _chat_handler(vendor):
    def handle(body: dict) -> dict:
        messages, schema, temperature = parse_chat(body)
        return {"text": str(vendor.complete(messages, schema, temperature))}

    return handle


def _segment_handler(vendor, max_edge: int):
    def handle(body: dict) -> dict:
        image_png, prompt, max_candidates = parse_segment(body)
        capped, (h, w) = shrink_to_cap(image_png, max_edge)
        candidates = vendor.segment(capped, prompt, max_candidates)
        out = []
        for c in candidates:
            rle = str(c["rle"])
            if capped is not image_png:
                # vendor saw the downscaled image; restore the caller's geometry
                rle = rle_encode_text(resize_mask(rle_decode_text(rle), h, w))
            out.append({"rle": rle, "score": float(c["score"])})
        return {"candidates": out}

    return handle


def _track_init_handler(vendor, sessions: SessionStore):
    def handle(body: dict) -> dict:
        clip = str(body["clip"])
        frame_index = int(body["frame_index"])
        seed_text = str(body["seed_rle"])
        seed_mask = rle_decode_text(seed_text)
        handle_obj = vendor.start(clip, frame_index, seed_mask, seed_text)
        return {"session_id": sessions.create(handle_obj)}

    return handle


def _track_propagate_handler(vendor, sessions: SessionStore):
    def handle(body: dict) -> dict:
        session_id = str(body["session_id"])
        direction = str(body["direction"])
        with sessions.lease(session_id) as handle_obj:
            masks = vendor.propagate(handle_obj, direction)
        return {
            "masks": [
                {"frame_index": int(m["frame_index"]), "rle": str(m["rle"])} for m in masks
            ]
        }

    return handle


def _wire_call(handler, body: dict) -> JSONResponse:
    try:
        return JSONResponse(status_code=200, content=handler(body))
    except (KeyError, TypeError, ValueError) as e:
        return JSONResponse(status_code=400, content={"code": "bad_request", "message": str(e)})
    except AdapterError as e:
        status, payload = error_to_wire(e)
        return JSONResponse(status_code=status, content=payload)


def build_app(
    config: AdapterConfig,
    *,
    vendors: VendorSet | None = None,
    sessions: SessionStore | None = None,
) -> FastAPI:
    """Construct the service; vendor failures surface as startup ConfigError."""
    if vendors is None:
        try:
            vendors = VendorSet(config)
        except ConfigError:
            raise
        except AdapterError as e:
            raise ConfigError(str(e)) from e
    if sessions is None:
        sessions = SessionStore(ttl=config.session_ttl)

    app = FastAPI(openapi_url=None, docs_url=None, redoc_url=None)

    def mount(path: str, handler) -> None:
        async def route(request: Request):
            try:
                body = await request.json()
            except ValueError as e:
                return JSONResponse(
                    status_code=400, content={"code": "bad_request", "message": str(e)}
                )
            return await run_in_threadpool(_wire_call, handler, body)

        app.add_api_route(path, route, methods=["POST"])

    planner_chat = _chat_handler(vendors.planner)
    segment = _segment_handler(vendors.segmenter, config.max_image_edge)
    track_init = _track_init_handler(vendors.tracker, sessions)
    track_propagate = _track_propagate_handler(vendors.tracker, sessions)

    mount(CHAT_PATH, planner_chat)
    mount("/planner" + CHAT_PATH, planner_chat)
    mount("/refiner" + CHAT_PATH, _chat_handler(vendors.refiner))
    mount(SEGMENT_PATH, segment)
    mount("/segmenter" + SEGMENT_PATH, segment)
    mount(TRACK_INIT_PATH, track_init)
    mount("/tracker" + TRACK_INIT_PATH, track_init)
    mount(TRACK_PROPAGATE_PATH, track_propagate)
    mount("/tracker" + TRACK_PROPAGATE_PATH, track_propagate)

    @app.api_route("/{rest:path}", methods=["GET", "POST", "PUT", "DELETE", "PATCH"])
    async def unknown(request: Request, rest: str):
        return JSONResponse(
            status_code=404,
            content={"code": "not_found", "message": f"unknown path {request.url.path}"},
        )

    return app
