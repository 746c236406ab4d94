"""FastAPI service over a live engine.

All mutations funnel through the engine's single writer lock; reads run on
snapshots.  Every response is wrapped in an envelope carrying the originating
request id.  State changes stream out as server-sent events with gapless,
cursor-resumable sequence numbers.
"""

from __future__ import annotations

import json
import uuid
from typing import Any, Optional

from fastapi import Body, FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from starlette.concurrency import run_in_threadpool

from ..errors import (
    BadSceneDocument,
    DialogueBusy,
    IoFailure,
    ParseError,
    PromptExpired,
    SememError,
    ShapeMismatch,
    StalePlan,
    StaleProposal,
    UnknownPrompt,
)
from ..engine import Engine
from ..events import EventGap
from .models import AnswerRequest, Envelope, InstructionRequest

SSE_POLL_SECONDS = 0.5

_STATUS_BY_ERROR = (
    (BadSceneDocument, 400),
    (ParseError, 422),
    (ShapeMismatch, 422),
    (DialogueBusy, 409),
    (StaleProposal, 409),
    (StalePlan, 409),
    (UnknownPrompt, 404),
    (PromptExpired, 410),
    (EventGap, 410),
    (IoFailure, 500),
)


def _status_for(exc: SememError) -> int:
    for klass, status in _STATUS_BY_ERROR:
        if isinstance(exc, klass):
            return status
    return 400


def _request_id(request: Request) -> str:
    return request.headers.get("x-request-id") or uuid.uuid4().hex


def _ok(request: Request, result: Any) -> Envelope:
    return Envelope(request_id=_request_id(request), ok=True, result=result)


def create_app(engine: Engine, ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="semem", version="0.1.0",
                  description="Semantic memory engine for simulated industrial robots")
    app.state.engine = engine
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )

    @app.exception_handler(SememError)
    async def semem_error_handler(request: Request, exc: SememError):
        envelope = Envelope(
            request_id=_request_id(request), ok=False,
            error={"code": exc.code, "message": exc.message,
                   "details": _jsonable(exc.details)},
        )
        return JSONResponse(status_code=_status_for(exc),
                            content=envelope.model_dump())

    @app.get("/health")
    def health(request: Request) -> Envelope:
        return _ok(request, {"status": "up", "events": engine.events.next_seq})

    @app.post("/scene")
    async def post_scene(request: Request, body: Any = Body(...)) -> Envelope:
        report = await run_in_threadpool(
            engine.ingest_scene_document, json.dumps(body))
        return _ok(request, report)

    @app.post("/scene/reset")
    async def reset_scene(request: Request) -> Envelope:
        removed = await run_in_threadpool(engine.reset_scene)
        return _ok(request, {"removed": removed})

    @app.post("/instruction")
    async def post_instruction(request: Request, payload: InstructionRequest) -> Envelope:
        result = await run_in_threadpool(engine.instruct, payload.text, payload.strategy)
        return _ok(request, result.to_dict())

    @app.get("/prompt")
    def get_prompt(request: Request) -> Envelope:
        prompt = engine.open_prompt()
        return _ok(request, {"prompt": prompt.to_dict() if prompt else None})

    @app.post("/prompt/{prompt_id}/answer")
    async def answer_prompt(request: Request, prompt_id: int,
                            payload: AnswerRequest) -> Envelope:
        effects = await run_in_threadpool(engine.answer_prompt, prompt_id, payload.choice)
        return _ok(request, {"effects": effects})

    @app.get("/graph")
    def get_graph(request: Request) -> Envelope:
        return _ok(request, engine.graph_export())

    @app.get("/export")
    def get_export(request: Request, include_scene: bool = False) -> Envelope:
        return _ok(request, engine.export_document(include_scene))

    @app.get("/log")
    def get_log(request: Request, start: int = 0,
                limit: Optional[int] = Query(default=None, ge=0)) -> Envelope:
        return _ok(request, {"records": engine.log_slice(start, limit)})

    @app.get("/events")
    def get_events(request: Request,
                   cursor: int = Query(default=0, alias="from", ge=0),
                   limit: Optional[int] = Query(default=None, ge=1),
                   live: bool = True):
        """SSE stream from the cursor.  ``live=false`` drains the buffer and closes;
        ``limit`` closes the stream after that many events."""
        # validate the cursor eagerly so stale consumers get 410, not a stream
        engine.events.events_from(cursor)

        def stream():
            sent = 0
            position = cursor
            while True:
                try:
                    batch = engine.events.events_from(position)
                except EventGap:
                    return
                for event in batch:
                    yield (f"id: {event.seq}\nevent: {event.kind.value}\n"
                           f"data: {json.dumps(event.to_dict())}\n\n")
                    position = event.seq + 1
                    sent += 1
                    if limit is not None and sent >= limit:
                        return
                if not live:
                    return
                if not engine.events.wait_for(position, timeout=SSE_POLL_SECONDS):
                    yield ": keep-alive\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream",
                                 headers={"Cache-Control": "no-cache"})

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _jsonable(value):
    try:
        json.dumps(value)
        return value
    except (TypeError, ValueError):
        return {k: repr(v) for k, v in value.items()} if isinstance(value, dict) else repr(value)
