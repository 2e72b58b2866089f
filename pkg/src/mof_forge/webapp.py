"""HTTP API over the service layer, plus static hosting for the dashboard.

Endpoints (JSON bodies, versioned payloads):

- ``POST /queries`` ``{session_id, text, attachments?}``
- ``POST /sessions/{session_id}/clarify`` ``{text}``
- ``POST /runs/{run_id}/confirmations`` ``{rule_ids, accept}``
- ``GET  /runs`` / ``GET /runs/{run_id}``
- ``GET  /runs/{run_id}/events?since=N`` (incremental, resumable cursor)
- ``GET  /screenings/{screening_id}/funnel``
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import (MofForgeError, NoPendingClarification, NotAwaiting,
                     NotFound, UnknownRun)
from .service import Service

_STATUS_BY_CODE = {
    NotFound.code: 404,
    UnknownRun.code: 404,
    NoPendingClarification.code: 409,
    NotAwaiting.code: 409,
}


class QueryBody(BaseModel):
    session_id: str = "default"
    text: str
    attachments: dict[str, str] = {}


class ClarifyBody(BaseModel):
    text: str


class ConfirmBody(BaseModel):
    rule_ids: list[str]
    accept: bool


def create_app(service: Service, static_dir: Path | str | None = None) -> FastAPI:
    app = FastAPI(title="mof-forge", version="1")

    @app.exception_handler(MofForgeError)
    async def _domain_error(_request: Request, exc: MofForgeError):
        return JSONResponse(
            status_code=_STATUS_BY_CODE.get(exc.code, 400),
            content={"error": exc.code, "message": str(exc)},
        )

    @app.post("/queries")
    def submit_query(body: QueryBody):
        return service.submit_query(body.session_id, body.text,
                                    attachments=body.attachments)

    @app.post("/sessions/{session_id}/clarify")
    def clarify(session_id: str, body: ClarifyBody):
        return service.respond_clarification(session_id, body.text)

    @app.post("/runs/{run_id}/confirmations")
    def confirm(run_id: str, body: ConfirmBody):
        return service.confirm_correction(run_id, body.rule_ids, body.accept)

    @app.get("/runs")
    def list_runs():
        return {"version": 1, "kind": "runs", "run_ids": service.run_ids()}

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        return service.run_payload(run_id)

    @app.get("/runs/{run_id}/events")
    def get_events(run_id: str, since: int = 0):
        events = service.stream_events(run_id, since=since)
        return {"version": 1, "kind": "events", "run_id": run_id,
                "since": since, "events": events}

    @app.get("/screenings/{screening_id}/funnel")
    def get_funnel(screening_id: str):
        return service.funnel(screening_id)

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="ui")

    return app
