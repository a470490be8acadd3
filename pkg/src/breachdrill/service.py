"""HTTP + WebSocket API over the session manager.

REST endpoints take and return JSON; the stream endpoint pushes typed
frames {seq, kind, payload} in order and supports reconnect replay via a
`last_seq` query parameter. With mock backends the whole service runs
offline.
"""

from __future__ import annotations

import asyncio
from typing import Optional

from fastapi import FastAPI, HTTPException, Query, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from . import __version__
from .agents import InvalidHumanSlot
from .engine import GameConfig, GameError, GameOver, ProcedureOnCooldown, UnknownProcedure
from .sessions import EmptyContent, SessionManager, UnknownSession
from .telemetry import export_string, read_log


class CreateSessionRequest(BaseModel):
    topology: str = "Centralized"
    human_slot: Optional[str] = "SOC Analyst"
    seed: Optional[int] = None
    game: Optional[dict] = None


class TurnRequest(BaseModel):
    proc_id: str


class ChatRequest(BaseModel):
    content: str


class CopilotRequest(BaseModel):
    query: str


def create_app(manager: SessionManager) -> FastAPI:
    app = FastAPI(title="breachdrill", version=__version__)
    app.state.manager = manager
    # the browser client may be served from any origin (base URL is a setting)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "sessions": len(manager.session_ids())}

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest) -> dict:
        try:
            game_config = (
                GameConfig(**{**manager.config.game.to_dict(), **req.game})
                if req.game
                else None
            )
            sess = manager.create_session(
                topology=req.topology,
                human_slot=req.human_slot,
                seed=req.seed,
                game_config=game_config,
            )
        except (ValueError, InvalidHumanSlot, TypeError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except OSError as exc:
            raise HTTPException(status_code=500, detail=f"deck load failure: {exc}") from exc
        return {
            "session_id": sess.session_id,
            "hud": manager.hud(sess.session_id),
            "roster": sess.roster_public(),
        }

    @app.get("/sessions/{session_id}/hud")
    def get_hud(session_id: str) -> dict:
        try:
            return manager.hud(session_id)
        except UnknownSession as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.post("/sessions/{session_id}/turn")
    def submit_turn(session_id: str, req: TurnRequest) -> dict:
        try:
            outcome, hud = manager.submit_turn(session_id, req.proc_id)
        except UnknownSession as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except ProcedureOnCooldown as exc:
            raise HTTPException(
                status_code=409,
                detail={"error": "ProcedureOnCooldown", "proc_id": exc.proc_id,
                        "remaining": exc.remaining},
            ) from exc
        except GameOver as exc:
            raise HTTPException(
                status_code=409, detail={"error": "GameOver", "status": exc.status.value}
            ) from exc
        except UnknownProcedure as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except GameError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"outcome": outcome, "hud": hud}

    @app.post("/sessions/{session_id}/chat")
    def post_chat(session_id: str, req: ChatRequest) -> dict:
        try:
            messages = manager.post_chat(session_id, req.content)
        except UnknownSession as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except EmptyContent as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {"messages": messages}

    @app.post("/sessions/{session_id}/copilot")
    def query_copilot(session_id: str, req: CopilotRequest) -> dict:
        try:
            return manager.query_copilot(session_id, req.query)
        except UnknownSession as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except EmptyContent as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.get("/sessions/{session_id}/telemetry/export")
    def export_telemetry(session_id: str, format: str = Query("json")) -> PlainTextResponse:
        fmt = format.lower()
        if fmt not in ("json", "csv"):
            raise HTTPException(status_code=400, detail=f"unknown format {format!r}")
        try:
            sess = manager.get_session(session_id)
        except UnknownSession as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        events, _ = read_log(sess.sink.path)
        body = export_string(events, fmt)
        media = "application/json" if fmt == "json" else "text/csv"
        return PlainTextResponse(content=body, media_type=media)

    @app.websocket("/sessions/{session_id}/stream")
    async def ws_stream(websocket: WebSocket, session_id: str, last_seq: int = 0):
        try:
            manager.get_session(session_id)
        except UnknownSession:
            await websocket.close(code=1008, reason="unknown session")
            return
        await websocket.accept()
        sent = last_seq
        try:
            while True:
                frames = manager.frames_since(session_id, sent)
                for frame in frames:
                    await websocket.send_json(frame)
                    sent = frame["seq"]
                # Poll for new frames; producers append under the session lock.
                try:
                    text = await asyncio.wait_for(websocket.receive_text(), timeout=0.02)
                    if text.strip().lower() == "close":
                        break
                except asyncio.TimeoutError:
                    pass
        except WebSocketDisconnect:
            return
        await websocket.close()

    return app
