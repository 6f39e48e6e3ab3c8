"""Network gateway: scenario catalog, session lifecycle, live streaming.

Each session runs its own engine loop inside the server's event loop.
Client commands are tick-stamped on arrival (assigned to the next engine
tick, FIFO within a tick) and recorded into the session's replay log, so a
network run can be re-executed offline from the downloaded log. Frames are
full snapshots pushed every `stream_divisor` ticks.
"""

from __future__ import annotations

import asyncio
import json
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, PlainTextResponse

from .lang import parse
from .model import Scenario
from .replay import CHECKPOINT_INTERVAL, ReplayLog, TraceRecord, scenario_hash, state_hash_hex
from .session import FrameReport, Session
from .wire import frame_to_wire, input_from_wire, scenario_to_wire, score_report_to_wire

FAST_MODE_TICK_CAP = 1_000_000


@dataclass
class SessionRunner:
    session_id: str
    scenario_id: str
    session: Session
    log: ReplayLog
    realtime: bool
    stream_divisor: int
    commands: asyncio.Queue = field(default_factory=asyncio.Queue)
    subscribers: list[asyncio.Queue] = field(default_factory=list)
    paused: bool = False
    done: bool = False
    last_frame: FrameReport | None = None
    task: asyncio.Task | None = None

    def snapshot(self) -> dict:
        frame = self.last_frame
        if frame is None:
            frame = FrameReport(tick=self.session.world.tick, clock=self.session.clock)
            frame.helpers = self.session._build_helpers()
            frame.score_partial = self.session.partial_score()
        final = self.session._report if self.done else None
        payload = frame_to_wire(self.session, frame, final)
        payload["state_hash"] = state_hash_hex(self.session)
        payload["paused"] = self.paused
        payload["done"] = self.done
        payload["session_id"] = self.session_id
        payload["scenario_id"] = self.scenario_id
        payload["difficulty"] = self.log.difficulty
        return payload

    def broadcast(self, message: dict) -> None:
        for q in list(self.subscribers):
            q.put_nowait(message)

    def finish(self, abandon: bool) -> None:
        if self.done:
            return
        report = self.session.finalize(abandon=abandon)
        self.log.final_report = report
        self.done = True
        frame = self.last_frame or FrameReport(tick=self.session.world.tick, clock=self.session.clock)
        payload = frame_to_wire(self.session, frame, report)
        payload["state_hash"] = state_hash_hex(self.session)
        payload["done"] = True
        self.broadcast(payload)
        self.broadcast({"close": "session finished"})

    async def run(self) -> None:
        dt = self.session.world.dt
        loop = asyncio.get_running_loop()
        next_deadline = loop.time() + dt
        try:
            while not self.done:
                if self.realtime:
                    delay = next_deadline - loop.time()
                    if delay > 0:
                        await asyncio.sleep(delay)
                    next_deadline += dt
                else:
                    await asyncio.sleep(0)

                if self.paused:
                    next_deadline = loop.time() + dt
                    continue

                inputs = []
                tick_no = self.session.world.tick + 1
                while not self.commands.empty():
                    kind, payload = self.commands.get_nowait()
                    if kind == "input":
                        inputs.append(payload)
                        self.log.records.append(TraceRecord(tick_no, payload))
                    elif kind == "pause":
                        self.paused = True
                    elif kind == "resume":
                        self.paused = False
                    elif kind == "abandon":
                        self.finish(abandon=True)
                        return
                if self.paused:
                    continue

                frame = self.session.tick(inputs)
                self.last_frame = frame
                if frame.tick % CHECKPOINT_INTERVAL == 0:
                    self.log.checkpoints[frame.tick] = state_hash_hex(self.session)
                if frame.tick % self.stream_divisor == 0 or frame.finished:
                    payload = frame_to_wire(self.session, frame)
                    payload["state_hash"] = state_hash_hex(self.session)
                    self.broadcast(payload)
                if frame.finished:
                    self.finish(abandon=False)
                    return
                if not self.realtime and self.session.world.tick >= FAST_MODE_TICK_CAP:
                    self.finish(abandon=True)
                    return
        except asyncio.CancelledError:
            raise
        except Exception as e:  # surface engine errors to clients
            self.done = True
            self.broadcast({"error": f"session crashed: {e}", "close": "error"})


def _scan_catalog(scenario_dir: Path) -> list[dict]:
    entries = []
    for path in sorted(scenario_dir.glob("*.itx")):
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            entries.append({"id": path.stem, "name": None, "valid": False, "error": str(e)})
            continue
        result = parse(text)
        if result.ok:
            s = result.scenario
            entries.append(
                {
                    "id": path.stem,
                    "name": s.name,
                    "step_count": len(s.steps),
                    "difficulties": list(s.difficulties),
                    "valid": True,
                    "error": None,
                }
            )
        else:
            first = next((d for d in result.diagnostics if d.is_error), None)
            entries.append(
                {
                    "id": path.stem,
                    "name": None,
                    "valid": False,
                    "error": first.format(path.name) if first else "parse failed",
                }
            )
    return entries


def _load_scenario(scenario_dir: Path, scenario_id: str) -> Scenario | None:
    path = scenario_dir / f"{scenario_id}.itx"
    if not path.is_file():
        return None
    result = parse(path.read_text(encoding="utf-8"))
    return result.scenario


def create_app(
    scenario_dir: str = ".",
    stream_divisor: int = 6,
    realtime: bool = True,
    ui_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="itx gateway")
    root = Path(scenario_dir)
    runners: dict[str, SessionRunner] = {}
    app.state.runners = runners

    @app.get("/scenarios")
    def list_scenarios():
        if not root.is_dir():
            return JSONResponse({"error": f"scenario directory {root} not readable"}, status_code=500)
        return _scan_catalog(root)

    @app.get("/scenarios/{scenario_id}")
    def get_scenario(scenario_id: str):
        scenario = _load_scenario(root, scenario_id)
        if scenario is None:
            return JSONResponse({"error": f"unknown scenario '{scenario_id}'"}, status_code=404)
        payload = scenario_to_wire(scenario)
        payload["id"] = scenario_id
        payload["scenario_hash"] = scenario_hash(scenario)
        return payload

    @app.post("/sessions")
    async def create_session(body: dict):
        scenario_id = body.get("scenario_id")
        difficulty = body.get("difficulty")
        scenario = _load_scenario(root, scenario_id) if scenario_id else None
        if scenario is None:
            return JSONResponse({"error": f"unknown scenario '{scenario_id}'"}, status_code=404)
        if difficulty not in scenario.difficulties:
            return JSONResponse(
                {
                    "error": f"unknown difficulty '{difficulty}'",
                    "valid_difficulties": list(scenario.difficulties),
                },
                status_code=404,
            )
        session = Session(scenario, difficulty)
        session_id = uuid.uuid4().hex
        runner = SessionRunner(
            session_id=session_id,
            scenario_id=scenario_id,
            session=session,
            log=ReplayLog(
                scenario_name=scenario.name,
                scenario_hash=scenario_hash(scenario),
                difficulty=difficulty,
                dt=session.world.dt,
            ),
            realtime=realtime,
            stream_divisor=stream_divisor,
        )
        runners[session_id] = runner
        runner.task = asyncio.create_task(runner.run())
        return {"session_id": session_id}

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        runner = runners.get(session_id)
        if runner is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        return runner.snapshot()

    @app.get("/sessions/{session_id}/replay")
    def get_replay(session_id: str):
        runner = runners.get(session_id)
        if runner is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        return PlainTextResponse(runner.log.to_jsonl(), media_type="application/jsonl")

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(ws: WebSocket, session_id: str):
        runner = runners.get(session_id)
        await ws.accept()
        if runner is None:
            await ws.send_json({"error": "unknown session", "close": "unknown session"})
            await ws.close()
            return
        queue: asyncio.Queue = asyncio.Queue()
        runner.subscribers.append(queue)
        await ws.send_json(runner.snapshot())
        if runner.done:
            await ws.send_json({"close": "session finished"})

        async def pump_out():
            while True:
                message = await queue.get()
                await ws.send_json(message)
                if "close" in message:
                    return

        out_task = asyncio.create_task(pump_out())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    obj = json.loads(raw)
                    kind = obj.get("kind")
                    if kind in ("pause", "resume", "abandon"):
                        if runner.done:
                            await ws.send_json({"error": "session finished"})
                            continue
                        runner.commands.put_nowait((kind, None))
                    else:
                        if runner.done:
                            await ws.send_json({"error": "session finished"})
                            continue
                        runner.commands.put_nowait(("input", input_from_wire(obj)))
                except (ValueError, KeyError, TypeError) as e:
                    await ws.send_json({"error": f"bad command: {e}"})
        except WebSocketDisconnect:
            pass
        finally:
            out_task.cancel()
            if queue in runner.subscribers:
                runner.subscribers.remove(queue)

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(
    port: int = 8080,
    scenario_dir: str = ".",
    stream_divisor: int = 6,
    realtime: bool = True,
    ui_dir: str | None = None,
) -> int:
    import uvicorn

    app = create_app(scenario_dir, stream_divisor, realtime, ui_dir)
    uvicorn.run(app, host="0.0.0.0", port=port, log_level="warning")
    return 0
