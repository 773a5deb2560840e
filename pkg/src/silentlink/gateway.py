"""Operator gateway: live event stream plus a serialized command queue.

One process hosts one run. Subscribers get a state snapshot, then every
event in engine order over the websocket at /ws; POST /command validates
and converts operator input, funnels it through the engine's single
command queue, and acks with the assigned control sequence number.
Events carry the raw 32-byte frames hex-encoded for inspection.
"""

from __future__ import annotations

import queue
import threading
import time

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .center import Decision
from .codec import Command
from .config import SimConfig
from .engine import Engine

_EVENT_KINDS = {"checkpoint", "priority_alert", "command_issued", "phase_change", "tick"}


class CommandRequest(BaseModel):
    command: str
    distance_m: float = 0.0
    angle_deg: float = 0.0
    vertical_m: float = 0.0
    event_ref: int | None = None


class GatewaySession:
    """Bridges one paced engine run to any number of read-only subscribers."""

    def __init__(self, config: SimConfig, speedup: float = 1.0, out_dir=None):
        if config.mode != "semi":
            raise ValueError("gateway mode requires a semi-autonomous mission")
        raw_auto = config.raw.get("policy", {}).get("auto")
        if raw_auto is not True:
            # The operator replaces the policy unless the config insists.
            config = SimConfig.from_dict(
                {**config.raw, "policy": {**config.raw.get("policy", {}), "auto": False}}
            )
        self.config = config
        self.speedup = speedup
        self.out_dir = out_dir
        self.engine = Engine(config, on_event=self._on_record)
        self._lock = threading.Lock()
        self._subscribers: list[queue.Queue] = []
        self._track: list[dict] = []
        self._alerts: list[dict] = []
        self._commands: list[dict] = []
        self._last_tick: dict | None = None
        self._last_up_hex: str | None = None
        self._phase = "AWAIT_START"
        self._seq = 0
        self.running = False
        self.finished = False
        self._thread: threading.Thread | None = None

    # -- engine-thread side --------------------------------------------------

    def _on_record(self, rec: dict) -> None:
        kind = rec.get("kind")
        event: dict | None = None
        if kind == "rx" and rec.get("dir") == "up":
            self._last_up_hex = rec.get("packet_hex")
        elif kind == "checkpoint":
            event = {
                "type": "checkpoint",
                "t": rec["t"],
                "body": dict(rec["event"], packet_hex=self._last_up_hex),
            }
            self._track.append(event["body"])
        elif kind == "alert":
            event = {
                "type": "priority_alert",
                "t": rec["t"],
                "body": dict(rec["event"], packet_hex=self._last_up_hex),
            }
            self._alerts.append(event["body"])
        elif kind == "tx" and rec.get("dir") == "down":
            event = {
                "type": "command_issued",
                "t": rec["t"],
                "body": dict(rec["packet"], packet_hex=rec.get("packet_hex")),
            }
            self._commands.append(event["body"])
        elif kind == "phase" and rec.get("src") == "vehicle":
            self._phase = rec["phase"]
            event = {
                "type": "phase_change",
                "t": rec["t"],
                "body": {"from": rec.get("from"), "to": rec["phase"], "why": rec.get("event")},
            }
        elif kind == "tick":
            event = {
                "type": "tick",
                "t": rec["t"],
                "body": {
                    "pose": rec["pose"],
                    "heading": rec["heading"],
                    "mirror": rec.get("mirror"),
                    "phase": rec["phase"],
                    "up_queue": rec["up_queue"],
                },
            }
            self._last_tick = event["body"]
        if event is not None:
            self._broadcast(event)

    def _broadcast(self, event: dict) -> None:
        with self._lock:
            self._seq += 1
            event = dict(event, stream_seq=self._seq)
            for q in self._subscribers:
                q.put(event)

    def _run(self) -> None:
        pace = self.config.tick_s / self.speedup if self.speedup > 0 else 0.0
        try:
            while self.engine.tick():
                if pace:
                    time.sleep(pace)
            if self.out_dir is not None:
                self.engine.write_outputs(self.out_dir)
        finally:
            # even a crashed engine must release subscribers and commanders
            self.running = False
            self.finished = True
            self._broadcast({"type": "done", "t": self.engine.now, "body": {}})

    # -- client side -----------------------------------------------------------

    def start(self) -> None:
        if self._thread is not None:
            raise RuntimeError("session already started")
        self.running = True
        self._thread = threading.Thread(target=self._run, name="silentlink-engine", daemon=True)
        self._thread.start()

    def join(self, timeout: float | None = None) -> None:
        if self._thread is not None:
            self._thread.join(timeout)

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "type": "snapshot",
                "t": self.engine.now,
                "body": {
                    "phase": self._phase,
                    "tick": self._last_tick,
                    "track": list(self._track),
                    "alerts": list(self._alerts),
                    "commands": list(self._commands),
                    "t_mission": self.config.mission.t_mission,
                    "running": self.running,
                },
            }

    def subscribe(self) -> tuple[dict, queue.Queue]:
        """Atomically snapshot and register, so no event is missed or doubled."""
        with self._lock:
            q: queue.Queue = queue.Queue()
            snap = {
                "type": "snapshot",
                "t": self.engine.now,
                "body": {
                    "phase": self._phase,
                    "tick": self._last_tick,
                    "track": list(self._track),
                    "alerts": list(self._alerts),
                    "commands": list(self._commands),
                    "t_mission": self.config.mission.t_mission,
                    "running": self.running,
                },
                "stream_seq": self._seq,
            }
            self._subscribers.append(q)
            return snap, q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def submit_command(self, req: CommandRequest, timeout_s: float = 30.0) -> int:
        """Validate, convert units, serialize into the engine; returns seq."""
        if not self.running:
            raise HTTPException(status_code=409, detail="no active run")
        try:
            command = Command[req.command]
        except KeyError:
            raise HTTPException(
                status_code=422,
                detail={"field": "command", "error": f"unknown command {req.command!r}"},
            ) from None
        if not -180.0 < req.angle_deg <= 180.0:
            raise HTTPException(
                status_code=422,
                detail={"field": "angle_deg", "error": "must be in (-180, 180]"},
            )
        if abs(req.distance_m) > 20_000_000:
            raise HTTPException(
                status_code=422,
                detail={"field": "distance_m", "error": "out of i32 centimeter range"},
            )
        if abs(req.vertical_m) > 20_000_000:
            raise HTTPException(
                status_code=422,
                detail={"field": "vertical_m", "error": "out of i32 centimeter range"},
            )
        decision = Decision(
            command=command,
            distance_m=req.distance_m,
            angle_deg=req.angle_deg,
            vertical_m=req.vertical_m,
            event_seq=req.event_ref,
            source="operator",
        )
        done = threading.Event()
        box: dict[str, int] = {}

        def _issued(seq: int) -> None:
            box["seq"] = seq
            done.set()

        self.engine.submit_decision(decision, _issued)
        deadline = time.monotonic() + timeout_s
        while not done.wait(0.2):
            if self.finished:
                raise HTTPException(status_code=409, detail="run ended before the command was issued")
            if time.monotonic() > deadline:
                raise HTTPException(status_code=503, detail="engine did not pick up the command")
        return box["seq"]


def create_app(session: GatewaySession) -> FastAPI:
    app = FastAPI(title="silentlink gateway")
    # The console is served separately (frontend/); one operator, local tool.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.session = session

    @app.get("/state")
    def state() -> dict:
        return session.snapshot()

    @app.post("/command")
    def command(req: CommandRequest) -> dict:
        return {"seq": session.submit_command(req)}

    @app.websocket("/ws")
    async def ws(socket: WebSocket) -> None:
        await socket.accept()
        if not session.running:
            await socket.send_json({"type": "error", "body": {"error": "no active run"}})
            await socket.close()
            return
        snap, q = session.subscribe()
        try:
            await socket.send_json(snap)
            import anyio

            while True:
                try:
                    event = await anyio.to_thread.run_sync(lambda: q.get(timeout=1.0))
                except queue.Empty:
                    if session.finished:
                        break
                    continue
                await socket.send_json(event)
                if event.get("type") == "done":
                    break
        except WebSocketDisconnect:
            pass
        finally:
            session.unsubscribe(q)
            try:
                await socket.close()
            except RuntimeError:
                pass

    return app


def serve(config: SimConfig, host: str = "127.0.0.1", port: int = 8000,
          speedup: float = 1.0, out_dir=None) -> None:
    import uvicorn

    session = GatewaySession(config, speedup=speedup, out_dir=out_dir)
    session.start()
    app = create_app(session)
    uvicorn.run(app, host=host, port=port, log_level="warning")
