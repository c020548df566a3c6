"""FastAPI app exposing the demonstration-recording protocol: one WebSocket
session per connection plus a read-only config endpoint for renderers."""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .. import demos as demo_io
from ..demos import DemoRecord
from ..env import EnvConfig
from .schemas import Geometry
from .session import Session, geometry_payload


class DemoWriter:
    """Appends validated episodes to one JSONL file under a lock; assigns
    episode ids continuing from whatever the file already holds."""

    def __init__(self, path: str | Path, cfg: EnvConfig, provenance: str = "human"):
        self.path = Path(path)
        self.cfg = cfg
        self.provenance = provenance
        self._lock = threading.Lock()
        self._next_ep = 0
        if self.path.exists():
            existing = demo_io.load(self.path)  # raises on corrupt files
            if existing.setting != cfg.setting:
                raise ValueError(
                    f"demo file {self.path} is tagged {existing.setting!r}, "
                    f"server setting is {cfg.setting!r}"
                )
            if existing.records:
                self._next_ep = max(r.ep for r in existing.records) + 1

    def append(self, records: list[DemoRecord]) -> int:
        with self._lock:
            ep = self._next_ep
            renumbered = [
                DemoRecord(
                    ep=ep,
                    t=i,
                    state=r.state,
                    action=r.action,
                    reward=r.reward,
                    bx=r.bx,
                    by=r.by,
                    viol=r.viol,
                )
                for i, r in enumerate(records)
            ]
            problems = demo_io.validate_records(renumbered)
            for i, r in enumerate(renumbered):
                _, err = demo_io._validate_record(json.loads(r.to_json()), len(r.viol))
                if err:
                    problems.append((i, err))
            if problems:
                raise ValueError(f"episode failed validation: {problems}")
            new_file = not self.path.exists()
            with self.path.open("a") as fh:
                if new_file:
                    header = {
                        "setting": self.cfg.setting,
                        "provenance": self.provenance,
                        "seed": None,
                        "constraints_digest": self.cfg.constraints_digest(),
                    }
                    fh.write(json.dumps(header) + "\n")
                for r in renumbered:
                    fh.write(r.to_json() + "\n")
            self._next_ep = ep + 1
            return ep


def create_app(
    cfg: EnvConfig,
    out_path: str | Path | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="marble-maze demo service")
    writer = DemoWriter(out_path, cfg) if out_path is not None else None

    def save_fn(records: list[DemoRecord]) -> int:
        if writer is None:
            raise RuntimeError("server started without an output file")
        return writer.append(records)

    @app.get("/config", response_model=Geometry)
    def get_config() -> Geometry:
        return geometry_payload(cfg)

    @app.websocket("/ws")
    async def ws_session(socket: WebSocket) -> None:
        await socket.accept()
        session = Session(cfg, save_fn)
        await socket.send_text(session.hello().model_dump_json())
        try:
            while True:
                text = await socket.receive_text()
                for event in session.handle_raw(text):
                    await socket.send_text(event.model_dump_json())
        except WebSocketDisconnect:
            pass

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app
