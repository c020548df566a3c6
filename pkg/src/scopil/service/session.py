"""Framework-free session state machine for demonstration recording.

Phases cycle Idle -> Recording <-> Frozen -> Finished -> Idle. While Frozen
the physics clock is halted: act commands are ignored (with a warning) and
the emitted state payload does not change. Saving is only possible once the
episode finished; the buffer is validated against the demonstration schema
before it is handed to the writer."""

from __future__ import annotations

import enum
from typing import Callable

import numpy as np
from pydantic import ValidationError

from ..demos import DemoRecord
from ..env import DoneKind, EnvConfig, MarbleMaze
from .schemas import (
    ActCmd,
    DiscardedEvent,
    ErrorEvent,
    Event,
    FreezeCmd,
    Geometry,
    HelloEvent,
    ResetCmd,
    SavedEvent,
    StateEvent,
    WarningEvent,
    command_adapter,
)


class Phase(str, enum.Enum):
    IDLE = "idle"
    RECORDING = "recording"
    FROZEN = "frozen"
    FINISHED = "finished"


def geometry_payload(cfg: EnvConfig) -> Geometry:
    return Geometry(
        setting=cfg.setting,
        board_half_extent=cfg.board_half_extent,
        hole_center=cfg.hole_center,
        hole_capture_radius=cfg.hole_capture_radius,
        constraints=[c.to_dict() for c in cfg.constraints],
        start_region=cfg.start_region,
        max_steps=cfg.max_steps,
    )


class Session:
    """One demonstrator's episode lifecycle. `save_fn` persists a validated
    record list and returns the assigned episode id."""

    def __init__(self, cfg: EnvConfig, save_fn: Callable[[list[DemoRecord]], int]):
        self.cfg = cfg
        self.env = MarbleMaze(cfg)
        self.save_fn = save_fn
        self.phase = Phase.IDLE
        self.buffer: list[DemoRecord] = []
        self._state_vec: np.ndarray | None = None
        self._last_state_event: StateEvent | None = None
        self._viol_before: tuple[bool, ...] = ()

    def hello(self) -> HelloEvent:
        return HelloEvent(setting=self.cfg.setting, geometry=geometry_payload(self.cfg))

    def handle_raw(self, text: str) -> list[Event]:
        """Parse one JSON command; malformed input yields an error event and
        the session survives."""
        try:
            cmd = command_adapter.validate_json(text)
        except ValidationError as exc:
            return [ErrorEvent(msg=f"bad command: {exc.errors()[0]['msg']}")]
        return self.handle(cmd)

    def handle(self, cmd) -> list[Event]:
        if isinstance(cmd, ResetCmd):
            return self._reset(cmd.seed)
        if isinstance(cmd, ActCmd):
            return self._act(cmd.action)
        if isinstance(cmd, FreezeCmd):
            return self._freeze(cmd.on)
        if cmd.cmd == "save":
            return self._save()
        return self._discard()

    def _state_event(self, reward: float, viol_event: tuple[bool, ...]) -> StateEvent:
        raw = self.env.raw
        event = StateEvent(
            t=raw.t,
            ball=(raw.bx, raw.by),
            vel=(raw.vx, raw.vy),
            angles=(raw.rx, raw.ry),
            ang_vel=(raw.rvx, raw.rvy),
            reward=reward,
            done=self.env.done.value,
            viol_active=list(self.env.violation_active),
            viol_event=list(viol_event),
            frozen=self.phase is Phase.FROZEN,
        )
        self._last_state_event = event
        return event

    def _reset(self, seed: int | None) -> list[Event]:
        self.buffer = []
        self._state_vec = self.env.reset(seed=seed)
        self.phase = Phase.RECORDING
        self._viol_before = self.env.violation_active
        return [self._state_event(0.0, self.env.initial_violation_events)]

    def _act(self, action: int) -> list[Event]:
        if self.phase is Phase.FROZEN:
            # clock halted: nothing recorded, identical state re-emitted
            return [
                WarningEvent(msg="frozen: action ignored"),
                self._last_state_event.model_copy(),
            ]
        if self.phase is Phase.IDLE:
            return [ErrorEvent(msg="no episode: send reset first")]
        if self.phase is Phase.FINISHED:
            return [ErrorEvent(msg="episode finished: save, discard, or reset")]
        pre_raw = self.env.raw
        res = self.env.step(action)
        self.buffer.append(
            DemoRecord(
                ep=0,  # assigned by the writer on save
                t=pre_raw.t,
                state=[float(v) for v in self._state_vec],
                action=action,
                reward=float(res.reward),
                bx=pre_raw.bx,
                by=pre_raw.by,
                viol=list(self._viol_before),
            )
        )
        self._state_vec = res.state
        self._viol_before = res.violation_active
        if res.done is not DoneKind.RUNNING:
            self.phase = Phase.FINISHED
        return [self._state_event(res.reward, res.violation_events)]

    def _freeze(self, on: bool) -> list[Event]:
        if self.phase not in (Phase.RECORDING, Phase.FROZEN):
            return [ErrorEvent(msg=f"cannot freeze while {self.phase.value}")]
        self.phase = Phase.FROZEN if on else Phase.RECORDING
        event = self._last_state_event.model_copy(update={"frozen": self.phase is Phase.FROZEN})
        self._last_state_event = event
        return [event]

    def _save(self) -> list[Event]:
        if not self.buffer:
            return [ErrorEvent(msg="nothing to save: buffer is empty")]
        if self.phase is not Phase.FINISHED:
            return [ErrorEvent(msg="episode still running: finish it or discard")]
        try:
            self.save_fn(self.buffer)
        except Exception as exc:  # surface writer failures to the client
            return [ErrorEvent(msg=f"save failed: {exc}")]
        pairs = len(self.buffer)
        self.buffer = []
        self.phase = Phase.IDLE
        return [SavedEvent(pairs=pairs)]

    def _discard(self) -> list[Event]:
        pairs = len(self.buffer)
        self.buffer = []
        self.phase = Phase.IDLE
        return [DiscardedEvent(pairs=pairs)]
