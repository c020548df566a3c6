"""Wire schemas for the demonstration-recording protocol."""

from __future__ import annotations

from typing import Annotated, Literal, Union

from pydantic import BaseModel, Field, TypeAdapter


class ResetCmd(BaseModel):
    cmd: Literal["reset"]
    seed: int | None = None


class ActCmd(BaseModel):
    cmd: Literal["act"]
    action: int = Field(ge=0, le=8)


class FreezeCmd(BaseModel):
    cmd: Literal["freeze"]
    on: bool


class SaveCmd(BaseModel):
    cmd: Literal["save"]


class DiscardCmd(BaseModel):
    cmd: Literal["discard"]


Command = Annotated[
    Union[ResetCmd, ActCmd, FreezeCmd, SaveCmd, DiscardCmd],
    Field(discriminator="cmd"),
]

command_adapter: TypeAdapter = TypeAdapter(Command)


class Geometry(BaseModel):
    """Board and constraint geometry, everything a renderer needs."""

    setting: str
    board_half_extent: float
    hole_center: tuple[float, float]
    hole_capture_radius: float
    constraints: list[dict]
    start_region: tuple[float, float, float, float]
    max_steps: int


class HelloEvent(BaseModel):
    event: Literal["hello"] = "hello"
    setting: str
    geometry: Geometry


class StateEvent(BaseModel):
    event: Literal["state"] = "state"
    t: int
    ball: tuple[float, float]
    vel: tuple[float, float]
    angles: tuple[float, float]
    ang_vel: tuple[float, float]
    reward: float
    done: Literal["goal", "timeout", "running"]
    viol_active: list[bool]
    viol_event: list[bool]
    frozen: bool


class SavedEvent(BaseModel):
    event: Literal["saved"] = "saved"
    pairs: int


class DiscardedEvent(BaseModel):
    event: Literal["discarded"] = "discarded"
    pairs: int


class ErrorEvent(BaseModel):
    event: Literal["error"] = "error"
    msg: str


class WarningEvent(BaseModel):
    event: Literal["warning"] = "warning"
    msg: str


Event = Union[HelloEvent, StateEvent, SavedEvent, DiscardedEvent, ErrorEvent, WarningEvent]
