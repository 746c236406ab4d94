"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field


class ApiError(BaseModel):
    code: str
    message: str
    details: dict[str, Any] = Field(default_factory=dict)


class Envelope(BaseModel):
    """Every response carries the originating request id and either a result or an error."""

    request_id: str
    ok: bool
    result: Optional[Any] = None
    error: Optional[ApiError] = None


class InstructionRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    text: str
    strategy: Optional[str] = Field(default=None, pattern="^(heuristic|triplet)$")


class AnswerRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    choice: dict[str, Any]


class InstantiatedItem(BaseModel):
    node_id: int
    label: str
    type: str


class IngestResult(BaseModel):
    instantiated: list[InstantiatedItem]
    unknowns: int
    discarded: int
    prompt: Optional[dict[str, Any]] = None
