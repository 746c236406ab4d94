"""Thin client for the HTTP API.

The CLI talks to the engine exclusively through this client.  It either
connects to a remote server (``base_url``) or drives an in-process engine
through the very same FastAPI app, so both paths exercise the real HTTP
contract.
"""

from __future__ import annotations

import json
from typing import Any, Optional

import httpx

from .engine import Engine
from .errors import SememError


class ServiceCallError(SememError):
    """A non-OK envelope came back from the service."""

    code = "service_call_failed"

    def __init__(self, status: int, code: str, message: str, details: dict | None = None):
        super().__init__(message, **(details or {}))
        self.status = status
        self.code = code


class SememClient:
    def __init__(self, base_url: Optional[str] = None, engine: Optional[Engine] = None):
        if (base_url is None) == (engine is None):
            raise ValueError("pass exactly one of base_url or engine")
        if base_url is not None:
            self._client = httpx.Client(base_url=base_url, timeout=30.0)
        else:
            import warnings

            with warnings.catch_warnings():
                # starlette nags about httpx vs httpx2; httpx works fine here
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app(engine))
        self.engine = engine

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _unwrap(self, response: httpx.Response) -> Any:
        try:
            envelope = response.json()
        except json.JSONDecodeError as exc:
            raise ServiceCallError(response.status_code, "bad_envelope",
                                   f"non-JSON response: {response.text[:200]}") from exc
        if not envelope.get("ok"):
            error = envelope.get("error") or {}
            raise ServiceCallError(response.status_code,
                                   error.get("code", "unknown"),
                                   error.get("message", "service call failed"),
                                   error.get("details"))
        return envelope.get("result")

    # ------------------------------------------------------------------ #

    def health(self) -> dict:
        return self._unwrap(self._client.get("/health"))

    def ingest_scene(self, observations: list[dict]) -> dict:
        return self._unwrap(self._client.post("/scene", json=observations))

    def reset_scene(self) -> dict:
        return self._unwrap(self._client.post("/scene/reset"))

    def instruct(self, text: str, strategy: Optional[str] = None) -> dict:
        payload = {"text": text}
        if strategy:
            payload["strategy"] = strategy
        return self._unwrap(self._client.post("/instruction", json=payload))

    def open_prompt(self) -> Optional[dict]:
        return self._unwrap(self._client.get("/prompt"))["prompt"]

    def answer(self, prompt_id: int, choice: dict) -> list[dict]:
        return self._unwrap(
            self._client.post(f"/prompt/{prompt_id}/answer", json={"choice": choice})
        )["effects"]

    def graph(self) -> dict:
        return self._unwrap(self._client.get("/graph"))

    def export(self, include_scene: bool = False) -> dict:
        return self._unwrap(
            self._client.get("/export", params={"include_scene": include_scene}))

    def log(self, start: int = 0, limit: Optional[int] = None) -> list[dict]:
        params: dict[str, Any] = {"start": start}
        if limit is not None:
            params["limit"] = limit
        return self._unwrap(self._client.get("/log", params=params))["records"]

    def events(self, cursor: int = 0, limit: Optional[int] = None,
               live: bool = False) -> list[dict]:
        """Collect SSE events from ``cursor``.

        Non-live mode (default) drains the buffered events and returns; live
        mode keeps the stream open until ``limit`` events arrived.
        """
        params: dict[str, Any] = {"from": cursor, "live": live}
        if limit is not None:
            params["limit"] = limit
        collected: list[dict] = []
        with self._client.stream("GET", "/events", params=params) as response:
            if response.status_code != 200:
                response.read()
                raise ServiceCallError(response.status_code, "event_stream",
                                       response.text[:200])
            for line in response.iter_lines():
                if line.startswith("data: "):
                    collected.append(json.loads(line[len("data: "):]))
                    if limit is not None and len(collected) >= limit:
                        break
        return collected
