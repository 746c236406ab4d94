"""Gapless, cursor-resumable event log with a bounded history buffer.

Sequence numbers start at 0 and never skip.  Consumers resume from any
cursor still inside the buffer; older cursors get an EventGap and must
refetch the full state.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass
from enum import Enum

from .errors import SememError

DEFAULT_CAPACITY = 10_000


class EventGap(SememError):
    code = "event_gap"


class EventKind(str, Enum):
    GRAPH_CHANGED = "graph_changed"
    PROMPT_OPENED = "prompt_opened"
    PROMPT_CLOSED = "prompt_closed"
    EXECUTION_RECORDED = "execution_recorded"
    SCENE_INGESTED = "scene_ingested"


@dataclass(frozen=True)
class Event:
    seq: int
    kind: EventKind
    payload: dict

    def to_dict(self) -> dict:
        return {"seq": self.seq, "kind": self.kind.value, "payload": self.payload}


class EventLog:
    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        self._condition = threading.Condition()
        self._buffer: deque[Event] = deque()
        self._capacity = capacity
        self._base = 0  # seq of the oldest retained event

    def append(self, kind: EventKind, payload: dict) -> Event:
        with self._condition:
            event = Event(self._base + len(self._buffer), kind, payload)
            self._buffer.append(event)
            if len(self._buffer) > self._capacity:
                self._buffer.popleft()
                self._base += 1
            self._condition.notify_all()
            return event

    @property
    def next_seq(self) -> int:
        with self._condition:
            return self._base + len(self._buffer)

    @property
    def oldest_available(self) -> int:
        with self._condition:
            return self._base

    def events_from(self, cursor: int) -> list[Event]:
        """All retained events with seq >= cursor, in order."""
        with self._condition:
            if cursor < self._base:
                raise EventGap(
                    f"cursor {cursor} fell out of the buffer (oldest is {self._base}); "
                    "refetch the full state", oldest=self._base)
            start = cursor - self._base
            return list(self._buffer)[start:] if start < len(self._buffer) else []

    def wait_for(self, cursor: int, timeout: float) -> bool:
        """Block until an event with seq >= cursor exists; False on timeout."""
        with self._condition:
            if self._base + len(self._buffer) > cursor:
                return True
            return self._condition.wait_for(
                lambda: self._base + len(self._buffer) > cursor, timeout=timeout)
