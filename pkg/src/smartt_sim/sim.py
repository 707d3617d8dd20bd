"""Deterministic discrete-event engine.

Time is an integer number of nanoseconds. Events fire in ``(fire_at, seq)``
order, where ``seq`` is the insertion counter, so simultaneous events run
FIFO. A single seeded :class:`random.Random` is shared by every component and
consumed in event order, which makes whole runs reproducible from the seed.
"""

from __future__ import annotations

import enum
import heapq
import random
from dataclasses import dataclass
from typing import Any, Callable, Optional

SimTime = int

NS = 1
US = 1_000
MS = 1_000_000
FOREVER: SimTime = 1 << 62


class EventKind(enum.IntEnum):
    PACKET_ARRIVAL = 0
    TIMEOUT = 1
    APP_START = 2
    MEASUREMENT_TICK = 3
    TX_COMPLETE = 4


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current clock."""


class Event:
    __slots__ = ("fire_at", "kind", "handler", "payload", "target", "seq", "state")

    PENDING, FIRED, CANCELLED = 0, 1, 2

    def __init__(
        self,
        fire_at: SimTime,
        handler: Callable[[Any], None],
        payload: Any = None,
        kind: EventKind = EventKind.PACKET_ARRIVAL,
        target: Any = None,
    ):
        self.fire_at = fire_at
        self.kind = kind
        self.handler = handler
        self.payload = payload
        self.target = target
        self.seq = -1
        self.state = Event.PENDING

    def __repr__(self) -> str:
        return f"Event(t={self.fire_at}, kind={self.kind.name}, seq={self.seq})"


@dataclass(frozen=True)
class SimStats:
    now: SimTime
    events_processed: int
    events_cancelled: int
    pending: int


class Simulator:
    """Event queue plus clock plus the run-wide RNG."""

    def __init__(self, seed: int = 0):
        self.now: SimTime = 0
        self.seed = int(seed)
        self.rng = random.Random(self.seed)
        self._heap: list[tuple[int, int, Event]] = []
        self._seq = 0
        self._processed = 0
        self._cancelled = 0
        self._live = 0

    def schedule(self, event: Event) -> Event:
        """Queue ``event``; the returned object doubles as its id for :meth:`cancel`."""
        if event.fire_at < self.now:
            raise SchedulingError(
                f"cannot schedule {event!r} in the past (now={self.now})"
            )
        if event.state != Event.PENDING or event.seq >= 0:
            raise SchedulingError(f"{event!r} was already scheduled")
        event.seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (event.fire_at, event.seq, event))
        self._live += 1
        return event

    def at(
        self,
        fire_at: SimTime,
        handler: Callable[[Any], None],
        payload: Any = None,
        kind: EventKind = EventKind.PACKET_ARRIVAL,
    ) -> Event:
        return self.schedule(Event(fire_at, handler, payload, kind))

    def after(
        self,
        delay: SimTime,
        handler: Callable[[Any], None],
        payload: Any = None,
        kind: EventKind = EventKind.PACKET_ARRIVAL,
    ) -> Event:
        return self.schedule(Event(self.now + delay, handler, payload, kind))

    def cancel(self, event: Optional[Event]) -> bool:
        if event is None or event.state != Event.PENDING or event.seq < 0:
            return False
        event.state = Event.CANCELLED
        self._cancelled += 1
        self._live -= 1
        return True

    @property
    def pending(self) -> int:
        return self._live

    def run_until(self, t_end: SimTime) -> SimStats:
        """Fire every live event with ``fire_at <= t_end``.

        Afterwards the clock sits at ``t_end`` unless the queue drained
        earlier, in which case it stays at the last event's time.
        """
        heap = self._heap
        pop = heapq.heappop
        pending = Event.PENDING
        fired = 0
        while heap and heap[0][0] <= t_end:
            fire_at, _, ev = pop(heap)
            if ev.state != pending:
                continue
            self.now = fire_at
            ev.state = Event.FIRED
            self._live -= 1
            fired += 1
            ev.handler(ev.payload)
        self._processed += fired
        # drop cancelled heads so "drained" is judged on live events only
        while heap and heap[0][2].state != pending:
            pop(heap)
        if heap or not fired:
            self.now = max(self.now, t_end)
        return self.stats()

    def run(self) -> SimStats:
        """Run to quiescence."""
        if not self._live:
            return self.stats()
        return self.run_until(FOREVER)

    def stats(self) -> SimStats:
        return SimStats(self.now, self._processed, self._cancelled, self._live)
