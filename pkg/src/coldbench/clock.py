"""Virtual time for deterministic simulation runs.

All timing-sensitive components (fridge simulator, recognition pipeline,
experiment runner) share one :class:`Scheduler` so that sensor readings,
camera frames and recognizer completions interleave in a single, reproducible
order.  Nothing here touches the wall clock; a demo loop that wants real-time
behaviour simply pumps the scheduler at wall-clock pace.
"""

from __future__ import annotations

import heapq
import itertools
import threading
from typing import Callable


class VirtualClock:
    """Millisecond counter that only moves when the scheduler executes events."""

    def __init__(self, start_ms: int = 0):
        self._now_ms = int(start_ms)

    def now_ms(self) -> int:
        return self._now_ms

    def now_s(self) -> float:
        return self._now_ms / 1000.0

    def _advance_to(self, t_ms: int) -> None:
        if t_ms < self._now_ms:
            raise ValueError(f"clock cannot move backwards ({t_ms} < {self._now_ms})")
        self._now_ms = int(t_ms)


class Scheduler:
    """Deterministic event queue over a :class:`VirtualClock`.

    Events scheduled for the same millisecond run in submission order.  The
    lock makes enqueue/cancel safe from other threads (the demo HTTP server
    queues simulator commands this way); execution itself is single-threaded.
    """

    def __init__(self, clock: VirtualClock | None = None):
        self.clock = clock or VirtualClock()
        self._heap: list[tuple[int, int, Callable[[], None]]] = []
        self._ids = itertools.count()
        self._cancelled: set[int] = set()
        self._lock = threading.Lock()

    def now_ms(self) -> int:
        return self.clock.now_ms()

    def schedule(self, at_ms: int, fn: Callable[[], None]) -> int:
        if at_ms < self.clock.now_ms():
            raise ValueError(f"cannot schedule in the past ({at_ms} < {self.clock.now_ms()})")
        handle = next(self._ids)
        with self._lock:
            heapq.heappush(self._heap, (int(at_ms), handle, fn))
        return handle

    def schedule_in(self, delay_ms: int, fn: Callable[[], None]) -> int:
        return self.schedule(self.clock.now_ms() + int(delay_ms), fn)

    def cancel(self, handle: int) -> None:
        with self._lock:
            self._cancelled.add(handle)

    def peek_next(self) -> int | None:
        """Timestamp of the next live event, or None when the queue is empty."""
        with self._lock:
            while self._heap and self._heap[0][1] in self._cancelled:
                _, handle, _ = heapq.heappop(self._heap)
                self._cancelled.discard(handle)
            return self._heap[0][0] if self._heap else None

    def _pop_due(self, up_to_ms: int) -> tuple[int, Callable[[], None]] | None:
        with self._lock:
            while self._heap:
                t, handle, fn = self._heap[0]
                if handle in self._cancelled:
                    heapq.heappop(self._heap)
                    self._cancelled.discard(handle)
                    continue
                if t > up_to_ms:
                    return None
                heapq.heappop(self._heap)
                return t, fn
            return None

    def run_due(self, up_to_ms: int) -> int:
        """Execute every event at or before ``up_to_ms``; returns the count run.

        The clock lands exactly on ``up_to_ms`` afterwards even if the last
        event fired earlier.
        """
        executed = 0
        while True:
            item = self._pop_due(up_to_ms)
            if item is None:
                break
            t, fn = item
            self.clock._advance_to(t)
            fn()
            executed += 1
        self.clock._advance_to(max(up_to_ms, self.clock.now_ms()))
        return executed

    def run_until_idle(self, limit_ms: int | None = None) -> int:
        """Drain the queue in time order; stop at ``limit_ms`` if given."""
        executed = 0
        while True:
            nxt = self.peek_next()
            if nxt is None or (limit_ms is not None and nxt > limit_ms):
                break
            executed += self.run_due(nxt)
        return executed
