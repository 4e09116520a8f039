"""Deterministic discrete-event engine: virtual clock, event queue, named RNG streams.

Time is kept internally as integer microseconds so that event ordering and
tie-breaking are exact and reproducible across platforms.  All randomness is
drawn from named substreams derived from (root seed, label): adding a draw in
one subsystem never perturbs the sequences seen by another.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from typing import Callable

MICROS = 1_000_000


def to_micros(seconds: float) -> int:
    """Convert seconds to integer microseconds."""
    return int(round(seconds * MICROS))


class EventHandle:
    """Handle for a scheduled action; cancel() prevents it from firing."""

    __slots__ = ("time_us", "seq", "fn", "args", "cancelled")

    def __init__(self, time_us: int, seq: int, fn: Callable, args: tuple):
        self.time_us = time_us
        self.seq = seq
        self.fn = fn
        self.args = args
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True

    def __lt__(self, other: "EventHandle") -> bool:
        return (self.time_us, self.seq) < (other.time_us, other.seq)


class Simulator:
    """Single-threaded event loop over a monotonically advancing virtual clock.

    Events fire in (time, insertion order).  Replaying the same schedule with
    the same seed produces an identical execution.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._now_us = 0
        self._heap: list[EventHandle] = []
        self._seq = 0
        self._streams: dict[str, random.Random] = {}

    @property
    def now(self) -> float:
        """Current virtual time in seconds."""
        return self._now_us / MICROS

    @property
    def now_us(self) -> int:
        return self._now_us

    def stream(self, label: str) -> random.Random:
        """Return the RNG stream for `label`, creating it deterministically on first use."""
        rng = self._streams.get(label)
        if rng is None:
            digest = hashlib.sha256(f"{self.seed}/{label}".encode()).digest()
            rng = random.Random(int.from_bytes(digest[:8], "big"))
            self._streams[label] = rng
        return rng

    def schedule_us(self, time_us: int, fn: Callable, *args) -> EventHandle:
        if time_us < self._now_us:
            raise ValueError(
                f"cannot schedule at {time_us} us: clock already at {self._now_us} us"
            )
        self._seq += 1
        handle = EventHandle(time_us, self._seq, fn, args)
        heapq.heappush(self._heap, handle)
        return handle

    def schedule(self, time: float, fn: Callable, *args) -> EventHandle:
        """Schedule `fn(*args)` at absolute virtual time `time` (seconds)."""
        return self.schedule_us(to_micros(time), fn, *args)

    def schedule_in(self, delay: float, fn: Callable, *args) -> EventHandle:
        """Schedule `fn(*args)` after `delay` seconds."""
        if delay < 0:
            raise ValueError(f"negative delay {delay}")
        return self.schedule_us(self._now_us + to_micros(delay), fn, *args)

    def run_until(self, t_end: float) -> None:
        """Process every event with time <= t_end, then set the clock to t_end."""
        end_us = to_micros(t_end)
        if end_us < self._now_us:
            raise ValueError(f"t_end {t_end} is in the past")
        heap = self._heap
        while heap:
            handle = heap[0]
            if handle.time_us > end_us:
                break
            heapq.heappop(heap)
            if handle.cancelled:
                continue
            self._now_us = handle.time_us
            handle.fn(*handle.args)
        self._now_us = end_us

    def pending(self) -> int:
        """Number of queued, not-yet-cancelled events (diagnostic)."""
        return sum(1 for h in self._heap if not h.cancelled)
