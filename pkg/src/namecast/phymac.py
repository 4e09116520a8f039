"""Link layer: drop-tail NIC queues, slotted-backoff CSMA, unit-disk broadcast
propagation with collision loss, per-frame unicast retries, and wired
point-to-point links with per-byte corruption.

Collision model: every node within radius of the sender receives a frame iff
no other frame overlaps in time at that receiver; any temporal overlap
destroys all overlapping frames there (no capture).  Carrier sensing uses the
same unit-disk radius, so hidden terminals arise naturally.  Reachability is
sampled at transmission start and held for the frame's airtime.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .engine import MICROS, Simulator

BROADCAST = -1   # frame destination meaning "all nodes in range"
LOCAL = -2       # face id of the node-local application


@dataclass
class Frame:
    payload: object          # Interest, Data, or None for channel noise
    kind: str                # "interest" | "data" | "noise"
    src: int
    dst: int                 # node id or BROADCAST
    size_bits: int
    tx_start: float = 0.0
    tx_end: float = 0.0


@dataclass
class MacParams:
    bitrate: float = 1e6           # bits/second
    queue_capacity: int = 25       # frames
    slot_time: float = 20e-6       # seconds per backoff slot
    backoff_slots: int = 64        # uniform over [0, slots) slots
    retries: int = 3               # unicast re-contention attempts after the first
    p_frame_error: float = 0.0     # per-attempt reception error after collisions
    max_backoff_growth: int = 8    # retry window cap: slots * growth
    broadcast_backoff_factor: int = 4   # wider jitter for unacknowledged broadcasts


@dataclass
class MediumStats:
    sent: int = 0
    delivered: int = 0
    collided: int = 0
    phy_errors: int = 0
    out_of_range: int = 0


class _Transmission:
    __slots__ = ("frame", "src", "start_us", "end_us", "reach", "reach_set",
                 "done_cb", "finished")

    def __init__(self, frame, src, start_us, end_us, reach, done_cb):
        self.frame = frame
        self.src = src
        self.start_us = start_us
        self.end_us = end_us
        self.reach = reach              # receiver ids in unit-disk range at tx start
        self.reach_set = frozenset(reach)
        self.done_cb = done_cb
        self.finished = False


class Medium:
    """Shared wireless channel with unit-disk propagation and overlap collisions."""

    def __init__(
        self,
        sim: Simulator,
        params: MacParams,
        position_fn: Callable[[int], tuple[float, float]],
        node_count: int,
        tx_radius: float,
    ):
        self.sim = sim
        self.params = params
        self.position_fn = position_fn
        self.node_count = node_count
        self.tx_radius = tx_radius
        self._receivers: dict[int, Callable] = {}
        self._live: list[_Transmission] = []
        self.stats = MediumStats()

    def register(self, node_id: int, receive_cb: Callable) -> None:
        self._receivers[node_id] = receive_cb

    def _in_range(self, a: int, b: int) -> bool:
        xa, ya = self.position_fn(a)
        xb, yb = self.position_fn(b)
        dx, dy = xa - xb, ya - yb
        r = self.tx_radius
        return dx * dx + dy * dy <= r * r

    def sensed_busy(self, node: int) -> bool:
        """Carrier sense at this instant.  A transmission starting at exactly
        `now` is not yet sensed, so simultaneous slot winners collide."""
        now = self.sim.now_us
        for t in self._live:
            if t.start_us < now < t.end_us and self._in_range(t.src, node):
                return True
        return False

    def free_time_us(self, node: int) -> int:
        """Earliest time the channel around `node` is free of current traffic."""
        now = self.sim.now_us
        free = now
        for t in self._live:
            if t.start_us <= now < t.end_us and self._in_range(t.src, node):
                free = max(free, t.end_us)
        return free

    def transmit(self, frame: Frame, done_cb: Callable[[bool], None]) -> None:
        sim = self.sim
        src = frame.src
        reach = [
            j
            for j in range(self.node_count)
            if j != src and self._in_range(src, j)
        ]
        airtime_us = int(round(frame.size_bits / self.params.bitrate * MICROS))
        frame.tx_start = sim.now
        frame.tx_end = sim.now + airtime_us / MICROS
        tx = _Transmission(frame, src, sim.now_us, sim.now_us + airtime_us, reach, done_cb)
        self._live.append(tx)
        self.stats.sent += 1
        sim.schedule_us(tx.end_us, self._finish, tx)

    def _collided(self, tx: _Transmission, receiver: int) -> bool:
        for u in self._live:
            if u is tx:
                continue
            if u.start_us < tx.end_us and u.end_us > tx.start_us:
                if u.src == receiver or receiver in u.reach_set:
                    return True
        return False

    def _finish(self, tx: _Transmission) -> None:
        stats = self.stats
        p_err = self.params.p_frame_error
        delivered_to_dst = tx.frame.dst == BROADCAST
        for r in tx.reach:
            if self._collided(tx, r):
                stats.collided += 1
                continue
            if p_err > 0.0 and self.sim.stream(f"phy.err.{r}").random() < p_err:
                stats.phy_errors += 1
                continue
            stats.delivered += 1
            if tx.frame.dst == BROADCAST:
                self._receivers[r](tx.frame, tx.src)
            elif tx.frame.dst == r:
                delivered_to_dst = True
                self._receivers[r](tx.frame, tx.src)
            # clean unicast receptions at other nodes are discarded above the MAC
        stats.out_of_range += self.node_count - 1 - len(tx.reach)
        tx.finished = True
        self._prune()
        tx.done_cb(delivered_to_dst)

    def _prune(self) -> None:
        # a finished transmission must survive while any unfinished one might
        # still need it for overlap checks
        live = self._live
        unfinished_starts = [t.start_us for t in live if not t.finished]
        if not unfinished_starts:
            self._live = []
            return
        horizon = min(unfinished_starts)
        self._live = [t for t in live if not t.finished or t.end_us > horizon]


IDLE, WAITING, BACKOFF, TRANSMITTING = "idle", "waiting", "backoff", "transmitting"


@dataclass
class RadioStats:
    queue_drops: int = 0
    mac_drops: int = 0     # unicast frames abandoned after exhausting retries
    frames_sent: int = 0


class Radio:
    """Per-node transmitter: FIFO queue drained by CSMA with slotted backoff.

    The frame in service is held outside the queue, so the observable queue
    length counts only waiting frames (used for congestion marking).  Unicast
    frames re-contend after a failed (collided) delivery; broadcasts never do.
    """

    def __init__(self, sim: Simulator, medium: Medium, node_id: int, params: MacParams):
        self.sim = sim
        self.medium = medium
        self.node_id = node_id
        self.params = params
        self.queue: deque[Frame] = deque()
        self.current: Frame | None = None
        self.attempts = 0
        self.state = IDLE
        self.stats = RadioStats()
        self._rand = sim.stream(f"mac.{node_id}")

    @property
    def queue_len(self) -> int:
        return len(self.queue)

    def submit(self, frame: Frame) -> bool:
        """Drop-tail enqueue; returns False when the queue is full."""
        if len(self.queue) >= self.params.queue_capacity:
            self.stats.queue_drops += 1
            return False
        self.queue.append(frame)
        if self.state == IDLE:
            self._next_frame()
        return True

    def _next_frame(self) -> None:
        if not self.queue:
            self.state = IDLE
            self.current = None
            return
        self.current = self.queue.popleft()
        self.attempts = 0
        self._contend()

    def _contend(self) -> None:
        """Wait for a free channel, then defer a fresh random backoff.

        Retries double the contention window (capped), which is what lets two
        hidden terminals whose frames outlast the base window ever separate.
        """
        free = self.medium.free_time_us(self.node_id)
        if free > self.sim.now_us:
            self.state = WAITING
            self.sim.schedule_us(free, self._contend)
            return
        self.state = BACKOFF
        params = self.params
        if self.current.dst == BROADCAST:
            # broadcasts carry no MAC recovery, so spread them further apart
            slots = params.backoff_slots * params.broadcast_backoff_factor
        else:
            slots = min(params.backoff_slots << self.attempts,
                        params.backoff_slots * params.max_backoff_growth)
        slot = self._rand.randrange(slots)
        delay_us = int(round(slot * params.slot_time * MICROS))
        self.sim.schedule_us(self.sim.now_us + delay_us, self._attempt)

    def _attempt(self) -> None:
        if self.medium.sensed_busy(self.node_id):
            # channel became busy during backoff: redraw once it frees
            self.state = WAITING
            self.sim.schedule_us(self.medium.free_time_us(self.node_id), self._contend)
            return
        self.state = TRANSMITTING
        self.stats.frames_sent += 1
        self.medium.transmit(self.current, self._done)

    def _done(self, delivered_to_dst: bool) -> None:
        frame = self.current
        if frame.dst != BROADCAST and not delivered_to_dst:
            if self.attempts < self.params.retries:
                self.attempts += 1
                self._contend()
                return
            self.stats.mac_drops += 1
        self._next_frame()


@dataclass
class WiredLink:
    bitrate: float = 5e6
    prop_delay: float = 1e-3
    p_byte_error: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_byte_error <= 1.0:
            raise ValueError("p_byte_error must be within [0, 1]")


def byte_error_drop_probability(p_byte_error: float, nbytes: int) -> float:
    """Probability a frame of `nbytes` is corrupted: 1 - (1 - p)^n."""
    return 1.0 - (1.0 - p_byte_error) ** nbytes


@dataclass
class PortStats:
    queue_drops: int = 0
    corrupted: int = 0
    delivered: int = 0


class WiredPort:
    """One direction of a point-to-point link: FIFO serialization at the link
    bitrate, then propagation delay, then an independent corruption draw."""

    def __init__(
        self,
        sim: Simulator,
        link: WiredLink,
        owner: int,
        peer: int,
        deliver_cb: Callable,
        capacity: int = 25,
    ):
        self.sim = sim
        self.link = link
        self.owner = owner
        self.peer = peer
        self.deliver_cb = deliver_cb
        self.capacity = capacity
        self.queue: deque[Frame] = deque()
        self.busy = False
        self.stats = PortStats()
        self._rand = sim.stream(f"wired.err.{owner}.{peer}")

    @property
    def queue_len(self) -> int:
        return len(self.queue)

    def submit(self, frame: Frame) -> bool:
        if len(self.queue) >= self.capacity:
            self.stats.queue_drops += 1
            return False
        self.queue.append(frame)
        if not self.busy:
            self._start()
        return True

    def _start(self) -> None:
        frame = self.queue.popleft()
        self.busy = True
        airtime = frame.size_bits / self.link.bitrate
        frame.tx_start = self.sim.now
        frame.tx_end = self.sim.now + airtime
        self.sim.schedule_in(airtime, self._serialized, frame)

    def _serialized(self, frame: Frame) -> None:
        self.sim.schedule_in(self.link.prop_delay, self._arrive, frame)
        if self.queue:
            self._start()
        else:
            self.busy = False

    def _arrive(self, frame: Frame) -> None:
        p = self.link.p_byte_error
        if p > 0.0:
            nbytes = frame.size_bits // 8
            if self._rand.random() < byte_error_drop_probability(p, nbytes):
                self.stats.corrupted += 1
                return
        self.stats.delivered += 1
        self.deliver_cb(frame, self.owner)
