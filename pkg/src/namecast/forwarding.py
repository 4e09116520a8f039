"""Per-node forwarding plane: Content Store, Pending Interest Table,
Forwarding Information Base, and the discovery-based strategy pipeline.

Interests walk CS -> PIT -> FIB; a valid FIB entry means unicast, otherwise
broadcast discovery.  Data learns the FIB from its sender, is cached
opportunistically, and follows PIT downstream records: one network downstream
means unicast, two or more a single broadcast.  FIB entries expire by the same
RTO rule the transport uses, so stale next-hops fall back to discovery.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import Callable

from .engine import MICROS, Simulator, to_micros
from .invariants import InvariantChecker
from .packets import Data, Interest, Name, is_prefix, producer_prefix
from .phymac import LOCAL


class ContentStore:
    """Exact-name LRU packet cache; capacity 0 never hits and never stores."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._entries: OrderedDict[Name, Data] = OrderedDict()

    def get(self, name: Name) -> Data | None:
        data = self._entries.get(name)
        if data is not None:
            self._entries.move_to_end(name)
        return data

    def put(self, name: Name, data: Data) -> None:
        if self.capacity <= 0:
            return
        if name in self._entries:
            self._entries.move_to_end(name)
        elif len(self._entries) >= self.capacity:
            self._entries.popitem(last=False)
        self._entries[name] = data

    def __len__(self) -> int:
        return len(self._entries)


@dataclass
class PitEntry:
    name: Name
    downstreams: dict[int, list[int]]     # face -> nonces accepted from it
    seen_nonces: set[int]
    expiry_us: int
    pit_count: int = 1
    forwarded_at_us: int | None = None
    peak_faces: int = 1

    def faces(self) -> list[int]:
        return list(self.downstreams)


@dataclass
class FibEntry:
    prefix: Name
    nexthop: int
    rtt: "object"                         # RttEstimator-compatible
    last_confirmed: float


@dataclass
class ForwarderStats:
    interests_received: int = 0
    data_received: int = 0
    cache_lookups: int = 0
    cache_hits: int = 0
    loop_drops: int = 0
    aggregations: int = 0
    suppressions: int = 0
    interest_unicasts: int = 0
    interest_broadcasts: int = 0
    data_unicasts: int = 0
    data_broadcasts: int = 0
    pit_expirations: int = 0
    pit_miss_data: int = 0
    redundant_local_data: int = 0
    malformed: int = 0


def mark_congestion(data: Data, queue_len: int, capacity: int,
                    threshold: int | None = None) -> Data:
    """Set the congestion mark when the outgoing queue has built up past the
    threshold (default: half capacity).  Marks are sticky once set."""
    if threshold is None:
        threshold = math.ceil(capacity / 2)
    if data.cm_flag or queue_len >= threshold:
        return replace(data, cm_flag=True)
    return data


class Forwarder:
    """Forwarding state machine for one node.

    The link adapter provides `unicast(face, packet)` and
    `broadcast(packet, exclude)`.  Local applications attach as producers
    (answering Interests under a prefix) or as a data sink (receiving Data
    whose PIT entry lists the local face).
    """

    def __init__(
        self,
        sim: Simulator,
        node_id: int,
        link,
        *,
        cs_capacity: int = 0,
        suppression_interval: float = 0.02,
        estimator_factory: Callable = None,
        checks: InvariantChecker | None = None,
    ):
        self.sim = sim
        self.node_id = node_id
        self.link = link
        self.cs = ContentStore(cs_capacity)
        self.pit: dict[Name, PitEntry] = {}
        self.fib: dict[Name, FibEntry] = {}
        self.suppression_interval = suppression_interval
        self.estimator_factory = estimator_factory
        self.checks = checks
        self.stats = ForwarderStats()
        self._producers: list = []
        self._consumer_prefixes: list[Name] = []
        self.local_sink: Callable[[Data], None] | None = None
        self.pit_observer: Callable[[Name, PitEntry], None] | None = None

    def attach_producer(self, producer) -> None:
        self._producers.append(producer)

    def register_consumer_prefix(self, prefix: Name) -> None:
        self._consumer_prefixes.append(prefix)

    # -- Interest pipeline ---------------------------------------------------

    def on_interest(self, face: int, interest: Interest) -> None:
        stats = self.stats
        stats.interests_received += 1
        if not interest.name:
            stats.malformed += 1
            return
        name = interest.name

        stats.cache_lookups += 1
        cached = self.cs.get(name)
        if cached is not None:
            stats.cache_hits += 1
            # the cache is the data node now: restart hop count, clear the mark
            serve = replace(cached, hop_count=0, cm_flag=False)
            self._send_data([face], serve)
            return

        entry = self._pit_get(name)
        if entry is not None:
            if interest.nonce in entry.seen_nonces:
                stats.loop_drops += 1
                return
            entry.seen_nonces.add(interest.nonce)
            entry.downstreams.setdefault(face, []).append(interest.nonce)
            entry.pit_count += 1
            entry.expiry_us = max(
                entry.expiry_us, self.sim.now_us + to_micros(interest.lifetime)
            )
            entry.peak_faces = max(entry.peak_faces, len(entry.downstreams))
            stats.aggregations += 1
            if self.pit_observer:
                self.pit_observer(name, entry)
            if self.checks:
                self.checks.check(
                    entry.pit_count == len(entry.seen_nonces),
                    f"node {self.node_id}: pit_count mismatch for {name}",
                )
            if entry.forwarded_at_us is None:
                since = float("inf")
            else:
                since = (self.sim.now_us - entry.forwarded_at_us) / MICROS
            if since < self.suppression_interval:
                stats.suppressions += 1
                return
            self._forward_interest(interest, arrival_face=face)
            entry.forwarded_at_us = self.sim.now_us
            return

        entry = PitEntry(
            name=name,
            downstreams={face: [interest.nonce]},
            seen_nonces={interest.nonce},
            expiry_us=self.sim.now_us + to_micros(interest.lifetime),
        )
        self.pit[name] = entry
        self.sim.schedule_us(entry.expiry_us, self._expire, name)
        if self.pit_observer:
            self.pit_observer(name, entry)

        produced = self._local_produce(interest)
        if produced is not None:
            self.on_data(LOCAL, produced)
            return
        self._forward_interest(interest, arrival_face=face)
        entry.forwarded_at_us = self.sim.now_us

    def _local_produce(self, interest: Interest) -> Data | None:
        for producer in self._producers:
            data = producer.on_interest(interest)
            if data is not None:
                return data
        return None

    def _forward_interest(self, interest: Interest, arrival_face: int) -> None:
        out = replace(interest, hop_count=interest.hop_count + 1)
        if self.checks:
            self.checks.note_interest_forwarded(self.node_id, out.name, out.nonce)
        nexthop = self.fib_lookup(interest.name)
        if nexthop is not None and nexthop != arrival_face:
            self.stats.interest_unicasts += 1
            self.link.unicast(nexthop, out)
        else:
            # no valid next-hop, or it points back where the Interest came
            # from: fall back to discovery
            self.stats.interest_broadcasts += 1
            self.link.broadcast(out, exclude=arrival_face)

    # -- Data pipeline -------------------------------------------------------

    def on_data(self, face: int, data: Data) -> None:
        stats = self.stats
        stats.data_received += 1
        name = data.name
        entry = self._pit_get(name)

        if face != LOCAL:
            sample = None
            if entry is not None and entry.forwarded_at_us is not None:
                sample = (self.sim.now_us - entry.forwarded_at_us) / MICROS
            self._fib_learn(producer_prefix(name), face, sample)

        self.cs.put(name, data)
        if self.checks:
            self.checks.check(
                len(self.cs) <= max(self.cs.capacity, 0),
                f"node {self.node_id}: content store over capacity",
            )

        if entry is None:
            stats.pit_miss_data += 1
            if any(is_prefix(p, name) for p in self._consumer_prefixes):
                stats.redundant_local_data += 1
            return
        del self.pit[name]

        faces = entry.faces()
        if LOCAL in faces and self.local_sink is not None:
            self.local_sink(data)
        net_faces = [f for f in faces if f != LOCAL]
        if not net_faces:
            return
        out = replace(data, hop_count=data.hop_count + 1)
        if len(net_faces) == 1:
            stats.data_unicasts += 1
            self._send_data(net_faces, out, already_bumped=True)
        else:
            stats.data_broadcasts += 1
            self.link.broadcast(out, exclude=None)

    def _send_data(self, faces: list[int], data: Data, already_bumped: bool = False) -> None:
        for face in faces:
            if face == LOCAL:
                if self.local_sink is not None:
                    self.local_sink(data)
            else:
                out = data if already_bumped else replace(data, hop_count=data.hop_count + 1)
                self.link.unicast(face, out)

    # -- Tables ----------------------------------------------------------------

    def fib_lookup(self, name: Name) -> int | None:
        """Longest-prefix match over valid entries; stale entries count as absent."""
        now = self.sim.now
        best: FibEntry | None = None
        for prefix, entry in self.fib.items():
            if not is_prefix(prefix, name):
                continue
            if now - entry.last_confirmed >= entry.rtt.rto:
                continue
            if best is None or len(prefix) > len(best.prefix):
                best = entry
        if best is None:
            return None
        if self.checks:
            self.checks.check(
                now - best.last_confirmed < best.rtt.rto,
                f"node {self.node_id}: stale FIB entry used for {name}",
            )
        return best.nexthop

    def _fib_learn(self, prefix: Name, face: int, rtt_sample: float | None) -> None:
        entry = self.fib.get(prefix)
        if entry is None or entry.nexthop != face:
            # estimator is per (prefix, nexthop) pair: new pair, fresh estimator
            entry = FibEntry(prefix, face, self.estimator_factory(), self.sim.now)
            self.fib[prefix] = entry
        if rtt_sample is not None and rtt_sample > 0:
            entry.rtt.on_sample(rtt_sample)
        entry.last_confirmed = self.sim.now

    def invalidate_prefix(self, prefix: Name) -> None:
        """Loss reaction: drop the learned next-hop so the next Interest for
        this prefix falls back to discovery."""
        self.fib.pop(prefix, None)

    def _pit_get(self, name: Name) -> PitEntry | None:
        entry = self.pit.get(name)
        if entry is not None and entry.expiry_us <= self.sim.now_us:
            del self.pit[name]
            self.stats.pit_expirations += 1
            return None
        return entry

    def _expire(self, name: Name) -> None:
        entry = self.pit.get(name)
        if entry is None:
            return
        if entry.expiry_us <= self.sim.now_us:
            del self.pit[name]
            self.stats.pit_expirations += 1
        else:
            # aggregation pushed the deadline out; chase the new expiry
            self.sim.schedule_us(entry.expiry_us, self._expire, name)
