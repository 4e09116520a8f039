"""Node assembly and ready-made networks.

A node couples one forwarder with a link layer (a shared-medium radio or a set
of wired ports) and any local applications.  Congestion marking happens here,
at the moment a Data frame is enqueued, because only the link layer can see
the outgoing queue.
"""

from __future__ import annotations

import math
from typing import Callable

from .engine import Simulator
from .forwarding import Forwarder, mark_congestion
from .invariants import InvariantChecker
from .packets import Data, Interest, LINK_OVERHEAD, Name
from .phymac import (
    BROADCAST,
    Frame,
    LOCAL,
    MacParams,
    Medium,
    Radio,
    WiredLink,
    WiredPort,
)
from .topology import Arena, RandomWalk
from .transport import Consumer, ConsumerConfig, Producer, RttEstimator


def make_frame(packet, src: int, dst: int) -> Frame:
    kind = "interest" if isinstance(packet, Interest) else "data"
    bits = (packet.wire_size() + LINK_OVERHEAD) * 8
    return Frame(payload=packet, kind=kind, src=src, dst=dst, size_bits=bits)


class WirelessNode:
    """Link adapter bridging one forwarder to the shared radio."""

    def __init__(self, sim: Simulator, node_id: int, radio: Radio,
                 cm_threshold: int | None):
        self.sim = sim
        self.node_id = node_id
        self.radio = radio
        self.cm_threshold = cm_threshold
        self.forwarder: Forwarder | None = None
        self.consumers: list[Consumer] = []

    def _marked(self, packet):
        if isinstance(packet, Data):
            return mark_congestion(
                packet, self.radio.queue_len, self.radio.params.queue_capacity,
                self.cm_threshold,
            )
        return packet

    def unicast(self, face: int, packet) -> None:
        self.radio.submit(make_frame(self._marked(packet), self.node_id, face))

    def broadcast(self, packet, exclude: int | None = None) -> None:
        # a single radio transmission reaches every neighbor; no per-face exclusion
        self.radio.submit(make_frame(self._marked(packet), self.node_id, BROADCAST))

    def on_frame(self, frame: Frame, src: int) -> None:
        if frame.kind == "noise":
            return
        if frame.kind == "interest":
            self.forwarder.on_interest(src, frame.payload)
        else:
            self.forwarder.on_data(src, frame.payload)

    def deliver_local(self, data: Data) -> None:
        for consumer in self.consumers:
            consumer.on_data(data)


class WiredNode:
    """Link adapter for a node with point-to-point ports; broadcast floods
    every port except the arrival one."""

    def __init__(self, sim: Simulator, node_id: int, cm_threshold: int | None):
        self.sim = sim
        self.node_id = node_id
        self.cm_threshold = cm_threshold
        self.ports: dict[int, WiredPort] = {}
        self.forwarder: Forwarder | None = None
        self.consumers: list[Consumer] = []

    def _marked(self, packet, port: WiredPort):
        if isinstance(packet, Data):
            return mark_congestion(
                packet, port.queue_len, port.capacity, self.cm_threshold
            )
        return packet

    def unicast(self, face: int, packet) -> None:
        port = self.ports[face]
        port.submit(make_frame(self._marked(packet, port), self.node_id, face))

    def broadcast(self, packet, exclude: int | None = None) -> None:
        for face, port in self.ports.items():
            if face == exclude:
                continue
            port.submit(make_frame(self._marked(packet, port), self.node_id, face))

    def on_frame(self, frame: Frame, src: int) -> None:
        if frame.kind == "interest":
            self.forwarder.on_interest(src, frame.payload)
        else:
            self.forwarder.on_data(src, frame.payload)

    def deliver_local(self, data: Data) -> None:
        for consumer in self.consumers:
            consumer.on_data(data)


class WirelessNetwork:
    """A set of forwarding nodes on one wireless channel, optionally mobile."""

    def __init__(
        self,
        sim: Simulator,
        positions: list[tuple[float, float]],
        arena: Arena,
        mac: MacParams = None,
        speed: float = 0.0,
        cs_capacity: int = 0,
        suppression_interval: float = 0.02,
        cm_threshold: int | None = None,
        rto_params: tuple[float, float, float] = (2.0, 0.2, 60.0),
        checks: InvariantChecker | None = None,
    ):
        self.sim = sim
        self.arena = arena
        self.mac = mac or MacParams()
        self.checks = checks
        self.walk: RandomWalk | None = None
        n = len(positions)
        if speed > 0:
            self.walk = RandomWalk(sim, arena, positions, speed)
            position_fn = lambda i: self.walk.position(i)
        else:
            static = list(positions)
            position_fn = lambda i: static[i]
        self.position_fn = position_fn
        self.medium = Medium(sim, self.mac, position_fn, n, arena.tx_radius)
        initial, lo, hi = rto_params
        estimator_factory = lambda: RttEstimator(initial, lo, hi)
        self.nodes: list[WirelessNode] = []
        for i in range(n):
            radio = Radio(sim, self.medium, i, self.mac)
            node = WirelessNode(sim, i, radio, cm_threshold)
            node.forwarder = Forwarder(
                sim, i, node,
                cs_capacity=cs_capacity,
                suppression_interval=suppression_interval,
                estimator_factory=estimator_factory,
                checks=checks,
            )
            node.forwarder.local_sink = node.deliver_local
            self.medium.register(i, node.on_frame)
            self.nodes.append(node)

    def add_consumer(self, node_id: int, config: ConsumerConfig,
                     trace: Callable | None = None) -> Consumer:
        node = self.nodes[node_id]
        send_fn = lambda interest: node.forwarder.on_interest(LOCAL, interest)
        consumer = Consumer(
            self.sim, node_id, config, send_fn,
            self.sim.stream(f"app.{node_id}"), trace=trace, checks=self.checks,
        )
        consumer.loss_hook = lambda: node.forwarder.invalidate_prefix(config.prefix)
        node.consumers.append(consumer)
        node.forwarder.register_consumer_prefix(config.prefix)
        return consumer

    def add_producer(self, node_id: int, prefix: Name, payload_size: int) -> Producer:
        producer = Producer(prefix, payload_size)
        self.nodes[node_id].forwarder.attach_producer(producer)
        return producer

    def inject_noise(self, node_id: int, at: float, airtime: float) -> None:
        """Schedule a junk frame occupying the channel (scripted scenarios)."""
        bits = int(round(airtime * self.mac.bitrate))
        frame = Frame(payload=None, kind="noise", src=node_id, dst=BROADCAST,
                      size_bits=bits)
        self.sim.schedule(at, self.nodes[node_id].radio.submit, frame)

    # -- aggregate counters -----------------------------------------------------

    def total_queue_drops(self) -> int:
        return sum(n.radio.stats.queue_drops for n in self.nodes)

    def total_forwarder(self, field_name: str) -> int:
        return sum(getattr(n.forwarder.stats, field_name) for n in self.nodes)


class WiredChain:
    """Linear chain of point-to-point links (full duplex, no collisions)."""

    def __init__(
        self,
        sim: Simulator,
        n: int,
        link: WiredLink = None,
        bottleneck: bool = False,
        bottleneck_link: WiredLink = None,
        end_p_byte_error: float = 0.0,
        queue_capacity: int = 25,
        cs_capacity: int = 0,
        suppression_interval: float = 0.02,
        cm_threshold: int | None = None,
        rto_params: tuple[float, float, float] = (2.0, 0.2, 60.0),
        checks: InvariantChecker | None = None,
    ):
        if n < 2:
            raise ValueError("a chain needs at least 2 nodes")
        self.sim = sim
        base = link or WiredLink()
        initial, lo, hi = rto_params
        estimator_factory = lambda: RttEstimator(initial, lo, hi)
        self.nodes: list[WiredNode] = []
        for i in range(n):
            node = WiredNode(sim, i, cm_threshold)
            node.forwarder = Forwarder(
                sim, i, node,
                cs_capacity=cs_capacity,
                suppression_interval=suppression_interval,
                estimator_factory=estimator_factory,
                checks=checks,
            )
            node.forwarder.local_sink = node.deliver_local
            self.nodes.append(node)
        self.links: list[WiredLink] = []
        middle = (n - 1) // 2
        for i in range(n - 1):
            params = base
            if bottleneck and i == middle:
                params = bottleneck_link or WiredLink(bitrate=1e6, prop_delay=10e-3)
            if end_p_byte_error > 0.0 and (i == 0 or i == n - 2):
                params = WiredLink(params.bitrate, params.prop_delay, end_p_byte_error)
            self.links.append(params)
            self._connect(i, i + 1, params, queue_capacity)

    def _connect(self, a: int, b: int, link: WiredLink, capacity: int) -> None:
        node_a, node_b = self.nodes[a], self.nodes[b]
        node_a.ports[b] = WiredPort(self.sim, link, a, b, node_b.on_frame, capacity)
        node_b.ports[a] = WiredPort(self.sim, link, b, a, node_a.on_frame, capacity)

    def add_consumer(self, node_id: int, config: ConsumerConfig,
                     trace: Callable | None = None) -> Consumer:
        node = self.nodes[node_id]
        send_fn = lambda interest: node.forwarder.on_interest(LOCAL, interest)
        consumer = Consumer(
            self.sim, node_id, config, send_fn,
            self.sim.stream(f"app.{node_id}"), trace=trace, checks=None,
        )
        consumer.loss_hook = lambda: node.forwarder.invalidate_prefix(config.prefix)
        node.consumers.append(consumer)
        node.forwarder.register_consumer_prefix(config.prefix)
        return consumer

    def add_producer(self, node_id: int, prefix: Name, payload_size: int) -> Producer:
        producer = Producer(prefix, payload_size)
        self.nodes[node_id].forwarder.attach_producer(producer)
        return producer

    def total_queue_drops(self) -> int:
        return sum(
            port.stats.queue_drops for node in self.nodes for port in node.ports.values()
        )
