"""Scripted deterministic micro-topologies for mechanism-level checks.

Two scenarios are built here:

* an aggregation-on-retransmission scenario: a consumer floods an Interest
  through two relays toward a data node, the first wave is destroyed at the
  data node by a hidden jammer, and the application retransmits.  With a fixed
  lifetime the relays' stale PIT entries aggregate the retransmission and the
  join node ends up broadcasting the returning data; with an RTO-based
  lifetime and a delayed timeout check the stale entries expire first and the
  data comes back over a single unicast chain.

* a cache-redundancy scenario: one consumer with two disjoint paths to two
  data nodes serving the same prefix; the discovery flood returns data over
  both paths, so the consumer sees redundant copies.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import Simulator
from .packets import Data, Interest, Name, is_prefix, parse_name
from .phymac import LOCAL, MacParams
from .topology import Arena
from .network import WirelessNetwork
from .transport import ConsumerConfig

# Seed for which the relay winning the first contention differs from the
# relay winning the second, reproducing the two-downstream aggregation.
DEFAULT_RTX_SEED = 2


class OneShotRequester:
    """Scripted application: sends an Interest for one name at fixed times,
    each with a fresh nonce, and counts the copies of data it receives."""

    def __init__(self, sim: Simulator, network: WirelessNetwork, node_id: int,
                 name: Name, sends: list[tuple[float, float]]):
        self.sim = sim
        self.network = network
        self.node_id = node_id
        self.name = name
        self.received = 0
        self.duplicates = 0
        self._rand = sim.stream(f"app.{node_id}")
        node = network.nodes[node_id]
        node.consumers.append(self)
        node.forwarder.register_consumer_prefix(name)
        for at, lifetime in sends:
            sim.schedule(at, self._send, lifetime)

    def _send(self, lifetime: float) -> None:
        interest = Interest(self.name, self._rand.getrandbits(32), lifetime)
        self.network.nodes[self.node_id].forwarder.on_interest(LOCAL, interest)

    def on_data(self, data: Data) -> None:
        if data.name != self.name:
            return
        if self.received:
            self.duplicates += 1
        else:
            self.received += 1


@dataclass
class RtxAggregationResult:
    join_peak_faces: int        # most downstream faces the join node held
    data_broadcasts: int        # data-broadcast events across the network
    consumer_received: int
    consumer_duplicates: int
    redundant_at_consumer: int


def fig4_scenario(dil: bool, seed: int = DEFAULT_RTX_SEED,
                  duration: float = 8.0) -> RtxAggregationResult:
    """Aggregation-on-retransmission mechanism. Node layout (node, role):
    0 consumer, 1 and 2 relays in mutual range, 3 join node, 4 data node,
    5 hidden jammer reaching only the data node."""
    sim = Simulator(seed)
    positions = [
        (0.0, 50.0),     # consumer
        (100.0, 80.0),   # relay A
        (100.0, 20.0),   # relay B
        (200.0, 50.0),   # join
        (320.0, 50.0),   # data node
        (440.0, 50.0),   # jammer (hidden from the join node)
    ]
    arena = Arena(width=500.0, height=100.0, tx_radius=125.0)
    net = WirelessNetwork(sim, positions, arena, mac=MacParams(), cs_capacity=0)
    name = parse_name("/a/img.png")
    net.add_producer(4, ("a",), payload_size=512)

    peak = {"faces": 1}

    def observe(entry_name, entry):
        if entry_name == name:
            peak["faces"] = max(peak["faces"], len(entry.downstreams))

    net.nodes[3].forwarder.pit_observer = observe

    # first wave fails at the data node under a 0.95 s jam; the application
    # retransmits at its timeout check
    initial_rto = 2.0
    if dil:
        lifetime = initial_rto                 # lifetime follows the RTO
        retx_at = 0.05 + initial_rto * 2.0     # timeout checked at RTO * gamma
    else:
        lifetime = 2.0                         # fixed default lifetime
        retx_at = 0.05 + 1.0                   # scripted retransmission at 1 s
    app = OneShotRequester(sim, net, 0, name,
                           sends=[(0.05, lifetime), (retx_at, lifetime)])
    net.inject_noise(5, at=0.0, airtime=0.95)

    sim.run_until(duration)
    return RtxAggregationResult(
        join_peak_faces=peak["faces"],
        data_broadcasts=net.total_forwarder("data_broadcasts"),
        consumer_received=app.received,
        consumer_duplicates=app.duplicates,
        redundant_at_consumer=net.nodes[0].forwarder.stats.redundant_local_data,
    )


@dataclass
class CacheRedundancyResult:
    consumer_duplicates: int    # app duplicates plus unsolicited data at the consumer
    cache_hits: int
    received: int


# Seed where both first-wave copies survive the hidden-terminal contention,
# so the redundant second arrival is observable at the consumer.
DEFAULT_CACHE_SEED = 0


def fig5_scenario(cs_capacity: int, seed: int = DEFAULT_CACHE_SEED,
                  duration: float = 6.0) -> CacheRedundancyResult:
    """Two node-disjoint live paths from one consumer to two data nodes
    serving the same prefix: 4 -- 3 -- 0(consumer) -- 1 -- 2, producers at
    2 and 4.  The relays hear each other, so both returning copies reach the
    consumer and the second registers as redundant."""
    sim = Simulator(seed)
    positions = [
        (200.0, 50.0),   # consumer
        (260.0, 50.0),   # relay right
        (380.0, 50.0),   # data node right
        (140.0, 50.0),   # relay left
        (20.0, 50.0),    # data node left
    ]
    arena = Arena(width=450.0, height=100.0, tx_radius=125.0)
    net = WirelessNetwork(sim, positions, arena, mac=MacParams(),
                          cs_capacity=cs_capacity)
    prefix = ("m",)
    net.add_producer(2, prefix, payload_size=512)
    net.add_producer(4, prefix, payload_size=512)
    consumer = net.add_consumer(0, ConsumerConfig(prefix=prefix))
    consumer.start(0.05)

    sim.run_until(duration)
    extra = net.nodes[0].forwarder.stats.redundant_local_data
    return CacheRedundancyResult(
        consumer_duplicates=consumer.stats.duplicates + extra,
        cache_hits=net.total_forwarder("cache_hits"),
        received=consumer.stats.received,
    )


def scripted_scenarios() -> dict:
    """Named deterministic micro-topologies exposed for tests and demos."""
    return {
        "rtx-aggregation": fig4_scenario,
        "cache-redundancy": fig5_scenario,
    }
