"""Scenario construction, metrics collection, multi-seed orchestration,
summaries, and CSV emission.

Scenario files are flat ``key = value`` text with strict validation: every
key must be known and every value inside its documented range.  A parsed
config echoes back byte-identically through emit_config, and a (config, seed)
pair always reproduces the same metrics row.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, fields, replace
from random import Random

from .engine import Simulator
from .invariants import InvariantChecker
from .packets import Name, parse_name
from .phymac import MacParams, WiredLink
from .topology import Arena, grid_topology, linear_topology
from .network import WiredChain, WirelessNetwork
from .transport import ConsumerConfig

TOPOLOGIES = ("grid", "linear-wireless", "linear-wired")
TRAFFIC_MODES = ("one-to-one", "many-to-one", "many-to-many")

WIRELESS_PAYLOAD = 512
WIRED_PAYLOAD = 1460


class ConfigError(ValueError):
    """Raised for unknown keys, malformed values, or out-of-range settings."""


@dataclass
class ScenarioConfig:
    scenario: str = "grid-1-1"
    topology: str = "grid"
    nodes: int = 50
    speed: float = 0.0
    duration: float = 100.0
    traffic: str = "one-to-one"
    consumers: int = 10
    producers: int = 10
    cs_capacity: int = 200
    cwl_enabled: bool = True
    dil_enabled: bool = True
    gamma: float = 2.0
    payload: int = 0              # 0 = default for the topology (512 / 1460)
    bottleneck: bool = False
    p_byte_error: float = 0.0
    p_frame_error: float = 0.0
    seed: int = 1
    runs: int = 10
    spacing: float = 100.0
    tx_radius: float = 125.0
    arena_width: float = 1500.0
    arena_height: float = 1000.0
    grid_jitter: float = 0.0
    bitrate: float = 1e6
    queue_capacity: int = 25
    slot_time: float = 20e-6
    backoff_slots: int = 64
    mac_retries: int = 3
    suppression_interval: float = 0.02
    cm_threshold: int = 0         # 0 = half queue capacity
    initial_rto: float = 2.0
    min_rto: float = 0.2
    max_rto: float = 60.0

    def __post_init__(self):
        if self.payload == 0:
            self.payload = WIRED_PAYLOAD if self.topology == "linear-wired" else WIRELESS_PAYLOAD
        self.validate()

    def validate(self) -> None:
        def require(cond: bool, message: str) -> None:
            if not cond:
                raise ConfigError(message)

        require(self.topology in TOPOLOGIES, f"unknown topology {self.topology!r}")
        require(self.traffic in TRAFFIC_MODES, f"unknown traffic mode {self.traffic!r}")
        require(self.nodes >= 2, "nodes must be >= 2")
        require(0.0 <= self.speed <= 8.0, "speed must be within [0, 8] m/s")
        require(self.duration > 0, "duration must be positive")
        require(self.runs >= 1, "runs must be >= 1")
        require(self.consumers >= 1 and self.producers >= 1,
                "need at least one consumer and one producer")
        require(self.consumers + self.producers <= self.nodes,
                "consumers + producers exceed the node population")
        require(self.cs_capacity >= 0, "cs_capacity must be >= 0")
        require(self.payload > 0, "payload must be positive")
        require(0.0 <= self.p_byte_error <= 1.0, "p_byte_error must be within [0, 1]")
        require(0.0 <= self.p_frame_error <= 1.0, "p_frame_error must be within [0, 1]")
        if self.dil_enabled:
            require(self.gamma > 1.0, "gamma must exceed 1.0 when dil_enabled")
        if self.traffic == "one-to-one":
            require(self.producers == self.consumers,
                    "one-to-one needs producers == consumers")
        elif self.traffic == "many-to-one":
            require(self.consumers % self.producers == 0,
                    "many-to-one needs consumers divisible by producers")
        else:
            require(self.producers == self.consumers,
                    "many-to-many needs producers == consumers")
            require(self.consumers % 2 == 0,
                    "many-to-many splits into two prefix groups; use even counts")
        if self.topology.startswith("linear"):
            require(self.speed == 0.0, "linear topologies are static")
            require(self.traffic == "one-to-one", "linear topologies are one-to-one")
            require(self.consumers == 1 and self.producers == 1,
                    "linear topologies use a single consumer-producer pair")
            require(2 <= self.nodes, "chain length must be >= 2")
        if self.topology == "linear-wired":
            require(self.p_frame_error == 0.0, "p_frame_error applies to wireless only")
        else:
            require(self.p_byte_error == 0.0, "p_byte_error applies to wired links only")
            require(not self.bottleneck, "bottleneck applies to wired chains only")
        require(self.spacing > 0 and self.tx_radius > 0, "geometry must be positive")
        require(self.arena_width > 0 and self.arena_height > 0, "arena must be positive")
        require(self.grid_jitter >= 0, "grid_jitter must be >= 0")
        require(self.bitrate > 0, "bitrate must be positive")
        require(self.queue_capacity >= 1, "queue_capacity must be >= 1")
        require(self.slot_time > 0 and self.backoff_slots >= 1, "bad backoff window")
        require(self.mac_retries >= 0, "mac_retries must be >= 0")
        require(self.suppression_interval >= 0, "suppression_interval must be >= 0")
        require(self.cm_threshold >= 0, "cm_threshold must be >= 0")
        require(0 < self.min_rto <= self.initial_rto <= self.max_rto,
                "need 0 < min_rto <= initial_rto <= max_rto")


_BOOL_WORDS = {"true": True, "false": False, "1": True, "0": False,
               "yes": True, "no": False}


def _parse_value(key: str, text: str, kind: type):
    if kind is bool:
        word = text.lower()
        if word not in _BOOL_WORDS:
            raise ConfigError(f"{key}: expected a boolean, got {text!r}")
        return _BOOL_WORDS[word]
    try:
        return kind(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def parse_config(text: str) -> ScenarioConfig:
    """Parse flat key = value scenario text; unknown keys are rejected."""
    kinds = {f.name: f.type for f in fields(ScenarioConfig)}
    types = {"str": str, "int": int, "float": float, "bool": bool}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in kinds:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, value, types[kinds[key]])
    return ScenarioConfig(**values)


def emit_config(config: ScenarioConfig) -> str:
    """Canonical text form; parse_config(emit_config(c)) == c."""
    lines = []
    for f in fields(ScenarioConfig):
        value = getattr(config, f.name)
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


@dataclass
class TrafficPlan:
    consumers: list[tuple[int, Name]]
    producers: list[tuple[int, Name]]


def build_traffic(config: ScenarioConfig, rand: Random) -> TrafficPlan:
    """Assign consumer/producer roles to nodes.

    one-to-one: a unique prefix per pair.  many-to-one: one prefix per
    producer, consumers split evenly across them, all asking the same
    sequence set.  many-to-many: two prefix groups, each with half the
    producers (any of which may answer) and half the consumers.
    """
    n_endpoints = config.consumers + config.producers
    if n_endpoints > config.nodes:
        raise ConfigError("consumers + producers exceed the node population")
    if config.topology.startswith("linear"):
        ids = [0, config.nodes - 1]
    else:
        ids = rand.sample(range(config.nodes), n_endpoints)
    consumer_ids = ids[: config.consumers]
    producer_ids = ids[config.consumers:]

    consumers: list[tuple[int, Name]] = []
    producers: list[tuple[int, Name]] = []
    if config.traffic == "one-to-one":
        for i, (c, p) in enumerate(zip(consumer_ids, producer_ids)):
            prefix = (f"p{i}",)
            consumers.append((c, prefix))
            producers.append((p, prefix))
    elif config.traffic == "many-to-one":
        for j, p in enumerate(producer_ids):
            producers.append((p, (f"g{j}",)))
        for i, c in enumerate(consumer_ids):
            consumers.append((c, (f"g{i % config.producers}",)))
    else:  # many-to-many: two groups sharing a prefix each
        for j, p in enumerate(producer_ids):
            producers.append((p, (f"g{j % 2}",)))
        for i, c in enumerate(consumer_ids):
            consumers.append((c, (f"g{i % 2}",)))
    return TrafficPlan(consumers=consumers, producers=producers)


def parse_placement(text: str, config: ScenarioConfig) -> TrafficPlan:
    """Pinned placement: lines of 'consumer <node> <prefix>' or
    'producer <node> <prefix>'."""
    consumers: list[tuple[int, Name]] = []
    producers: list[tuple[int, Name]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] not in ("consumer", "producer"):
            raise ConfigError(f"placement line {lineno}: expected "
                              f"'consumer|producer <node> <prefix>'")
        role, node_text, prefix_text = parts
        try:
            node = int(node_text)
        except ValueError:
            raise ConfigError(f"placement line {lineno}: bad node id") from None
        if not 0 <= node < config.nodes:
            raise ConfigError(f"placement line {lineno}: node {node} out of range")
        prefix = parse_name(prefix_text)
        (consumers if role == "consumer" else producers).append((node, prefix))
    if len(consumers) != config.consumers or len(producers) != config.producers:
        raise ConfigError("placement counts disagree with the scenario config")
    return TrafficPlan(consumers=consumers, producers=producers)


@dataclass
class MetricsRecord:
    scenario: str
    speed: float
    cs: int
    cwl: int
    dil: int
    seed: int
    throughput_mbps: float
    mean_cwnd: float
    mean_rtt_ms: float
    data_broadcasts: int
    mean_hop_count: float
    cache_hits: int
    collisions: int
    queue_drops: int
    pit_aggregations: int
    duplicates: int


METRIC_COLUMNS = [f.name for f in fields(MetricsRecord)][6:]


def _grid_shape(nodes: int) -> tuple[int, int]:
    cols = max(1, math.ceil(math.sqrt(2 * nodes)))
    rows = math.ceil(nodes / cols)
    return rows, cols


def _positions(config: ScenarioConfig, sim: Simulator) -> list[tuple[float, float]]:
    if config.topology == "grid":
        rows, cols = _grid_shape(config.nodes)
        positions = grid_topology(rows, cols, config.spacing)[: config.nodes]
        if config.grid_jitter > 0:
            rand = sim.stream("placement.jitter")
            jitter = config.grid_jitter
            positions = [
                (x + rand.uniform(-jitter, jitter), y + rand.uniform(-jitter, jitter))
                for x, y in positions
            ]
        return positions
    return linear_topology(config.nodes, config.spacing)


def run_single(
    config: ScenarioConfig,
    seed: int,
    trace: callable = None,
    checks: InvariantChecker | None = None,
    placement: TrafficPlan = None,
) -> MetricsRecord:
    """One simulation at one seed; deterministic for a given (config, seed)."""
    sim = Simulator(seed)
    plan = placement if placement is not None else build_traffic(config, sim.stream("placement"))
    cm_threshold = config.cm_threshold if config.cm_threshold > 0 else None
    rto_params = (config.initial_rto, config.min_rto, config.max_rto)

    if config.topology == "linear-wired":
        net = WiredChain(
            sim,
            config.nodes,
            link=WiredLink(bitrate=5e6, prop_delay=1e-3),
            bottleneck=config.bottleneck,
            end_p_byte_error=config.p_byte_error,
            queue_capacity=config.queue_capacity,
            cs_capacity=config.cs_capacity,
            suppression_interval=config.suppression_interval,
            cm_threshold=cm_threshold,
            rto_params=rto_params,
            checks=checks,
        )
        collisions = 0
    else:
        positions = _positions(config, sim)
        arena = Arena(
            width=max(config.arena_width, max(p[0] for p in positions) + 1.0),
            height=max(config.arena_height, max(p[1] for p in positions) + 1.0),
            tx_radius=config.tx_radius,
        )
        mac = MacParams(
            bitrate=config.bitrate,
            queue_capacity=config.queue_capacity,
            slot_time=config.slot_time,
            backoff_slots=config.backoff_slots,
            retries=config.mac_retries,
            p_frame_error=config.p_frame_error,
        )
        net = WirelessNetwork(
            sim,
            positions,
            arena,
            mac=mac,
            speed=config.speed,
            cs_capacity=config.cs_capacity,
            suppression_interval=config.suppression_interval,
            cm_threshold=cm_threshold,
            rto_params=rto_params,
            checks=checks,
        )

    for node_id, prefix in plan.producers:
        net.add_producer(node_id, prefix, config.payload)
    consumer_config_base = dict(
        cwl_enabled=config.cwl_enabled,
        dil_enabled=config.dil_enabled,
        gamma=config.gamma,
        initial_rto=config.initial_rto,
        min_rto=config.min_rto,
        max_rto=config.max_rto,
    )
    start_rand = sim.stream("app.start")
    apps = []
    for node_id, prefix in plan.consumers:
        consumer = net.add_consumer(
            node_id, ConsumerConfig(prefix=prefix, **consumer_config_base), trace=trace
        )
        consumer.start(start_rand.uniform(0.0, 0.05))
        apps.append(consumer)

    sim.run_until(config.duration)
    end_us = sim.now_us

    unique_bytes = 0
    rtt_sum, rtt_n = 0.0, 0
    hop_sum, hop_n = 0, 0
    duplicates = 0
    cwnd_means = []
    for consumer in apps:
        consumer.finalize(end_us)
        s = consumer.stats
        unique_bytes += s.unique_bytes
        rtt_sum += s.rtt_sum
        rtt_n += s.rtt_samples
        hop_sum += s.hop_sum
        hop_n += s.hop_samples
        duplicates += s.duplicates
        span = end_us - consumer.begin_us
        cwnd_means.append(s.cwnd_integral_us / span if span > 0 else consumer.window.cwnd)
    consumer_nodes = {node_id for node_id, _ in plan.consumers}
    duplicates += sum(
        net.nodes[i].forwarder.stats.redundant_local_data for i in consumer_nodes
    )

    if config.topology != "linear-wired":
        collisions = net.medium.stats.collided

    return MetricsRecord(
        scenario=config.scenario,
        speed=config.speed,
        cs=config.cs_capacity,
        cwl=int(config.cwl_enabled),
        dil=int(config.dil_enabled),
        seed=seed,
        throughput_mbps=unique_bytes * 8.0 / config.duration / 1e6,
        mean_cwnd=statistics.fmean(cwnd_means) if cwnd_means else 0.0,
        mean_rtt_ms=(rtt_sum / rtt_n * 1000.0) if rtt_n else 0.0,
        data_broadcasts=sum(n.forwarder.stats.data_broadcasts for n in net.nodes),
        mean_hop_count=(hop_sum / hop_n) if hop_n else 0.0,
        cache_hits=sum(n.forwarder.stats.cache_hits for n in net.nodes),
        collisions=collisions,
        queue_drops=net.total_queue_drops(),
        pit_aggregations=sum(n.forwarder.stats.aggregations for n in net.nodes),
        duplicates=duplicates,
    )


def run_experiment(
    config: ScenarioConfig,
    placement: TrafficPlan = None,
    trace_stem: str = None,
) -> list[MetricsRecord]:
    """Run `config.runs` independent simulations with seeds seed, seed+1, ...

    With `trace_stem`, each run writes `<stem>.trace-<seed>.csv` holding the
    consumer time series (time, consumer, cwnd, rtt_ms, event).
    """
    config.validate()
    records = []
    for i in range(config.runs):
        seed = config.seed + i
        rows: list[str] = []
        trace = None
        if trace_stem is not None:
            def trace(t, node, cwnd, rtt_ms, event, _rows=rows):
                rtt_text = f"{rtt_ms:.6f}" if rtt_ms is not None else ""
                _rows.append(f"{t:.6f},{node},{cwnd:.6f},{rtt_text},{event}")
        records.append(run_single(config, seed, trace=trace, placement=placement))
        if trace_stem is not None:
            path = f"{trace_stem}.trace-{seed}.csv"
            try:
                with open(path, "w") as fh:
                    fh.write("time,consumer,cwnd,rtt_ms,event\n")
                    fh.write("\n".join(rows))
                    if rows:
                        fh.write("\n")
            except OSError as exc:
                raise OSError(f"cannot write trace file {path}: {exc}") from exc
    return records


def summarize(records: list[MetricsRecord]) -> dict[str, tuple[float, float]]:
    """Mean and sample standard deviation per metric column."""
    if not records:
        raise ValueError("summarize needs at least one record")
    out: dict[str, tuple[float, float]] = {}
    for column in METRIC_COLUMNS:
        values = [float(getattr(r, column)) for r in records]
        mean = statistics.fmean(values)
        std = statistics.stdev(values) if len(values) > 1 else 0.0
        out[column] = (mean, std)
    return out


def emit_csv(records: list[MetricsRecord], path: str) -> None:
    """Write one row per run with a fixed-precision, byte-stable serialization."""
    columns = [f.name for f in fields(MetricsRecord)]
    lines = [",".join(columns)]
    for record in records:
        cells = []
        for column in columns:
            value = getattr(record, column)
            if isinstance(value, float):
                cells.append(f"{value:.6f}")
            else:
                cells.append(str(value))
        lines.append(",".join(cells))
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV file {path}: {exc}") from exc
