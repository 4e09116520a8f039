"""namecast: a deterministic discrete-event simulator for named-data transport
over wireless ad-hoc and wired linear networks.

The package couples an AIMD consumer transport (conservative window
adaptation, hop-count window limiting, dynamic Interest lifetime) with a
discovery-based forwarding plane (content store, pending-interest table,
RTO-expired FIB) on top of a simplified CSMA link model, plus an experiment
harness that runs seeded scenario batches and emits CSV metrics.
"""

from .engine import EventHandle, Simulator
from .invariants import InvariantChecker
from .packets import Data, Interest, Name, format_name, parse_name, seq_name, seq_of
from .phymac import BROADCAST, Frame, LOCAL, MacParams, Medium, Radio, WiredLink
from .forwarding import ContentStore, FibEntry, Forwarder, PitEntry, mark_congestion
from .topology import (
    Arena,
    NodeKinematics,
    RandomWalk,
    grid_topology,
    linear_topology,
    mobility_step,
    neighbors,
)
from .transport import (
    CongestionState,
    Consumer,
    ConsumerConfig,
    Producer,
    RttEstimator,
    apply_cwl,
    cwl_from_hops,
    interest_lifetime,
    timeout_deadline,
)
from .network import WiredChain, WirelessNetwork
from .experiments import (
    ConfigError,
    MetricsRecord,
    ScenarioConfig,
    build_traffic,
    emit_csv,
    parse_config,
    emit_config,
    run_experiment,
    run_single,
    summarize,
)
from .scenarios import fig4_scenario, fig5_scenario, scripted_scenarios

__all__ = [
    "Arena",
    "BROADCAST",
    "CongestionState",
    "ConfigError",
    "Consumer",
    "ConsumerConfig",
    "ContentStore",
    "Data",
    "EventHandle",
    "FibEntry",
    "Forwarder",
    "Frame",
    "Interest",
    "InvariantChecker",
    "LOCAL",
    "MacParams",
    "Medium",
    "MetricsRecord",
    "Name",
    "NodeKinematics",
    "PitEntry",
    "Producer",
    "Radio",
    "RandomWalk",
    "RttEstimator",
    "ScenarioConfig",
    "Simulator",
    "WiredChain",
    "WiredLink",
    "WirelessNetwork",
    "apply_cwl",
    "build_traffic",
    "cwl_from_hops",
    "emit_config",
    "emit_csv",
    "fig4_scenario",
    "fig5_scenario",
    "format_name",
    "grid_topology",
    "interest_lifetime",
    "linear_topology",
    "mark_congestion",
    "mobility_step",
    "neighbors",
    "parse_config",
    "parse_name",
    "run_experiment",
    "run_single",
    "scripted_scenarios",
    "seq_name",
    "seq_of",
    "summarize",
    "timeout_deadline",
]

__version__ = "0.1.0"
