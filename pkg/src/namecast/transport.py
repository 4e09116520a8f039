"""Consumer and producer applications: RTO estimation, AIMD window control
with conservative window adaptation, hop-count window limiting, dynamic
Interest lifetime, pipelining with out-of-order acceptance, and retransmission.

The window grows by one per data packet in slow start and by 1/cwnd in
congestion avoidance; an admitted congestion event halves ssthresh and the
window never drops below 1.  Timeouts and congestion marks share one
conservative gate: at most one decrease per window of outstanding Interests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from random import Random
from typing import Callable

from .engine import MICROS, Simulator
from .invariants import InvariantChecker
from .packets import Data, Interest, Name, is_prefix, seq_name, seq_of


class RttEstimator:
    """Smoothed RTT / RTO state following the standard TCP estimator.

    First sample: srtt = R, rttvar = R/2.  Then rttvar <- 3/4 rttvar +
    1/4 |srtt - R| and srtt <- 7/8 srtt + 1/8 R, with rto = srtt + 4 rttvar
    clamped into [min_rto, max_rto].  Before any sample rto equals initial_rto.
    """

    def __init__(self, initial_rto: float = 2.0, min_rto: float = 0.2,
                 max_rto: float = 60.0):
        self.initial_rto = initial_rto
        self.min_rto = min_rto
        self.max_rto = max_rto
        self.srtt: float | None = None
        self.rttvar = 0.0
        self.rto = initial_rto

    def on_sample(self, rtt_sample: float) -> None:
        if rtt_sample <= 0:
            raise ValueError(f"rtt sample must be positive, got {rtt_sample}")
        if self.srtt is None:
            self.srtt = rtt_sample
            self.rttvar = rtt_sample / 2.0
        else:
            self.rttvar = 0.75 * self.rttvar + 0.25 * abs(self.srtt - rtt_sample)
            self.srtt = 0.875 * self.srtt + 0.125 * rtt_sample
        self.rto = min(max(self.srtt + 4.0 * self.rttvar, self.min_rto), self.max_rto)

    def backoff(self) -> None:
        """Exponential backoff after a timeout, capped at max_rto."""
        self.rto = min(2.0 * self.rto, self.max_rto)


class CongestionState:
    """AIMD window: cwnd (real-valued, >= 1), ssthresh, and the CWA recovery point."""

    def __init__(self, beta: float = 0.5):
        self.cwnd = 1.0
        self.ssthresh = math.inf
        self.beta = beta
        self.recovery_seq = 0

    def increase(self) -> None:
        if self.cwnd < self.ssthresh:
            self.cwnd += 1.0
        else:
            self.cwnd += 1.0 / self.cwnd

    def decrease(self) -> None:
        self.ssthresh = self.cwnd * self.beta
        self.cwnd = max(self.ssthresh, 1.0)

    def admit(self, seq: int, highest_sent: int) -> bool:
        """Conservative window adaptation: admit one decrease per window of
        outstanding Interests.  Admitting moves the recovery point to the
        highest sequence sent so far."""
        if seq > self.recovery_seq:
            self.recovery_seq = highest_sent
            return True
        return False


CWL_TABLE = ((2, 2), (4, 1), (6, 2), (10, 3), (13, 4), (15, 5))


def cwl_from_hops(hop_count: int) -> int:
    """Window limit from the data packet's hop count (round-trip hop count / 2)."""
    if hop_count < 1:
        hop_count = 1
    for bound, limit in CWL_TABLE:
        if hop_count <= bound:
            return limit
    return math.ceil(hop_count / 3)


def apply_cwl(state: CongestionState, hop_count: int, enabled: bool = True) -> None:
    if enabled:
        state.cwnd = min(state.cwnd, float(cwl_from_hops(hop_count)))


@dataclass
class ConsumerConfig:
    prefix: Name
    cwl_enabled: bool = False
    dil_enabled: bool = False
    gamma: float = 2.0
    fixed_lifetime: float = 2.0
    initial_rto: float = 2.0
    min_rto: float = 0.2
    max_rto: float = 60.0
    payload_hint: int = 0    # unused by the consumer; producers size the data

    def __post_init__(self):
        if self.dil_enabled and self.gamma <= 1.0:
            raise ValueError("gamma must exceed 1.0 when dynamic lifetime is enabled")


def interest_lifetime(config: ConsumerConfig, est: RttEstimator) -> float:
    """Lifetime carried by outgoing Interests: the current RTO under dynamic
    lifetime, otherwise the fixed default."""
    return est.rto if config.dil_enabled else config.fixed_lifetime


def timeout_deadline(config: ConsumerConfig, est: RttEstimator, sent_at: float) -> float:
    """Application timeout check: RTO * gamma under dynamic lifetime (giving
    in-network entries a chance to expire first), plain RTO otherwise."""
    if config.dil_enabled:
        return sent_at + est.rto * config.gamma
    return sent_at + est.rto


@dataclass
class OutstandingInterest:
    seq: int
    sent_at: float
    nonce: int
    is_retransmission: bool
    deadline: float
    timer: object = None
    retries: int = 0


@dataclass
class ConsumerStats:
    received: int = 0
    unique_bytes: int = 0
    duplicates: int = 0
    timeouts: int = 0
    retransmissions: int = 0
    decreases: int = 0
    cm_marks: int = 0
    rtt_sum: float = 0.0
    rtt_samples: int = 0
    hop_sum: int = 0
    hop_samples: int = 0
    cwnd_integral_us: float = 0.0
    _last_cwnd_us: int = 0

    def mean_rtt(self) -> float:
        return self.rtt_sum / self.rtt_samples if self.rtt_samples else 0.0

    def mean_hops(self) -> float:
        return self.hop_sum / self.hop_samples if self.hop_samples else 0.0


class Consumer:
    """Adaptive-rate application requesting an unbounded ascending sequence.

    Keeps floor(cwnd) Interests outstanding, accepts data out of order and
    counts its bytes immediately, retransmits timed-out sequences with fresh
    nonces, and samples RTT only from never-retransmitted sequences.
    """

    def __init__(
        self,
        sim: Simulator,
        node_id: int,
        config: ConsumerConfig,
        send_fn: Callable[[Interest], None],
        rand: Random,
        trace: Callable | None = None,
        checks: InvariantChecker | None = None,
    ):
        self.sim = sim
        self.node_id = node_id
        self.config = config
        self.send_fn = send_fn
        self.rand = rand
        self.trace = trace
        self.checks = checks
        self.est = RttEstimator(config.initial_rto, config.min_rto, config.max_rto)
        self.window = CongestionState()
        self.outstanding: dict[int, OutstandingInterest] = {}
        self.satisfied: set[int] = set()
        self.next_seq = 1
        self.highest_sent = 0
        self.stats = ConsumerStats()
        self.started = False
        self.begin_us = 0
        self.loss_hook: Callable[[], None] | None = None

    # -- lifecycle -------------------------------------------------------------

    def start(self, at: float) -> None:
        self.sim.schedule(at, self._begin)

    def _begin(self) -> None:
        self.started = True
        self.begin_us = self.sim.now_us
        self.stats._last_cwnd_us = self.sim.now_us
        self._fill_window()

    def finalize(self, end_us: int) -> None:
        """Close the cwnd time-integral at the end of the run."""
        self._account_cwnd(end_us)

    def _account_cwnd(self, now_us: int) -> None:
        s = self.stats
        s.cwnd_integral_us += self.window.cwnd * (now_us - s._last_cwnd_us)
        s._last_cwnd_us = now_us

    def mean_cwnd(self, duration_us: int) -> float:
        if duration_us <= 0:
            return self.window.cwnd
        return self.stats.cwnd_integral_us / duration_us

    # -- sending ---------------------------------------------------------------

    def _fill_window(self) -> None:
        while len(self.outstanding) < int(self.window.cwnd):
            self._send(self.next_seq, retransmission=False)
            self.next_seq += 1

    def _send(self, seq: int, retransmission: bool) -> None:
        lifetime = interest_lifetime(self.config, self.est)
        nonce = self.rand.getrandbits(32)
        interest = Interest(seq_name(self.config.prefix, seq), nonce, lifetime)
        deadline = timeout_deadline(self.config, self.est, self.sim.now)
        prev = self.outstanding.get(seq)
        record = OutstandingInterest(
            seq=seq,
            sent_at=self.sim.now,
            nonce=nonce,
            is_retransmission=retransmission,
            deadline=deadline,
            retries=prev.retries + 1 if retransmission and prev else 0,
        )
        record.timer = self.sim.schedule(deadline, self._on_timeout, seq)
        self.outstanding[seq] = record
        if not retransmission:
            self.highest_sent = max(self.highest_sent, seq)
        self.send_fn(interest)
        if self.trace:
            self.trace(self.sim.now, self.node_id, self.window.cwnd, None,
                       "retransmit" if retransmission else "send")

    # -- receiving ---------------------------------------------------------------

    def on_data(self, data: Data) -> None:
        if not is_prefix(self.config.prefix, data.name):
            return
        seq = seq_of(data.name)
        if seq is None:
            return
        if seq in self.satisfied:
            self.stats.duplicates += 1
            return
        record = self.outstanding.pop(seq, None)
        if record is None:
            # data for a sequence this application never has in flight
            self.stats.duplicates += 1
            return
        self.satisfied.add(seq)
        stats = self.stats
        stats.received += 1
        stats.unique_bytes += data.payload_size
        stats.hop_sum += data.hop_count
        stats.hop_samples += 1

        rtt_ms = None
        if not record.is_retransmission:
            sample = self.sim.now - record.sent_at
            if sample > 0:
                self.est.on_sample(sample)
                stats.rtt_sum += sample
                stats.rtt_samples += 1
                rtt_ms = sample * 1000.0
        if record.timer is not None:
            record.timer.cancel()

        self._account_cwnd(self.sim.now_us)
        self.window.increase()
        apply_cwl(self.window, data.hop_count, self.config.cwl_enabled)
        if data.cm_flag:
            stats.cm_marks += 1
            if self.window.admit(seq, self.highest_sent):
                self.window.decrease()
                stats.decreases += 1
        self._account_cwnd(self.sim.now_us)
        self._check_window(data.hop_count)

        if self.trace:
            self.trace(self.sim.now, self.node_id, self.window.cwnd, rtt_ms, "data")
        self._fill_window()

    def _on_timeout(self, seq: int) -> None:
        record = self.outstanding.get(seq)
        if seq in self.satisfied or record is None:
            return
        stats = self.stats
        stats.timeouts += 1
        self._account_cwnd(self.sim.now_us)
        admitted = self.window.admit(seq, self.highest_sent)
        if admitted:
            self.window.decrease()
            stats.decreases += 1
        self._account_cwnd(self.sim.now_us)
        # one backoff per window burst; repeated timeouts of the same sequence
        # keep backing off so a dead path still degrades exponentially
        if admitted or record.is_retransmission:
            self.est.backoff()
        if self.loss_hook is not None:
            self.loss_hook()
        stats.retransmissions += 1
        self._send(seq, retransmission=True)
        self._check_window(None)
        if self.trace:
            self.trace(self.sim.now, self.node_id, self.window.cwnd, None, "timeout")

    def _check_window(self, hop_count: int | None) -> None:
        if self.checks is None:
            return
        self.checks.check(self.window.cwnd >= 1.0,
                          f"consumer {self.node_id}: cwnd fell below 1")
        self.checks.check(
            self.est.min_rto <= self.est.rto <= self.est.max_rto,
            f"consumer {self.node_id}: rto out of clamp range",
        )
        if hop_count is not None and self.config.cwl_enabled:
            self.checks.check(
                self.window.cwnd <= cwl_from_hops(hop_count) + 1e-9,
                f"consumer {self.node_id}: cwnd exceeds hop-count limit",
            )
        sent = self.next_seq - 1
        self.checks.check(
            sent == len(self.satisfied) + len(self.outstanding),
            f"consumer {self.node_id}: outstanding-count conservation broken",
        )


class Producer:
    """Answers Interests under its prefix with fixed-size data packets."""

    def __init__(self, prefix: Name, payload_size: int):
        self.prefix = prefix
        self.payload_size = payload_size
        self.served = 0

    def on_interest(self, interest: Interest) -> Data | None:
        if not is_prefix(self.prefix, interest.name):
            return None
        self.served += 1
        return Data(interest.name, self.payload_size, hop_count=0)
