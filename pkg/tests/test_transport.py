import math
import random

import pytest

from namecast.engine import Simulator
from namecast.packets import Data, seq_name
from namecast.transport import (
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


class ReferenceEstimator:
    """Independently coded oracle for the standard RTO estimator."""

    def __init__(self, initial=2.0, lo=0.2, hi=60.0):
        self.lo, self.hi = lo, hi
        self.rto = initial
        self.srtt = None
        self.rttvar = None

    def sample(self, r):
        if self.srtt is None:
            self.srtt, self.rttvar = r, r / 2
        else:
            self.rttvar = (3 * self.rttvar + abs(self.srtt - r)) / 4
            self.srtt = (7 * self.srtt + r) / 8
        self.rto = self.srtt + 4 * self.rttvar
        if self.rto < self.lo:
            self.rto = self.lo
        if self.rto > self.hi:
            self.rto = self.hi


class TestRttEstimator:
    def test_first_sample(self):
        est = RttEstimator()
        est.on_sample(1.0)
        assert est.srtt == 1.0
        assert est.rttvar == 0.5
        assert est.rto == 3.0

    def test_second_identical_sample(self):
        est = RttEstimator()
        est.on_sample(1.0)
        est.on_sample(1.0)
        assert est.srtt == 1.0
        assert est.rttvar == 0.375
        assert est.rto == 2.5

    def test_min_rto_clamp(self):
        est = RttEstimator(min_rto=0.2)
        for _ in range(50):
            est.on_sample(0.01)
        assert est.rto == 0.2

    def test_rejects_nonpositive_samples(self):
        est = RttEstimator()
        with pytest.raises(ValueError):
            est.on_sample(0.0)
        with pytest.raises(ValueError):
            est.on_sample(-1.0)

    def test_backoff_doubles_and_caps(self):
        est = RttEstimator()
        est.rto = 3.0
        est.backoff()
        assert est.rto == 6.0
        est.rto = 60.0
        est.backoff()
        assert est.rto == 60.0
        est.rto = 2.0
        est.backoff()
        est.backoff()
        assert est.rto == 8.0

    def test_matches_reference_on_random_sequences(self):
        rng = random.Random(42)
        for _ in range(1000):
            est = RttEstimator()
            ref = ReferenceEstimator()
            for _ in range(rng.randrange(1, 30)):
                r = rng.uniform(0.001, 8.0)
                est.on_sample(r)
                ref.sample(r)
                assert abs(est.rto - ref.rto) <= 1e-9
                assert abs(est.srtt - ref.srtt) <= 1e-9


class TestWindow:
    def test_increase_slow_start(self):
        s = CongestionState()
        s.cwnd, s.ssthresh = 1.0, math.inf
        s.increase()
        assert s.cwnd == 2.0

    def test_increase_congestion_avoidance(self):
        s = CongestionState()
        s.cwnd, s.ssthresh = 4.0, 2.0
        s.increase()
        assert s.cwnd == 4.25

    def test_increase_at_threshold_uses_avoidance(self):
        s = CongestionState()
        s.cwnd, s.ssthresh = 2.0, 2.0
        s.increase()
        assert s.cwnd == 2.5

    def test_decrease_halves(self):
        s = CongestionState()
        s.cwnd = 10.0
        s.decrease()
        assert s.ssthresh == 5.0 and s.cwnd == 5.0

    def test_decrease_floors_at_one(self):
        s = CongestionState()
        s.cwnd = 1.0
        s.decrease()
        assert s.ssthresh == 0.5 and s.cwnd == 1.0

    def test_decrease_direct_substitution(self):
        s = CongestionState()
        s.cwnd = 3.0
        s.decrease()
        assert s.ssthresh == 1.5 and s.cwnd == 1.5

    def test_cwa_admission(self):
        s = CongestionState()
        assert s.admit(5, highest_sent=12) is True
        assert s.recovery_seq == 12
        assert s.admit(9, highest_sent=14) is False
        assert s.admit(13, highest_sent=20) is True
        assert s.recovery_seq == 20


class TestCwl:
    def test_table_values(self):
        expected = (2, 2, 1, 1, 2, 2, 3, 3, 3, 3, 4, 4, 4, 5, 5)
        assert tuple(cwl_from_hops(h) for h in range(1, 16)) == expected

    def test_extrapolation_beyond_table(self):
        assert cwl_from_hops(16) == 6
        assert cwl_from_hops(18) == 6
        assert cwl_from_hops(19) == 7

    def test_zero_hops_treated_as_one(self):
        assert cwl_from_hops(0) == 2

    def test_apply_clamps(self):
        s = CongestionState()
        s.cwnd = 4.25
        apply_cwl(s, 3, enabled=True)
        assert s.cwnd == 1.0

    def test_apply_no_clamp_when_larger(self):
        s = CongestionState()
        s.cwnd = 2.0
        apply_cwl(s, 12, enabled=True)
        assert s.cwnd == 2.0

    def test_apply_disabled_is_noop(self):
        s = CongestionState()
        s.cwnd = 50.0
        apply_cwl(s, 3, enabled=False)
        assert s.cwnd == 50.0


class TestLifetimeAndDeadline:
    def test_dynamic_lifetime_follows_rto(self):
        config = ConsumerConfig(prefix=("p",), dil_enabled=True)
        est = RttEstimator()
        est.rto = 1.4
        assert interest_lifetime(config, est) == 1.4

    def test_fixed_lifetime_default(self):
        config = ConsumerConfig(prefix=("p",), dil_enabled=False)
        est = RttEstimator()
        est.rto = 1.4
        assert interest_lifetime(config, est) == 2.0

    def test_dynamic_lifetime_before_samples_is_initial_rto(self):
        config = ConsumerConfig(prefix=("p",), dil_enabled=True)
        assert interest_lifetime(config, RttEstimator()) == 2.0

    def test_deadline_with_gamma(self):
        config = ConsumerConfig(prefix=("p",), dil_enabled=True, gamma=2.0)
        est = RttEstimator()
        est.rto = 1.0
        assert timeout_deadline(config, est, sent_at=10.0) == 12.0

    def test_deadline_plain_rto_without_dil(self):
        config = ConsumerConfig(prefix=("p",), dil_enabled=False)
        est = RttEstimator()
        est.rto = 1.0
        assert timeout_deadline(config, est, sent_at=10.0) == 11.0

    def test_deadline_other_gamma(self):
        config = ConsumerConfig(prefix=("p",), dil_enabled=True, gamma=1.5)
        est = RttEstimator()
        est.rto = 2.0
        assert timeout_deadline(config, est, sent_at=4.0) == 7.0

    def test_gamma_must_exceed_one_with_dil(self):
        with pytest.raises(ValueError):
            ConsumerConfig(prefix=("p",), dil_enabled=True, gamma=1.0)


PREFIX = ("p",)


def make_consumer(seed=1, **config_kwargs):
    sim = Simulator(seed)
    sent = []
    consumer = Consumer(
        sim, 0, ConsumerConfig(prefix=PREFIX, **config_kwargs),
        sent.append, sim.stream("app.0"),
    )
    consumer.start(0.0)
    sim.run_until(0.0)
    return sim, consumer, sent


def data_for(seq, hops=2, cm=False):
    return Data(seq_name(PREFIX, seq), 512, hop_count=hops, cm_flag=cm)


class TestConsumer:
    def test_starts_with_window_of_one(self):
        sim, consumer, sent = make_consumer()
        assert len(sent) == 1
        assert sent[0].name == seq_name(PREFIX, 1)

    def test_slow_start_growth(self):
        # with ssthresh = inf and no losses, cwnd after n data packets is 1 + n
        sim, consumer, sent = make_consumer()
        for n in range(1, 9):
            sim.run_until(sim.now + 0.001)  # well inside every deadline
            consumer.on_data(data_for(n))
            assert consumer.window.cwnd == 1 + n
            assert len(consumer.outstanding) == int(consumer.window.cwnd)

    def test_out_of_order_acceptance(self):
        sim, consumer, sent = make_consumer()
        sim.run_until(0.05)
        consumer.on_data(data_for(1))   # window grows to 2: seqs 2, 3 in flight
        sim.run_until(0.10)
        consumer.on_data(data_for(3))   # arrives before 2, accepted immediately
        before = consumer.stats.unique_bytes
        consumer.on_data(data_for(2))
        assert consumer.stats.received == 3
        assert consumer.stats.unique_bytes == before + 512
        assert consumer.satisfied == {1, 2, 3}

    def test_duplicate_data_counted_once(self):
        sim, consumer, sent = make_consumer()
        sim.run_until(0.05)
        consumer.on_data(data_for(1))
        bytes_after = consumer.stats.unique_bytes
        consumer.on_data(data_for(1))
        assert consumer.stats.duplicates == 1
        assert consumer.stats.unique_bytes == bytes_after

    def test_timeout_retransmits_with_fresh_nonce(self):
        sim, consumer, sent = make_consumer()
        sim.run_until(2.0)  # initial rto
        assert len(sent) == 2
        assert sent[0].name == sent[1].name
        assert sent[0].nonce != sent[1].nonce
        assert consumer.stats.timeouts == 1
        assert consumer.est.rto == 4.0  # backed off
        assert len(consumer.outstanding) == 1  # replaced, not added

    def test_karn_rule_skips_retransmitted_samples(self):
        sim, consumer, sent = make_consumer()
        sim.run_until(2.0)   # seq 1 times out and is retransmitted
        sim.run_until(2.5)
        consumer.on_data(data_for(1))
        assert consumer.stats.rtt_samples == 0

    def test_single_decrease_per_window(self):
        sim, consumer, sent = make_consumer()
        for n in range(1, 4):
            sim.run_until(sim.now + 0.001)
            consumer.on_data(data_for(n))
        assert consumer.window.cwnd == 4.0
        assert len(consumer.outstanding) == 4
        # every outstanding sequence expires (repeatedly): one decrease only
        sim.run_until(sim.now + 2.1)
        assert consumer.stats.timeouts >= 4
        assert consumer.stats.decreases == 1
        assert consumer.window.cwnd == 2.0

    def test_congestion_mark_triggers_gated_decrease(self):
        sim, consumer, sent = make_consumer()
        for n in range(1, 4):
            sim.run_until(sim.now + 0.05)
            consumer.on_data(data_for(n))
        cwnd = consumer.window.cwnd
        sim.run_until(sim.now + 0.05)
        consumer.on_data(data_for(4, cm=True))
        assert consumer.stats.decreases == 1
        sim.run_until(sim.now + 0.05)
        consumer.on_data(data_for(5, cm=True))  # same window: gated
        assert consumer.stats.decreases == 1

    def test_cwl_applied_on_data(self):
        sim, consumer, sent = make_consumer(cwl_enabled=True)
        for n in range(1, 6):
            sim.run_until(sim.now + 0.05)
            consumer.on_data(data_for(n, hops=3))
            assert consumer.window.cwnd <= cwl_from_hops(3)

    def test_outstanding_conservation(self):
        sim, consumer, sent = make_consumer()
        for n in (1, 2, 3):
            sim.run_until(sim.now + 0.05)
            consumer.on_data(data_for(n))
        sent_count = consumer.next_seq - 1
        assert sent_count == len(consumer.satisfied) + len(consumer.outstanding)

    def test_each_sequence_counted_once_toward_throughput(self):
        sim, consumer, sent = make_consumer()
        sim.run_until(0.05)
        consumer.on_data(data_for(1))
        consumer.on_data(data_for(1))
        consumer.on_data(data_for(1))
        assert consumer.stats.unique_bytes == 512


class TestProducer:
    def test_answers_under_prefix(self):
        producer = Producer(("A",), payload_size=512)
        from namecast.packets import Interest
        data = producer.on_interest(Interest(seq_name(("A",), 9), 1, 2.0))
        assert data == Data(seq_name(("A",), 9), 512, hop_count=0)

    def test_ignores_foreign_prefix(self):
        producer = Producer(("A",), payload_size=512)
        from namecast.packets import Interest
        assert producer.on_interest(Interest(seq_name(("B",), 1), 1, 2.0)) is None

    def test_repeated_interest_same_content(self):
        producer = Producer(("A",), payload_size=512)
        from namecast.packets import Interest
        a = producer.on_interest(Interest(seq_name(("A",), 5), 1, 2.0))
        b = producer.on_interest(Interest(seq_name(("A",), 5), 2, 2.0))
        assert a == b
