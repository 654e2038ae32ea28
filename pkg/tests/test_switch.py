import random

from rocesim.kernel import Engine
from rocesim.link import FlowKey, Packet, PacketKind
from rocesim.scenario import DetectionMode, MarkAt, RcmConfig
from rocesim.stats import StatsLedger
from rocesim.switch import (
    NONE,
    ROOT,
    THRESHOLD,
    VICTIM,
    CongestionMonitor,
    RoundRobinArbiter,
    classify_demand,
    classify_root_victim,
)


class BruteForceRoundRobin:
    """Independent oracle: explicit rotation list with a moving head."""

    def __init__(self, keys):
        self.order = list(keys)

    def grant(self, eligible):
        for i, key in enumerate(self.order):
            if eligible(key):
                # granted key moves to the back of the rotation
                self.order = self.order[i + 1:] + self.order[:i + 1]
                return key
        return None


def test_round_robin_matches_oracle_under_random_eligibility():
    keys = [(p, 0) for p in range(5)]
    arb = RoundRobinArbiter(list(keys))
    oracle = BruteForceRoundRobin(keys)
    rng = random.Random(11)
    for _ in range(2000):
        live = {k for k in keys if rng.random() < 0.7}
        got = arb.grant(lambda k: k in live)
        want = oracle.grant(lambda k: k in live)
        assert got == want


def test_round_robin_strict_rotation_when_all_backlogged():
    keys = ["a", "b", "c"]
    arb = RoundRobinArbiter(keys)
    grants = [arb.grant(lambda k: True) for _ in range(9)]
    assert grants == ["a", "b", "c"] * 3


def test_round_robin_grant_counts_within_one():
    keys = list(range(4))
    arb = RoundRobinArbiter(keys)
    counts = {k: 0 for k in keys}
    for _ in range(4 * 25 + 3):
        counts[arb.grant(lambda k: True)] += 1
    assert max(counts.values()) - min(counts.values()) <= 1


def test_single_queue_always_granted():
    arb = RoundRobinArbiter(["only"])
    for _ in range(5):
        assert arb.grant(lambda k: True) == "only"


def test_no_eligible_returns_none():
    arb = RoundRobinArbiter(["a", "b"])
    assert arb.grant(lambda k: False) is None


class TestRootVictimClassifier:
    def test_backlogged_unpaused_is_root(self):
        assert classify_root_victim(80, 64, paused=False) == ROOT

    def test_backlogged_paused_is_victim(self):
        assert classify_root_victim(80, 64, paused=True) == VICTIM

    def test_no_backlog_is_none(self):
        assert classify_root_victim(0, 64, paused=False) == NONE

    def test_threshold_is_strict(self):
        assert classify_root_victim(64, 64, paused=False) == NONE
        assert classify_root_victim(65, 64, paused=False) == ROOT


class TestDemandClassifier:
    WINDOW = 10_000  # ns
    RATE = 40_000_000_000

    def offered(self, gbps):
        # bytes arriving over one window at the given rate
        return int(gbps * 1e9 * self.WINDOW / 8 / 1e9)

    def test_overloaded_and_backlogged(self):
        total = self.offered(30) + self.offered(30)   # 60 Gbps toward 40
        assert classify_demand(total, self.WINDOW, self.RATE, 70, 64) == THRESHOLD

    def test_underloaded_is_none(self):
        assert classify_demand(self.offered(10), self.WINDOW, self.RATE, 70, 64) == NONE

    def test_overload_without_backlog_is_none(self):
        total = self.offered(60)
        assert classify_demand(total, self.WINDOW, self.RATE, 10, 64) == NONE

    def test_exactly_at_capacity_is_none(self):
        assert classify_demand(self.offered(40), self.WINDOW, self.RATE, 70, 64) == NONE


class _StubWire:
    rate_bps = 40_000_000_000


class _StubPort:
    """Just enough port surface for a CongestionMonitor."""

    def __init__(self):
        self.wire = _StubWire()
        self.index = 0
        self.name = "stub.p0"
        self.marking = False
        self._paused = False

    def paused_recently(self, now, memory_ns):
        return self._paused


def _monitor(engine, stats, mode=DetectionMode.ROOT_VICTIM, threshold=64,
             hysteresis=1_000, mark_at=MarkAt.ROOT_ONLY):
    cfg = RcmConfig(mode=mode, mark_at=mark_at, input_threshold_credits=threshold,
                    detection_window_ns=1_000, hysteresis_ns=hysteresis)
    port = _StubPort()
    backlog = {"bytes": 0}
    mon = CongestionMonitor(engine, stats, "sw", port, cfg,
                            lambda: backlog["bytes"])
    return mon, port, backlog


def _grant(mon, engine):
    pkt = Packet(PacketKind.DATA, "S", "R", 0, 2048, 2156,
                 flow=FlowKey("S", "R", 0))
    mon.on_grant(engine.now, pkt)
    return pkt


def test_monitor_marks_root_and_respects_mark_at():
    engine = Engine()
    stats = StatsLedger(100_000, 1_000_000)
    mon, port, backlog = _monitor(engine, stats)
    backlog["bytes"] = 80 * 64
    _grant(mon, engine)
    assert mon.kind == ROOT and port.marking

    port._paused = True
    _grant(mon, engine)
    assert mon.kind == VICTIM
    assert not port.marking           # root-only marking

    mon2, port2, backlog2 = _monitor(engine, stats, mark_at=MarkAt.ROOT_AND_VICTIM)
    backlog2["bytes"] = 80 * 64
    port2._paused = True
    _grant(mon2, engine)
    assert mon2.kind == VICTIM and port2.marking


def test_monitor_flicker_within_hysteresis_keeps_state():
    engine = Engine()
    stats = StatsLedger(100_000, 1_000_000)
    mon, port, backlog = _monitor(engine, stats, hysteresis=1_000)
    backlog["bytes"] = 80 * 64
    _grant(mon, engine)
    assert mon.kind == ROOT
    # condition goes false for half the hysteresis, then true again
    backlog["bytes"] = 0
    engine.run_until(engine.now + 400)
    mon.on_grant(engine.now, Packet(PacketKind.DATA, "S", "R", 0, 2048, 2156,
                                    flow=FlowKey("S", "R", 0)))
    assert mon.kind == ROOT           # state retained across the dip
    backlog["bytes"] = 80 * 64
    _grant(mon, engine)
    assert mon.kind == ROOT
    assert stats.congestion_events == []


def test_monitor_clears_after_hysteresis_and_records_event():
    engine = Engine()
    stats = StatsLedger(100_000, 1_000_000)
    mon, port, backlog = _monitor(engine, stats, hysteresis=1_000)
    backlog["bytes"] = 80 * 64
    _grant(mon, engine)
    start = engine.now
    backlog["bytes"] = 0
    engine.run_until(engine.now + 5_000)   # check event clears the state
    assert mon.kind == NONE
    assert not port.marking
    assert len(stats.congestion_events) == 1
    ev = stats.congestion_events[0]
    assert ev.kind == ROOT
    assert ev.start_ns == start
    assert ev.end_ns - start >= 1_000
    assert ev.flows_through == {FlowKey("S", "R", 0)}


def test_monitor_closes_open_episode_at_run_end():
    engine = Engine()
    stats = StatsLedger(100_000, 1_000_000)
    mon, port, backlog = _monitor(engine, stats)
    backlog["bytes"] = 80 * 64
    _grant(mon, engine)
    mon.close(123_456)
    assert len(stats.congestion_events) == 1
    assert stats.congestion_events[0].end_ns == 123_456


def test_monitor_kind_transition_splits_episodes():
    engine = Engine()
    stats = StatsLedger(100_000, 1_000_000)
    mon, port, backlog = _monitor(engine, stats)
    backlog["bytes"] = 80 * 64
    _grant(mon, engine)
    port._paused = True
    engine.run_until(engine.now + 10)
    _grant(mon, engine)
    assert mon.kind == VICTIM
    assert [e.kind for e in stats.congestion_events] == [ROOT]
    mon.close(engine.now)
    assert [e.kind for e in stats.congestion_events] == [ROOT, VICTIM]
