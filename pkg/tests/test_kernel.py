import io
import random

import pytest

from rocesim.kernel import Engine, EventKind, SchedulingInPast


def collect(engine, log):
    def fn(tag):
        log.append((engine.now, tag))
    return fn


def test_schedule_at_current_time_fires_first():
    engine = Engine()
    log = []
    fn = collect(engine, log)
    engine.schedule(0, "t", EventKind.FLOW_START, fn, "a")
    engine.schedule(5, "t", EventKind.FLOW_START, fn, "b")
    engine.run_until(10)
    assert log == [(0, "a"), (5, "b")]


def test_equal_times_fire_in_insertion_order():
    engine = Engine()
    log = []
    fn = collect(engine, log)
    engine.schedule(100, "t", EventKind.FLOW_START, fn, "e1")
    engine.schedule(100, "t", EventKind.FLOW_START, fn, "e2")
    engine.schedule(100, "t", EventKind.FLOW_START, fn, "e3")
    engine.run_until(100)
    assert [tag for _, tag in log] == ["e1", "e2", "e3"]


def test_scheduling_in_past_rejected():
    engine = Engine()
    engine.schedule(60, "t", EventKind.FLOW_START, lambda: None)
    engine.run_until(60)
    with pytest.raises(SchedulingInPast):
        engine.schedule(50, "t", EventKind.FLOW_START, lambda: None)


def test_empty_queue_advances_clock():
    engine = Engine()
    summary = engine.run_until(1_000_000_000)
    assert engine.now == 1_000_000_000
    assert summary.events_processed == 0


def test_events_beyond_t_end_left_pending():
    engine = Engine()
    log = []
    fn = collect(engine, log)
    engine.schedule(50, "t", EventKind.FLOW_START, fn, "early")
    engine.schedule(200, "t", EventKind.FLOW_START, fn, "late")
    engine.run_until(100)
    assert log == [(50, "early")]
    engine.run_until(300)
    assert log == [(50, "early"), (200, "late")]


def test_cancel_semantics():
    engine = Engine()
    log = []
    fn = collect(engine, log)
    eid = engine.schedule(10, "t", EventKind.FLOW_START, fn, "x")
    assert engine.cancel(eid) is True
    assert engine.cancel(eid) is False
    fired = engine.schedule(20, "t", EventKind.FLOW_START, fn, "y")
    engine.run_until(30)
    assert log == [(20, "y")]
    assert engine.cancel(fired) is False


def test_clock_never_moves_backward_and_order_matches_oracle():
    rng = random.Random(7)
    engine = Engine()
    fired = []
    expected = []
    seq = 0

    def fn(tag):
        fired.append(tag)

    # interleave scheduling with partial runs
    t_base = 0
    for round_no in range(20):
        for _ in range(30):
            at = t_base + rng.randrange(0, 500)
            tag = (at, seq)
            expected.append(tag)
            engine.schedule(at, "t", EventKind.FLOW_START, fn, tag)
            seq += 1
        t_base += 500
        engine.run_until(t_base)
    engine.run_until(t_base + 500)
    assert fired == sorted(expected)


def test_trace_records_processed_events():
    buf = io.StringIO()
    engine = Engine(trace=buf)
    engine.schedule(3, "a", EventKind.FLOW_START, lambda: None)
    eid = engine.schedule(4, "b", EventKind.INJECT, lambda: None)
    engine.cancel(eid)
    engine.schedule(5, "c", EventKind.STATS_SAMPLE, lambda: None)
    engine.run_until(10)
    lines = buf.getvalue().splitlines()
    assert lines == ["3,0,a,FlowStart", "5,2,c,StatsSample"]


def test_identical_runs_produce_identical_traces():
    def run():
        buf = io.StringIO()
        engine = Engine(seed=3, trace=buf)

        def chain(n):
            if n > 0:
                engine.schedule(engine.now + engine.rng.randrange(1, 9), "t",
                                EventKind.INJECT, chain, n - 1)

        chain(50)
        engine.run_until(10_000)
        return buf.getvalue()

    assert run() == run()


def test_run_summary_counts():
    engine = Engine()
    for i in range(5):
        engine.schedule(i, "t", EventKind.FLOW_START, lambda: None)
    cancelled = engine.schedule(2, "t", EventKind.FLOW_START, lambda: None)
    engine.cancel(cancelled)
    engine.schedule(99, "t", EventKind.FLOW_START, lambda: None)
    summary = engine.run_until(10)
    # 5 scheduled - 0 fired-cancelled + none beyond horizon
    assert summary.events_processed == 5
    assert summary.clock_ns == 10
    assert summary.wall_seconds >= 0
