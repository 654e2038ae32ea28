"""Network-element behavior: per-output round-robin arbitration over input
buffers, static forwarding, congestion detection, and ECN marking.

Two detectors are available.  Mode `1a` classifies a backlogged output as a
congestion root when its own transmissions are not being paused from
downstream, and as a victim when they are; marking applies to roots and,
optionally, victims.  Mode `1b` flags an output whenever the traffic offered
to it over a trailing window exceeds the link capacity while input backlog
sits above a credit threshold.  Marking follows the detector outcome of the
most recent arbitration; a hysteresis interval only smooths the recorded
congestion episodes.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from typing import Callable, Optional

from .kernel import Engine, EventKind
from .link import CE, FlowKey, Packet, PacketKind, Port, credits_for, mark_ecn
from .scenario import DetectionMode, MarkAt, RcmConfig
from .stats import CongestionEvent, StatsLedger

NONE = "NONE"
ROOT = "ROOT"
VICTIM = "VICTIM"
THRESHOLD = "THRESHOLD"


class RoundRobinArbiter:
    """Rotating grant over a fixed, ordered set of queue keys."""

    def __init__(self, keys: Optional[list] = None):
        self.keys: list = list(keys) if keys else []
        self._cursor = -1

    def register(self, key):
        self.keys.append(key)

    def grant(self, eligible: Callable[[object], bool]):
        """Next eligible key in rotation starting after the cursor, or None.
        The cursor advances to the granted key."""
        n = len(self.keys)
        for step in range(1, n + 1):
            idx = (self._cursor + step) % n
            if eligible(self.keys[idx]):
                self._cursor = idx
                return self.keys[idx]
        return None


def classify_root_victim(backlog_credits: int, threshold_credits: int,
                         paused: bool) -> str:
    """Root: backlogged beyond the threshold with free downstream.  Victim:
    backlogged beyond the threshold while downstream pauses us."""
    if backlog_credits <= threshold_credits:
        return NONE
    return VICTIM if paused else ROOT


def classify_demand(offered_bytes: int, window_ns: int, rate_bps: int,
                    backlog_credits: int, threshold_credits: int,
                    backlog_bytes: int = 0) -> str:
    """Congested when the traffic competing for the output over the window
    (arrivals plus the standing backlog, which is traffic still waiting for
    service) exceeds the link capacity, and backlog sits above the credit
    threshold."""
    if backlog_credits <= threshold_credits:
        return NONE
    demand_bytes = offered_bytes + backlog_bytes
    if demand_bytes * 8 * 1_000_000_000 > rate_bps * window_ns:
        return THRESHOLD
    return NONE


class CongestionMonitor:
    """Per-output-port detector state.

    `kind` is the hysteresis-smoothed episode state used for congestion
    records; the marking flag handed to the port tracks the raw detector
    outcome of the latest evaluation.
    """

    def __init__(self, engine: Engine, stats: StatsLedger, node_id: str,
                 port: Port, cfg: RcmConfig, backlog_bytes: Callable[[], int]):
        self.engine = engine
        self.stats = stats
        self.node_id = node_id
        self.port = port
        self.mode = cfg.mode
        self.mark_at = cfg.mark_at
        self.threshold_credits = cfg.input_threshold_credits
        self.window_ns = cfg.detection_window_ns
        self.hysteresis_ns = max(1, cfg.effective_hysteresis_ns)
        self.victim_memory_ns = cfg.effective_victim_memory_ns
        self.backlog_bytes = backlog_bytes
        self.kind = NONE
        self._since = 0
        self._last_true = 0
        self._check_evt: Optional[int] = None
        self._offered: deque[tuple[int, int]] = deque()
        self._offered_sum = 0
        self._flows: set[FlowKey] = set()
        self._forwarded = 0
        self._marked = 0

    # -- inputs ---------------------------------------------------------------

    def on_offered(self, wire_bytes: int, now: int):
        if self.mode is DetectionMode.DEMAND_THRESHOLD:
            self._offered.append((now, wire_bytes))
            self._offered_sum += wire_bytes

    def _prune(self, now: int):
        horizon = now - self.window_ns
        offered = self._offered
        while offered and offered[0][0] <= horizon:
            self._offered_sum -= offered.popleft()[1]

    def evaluate(self, now: int) -> str:
        backlog = credits_for(self.backlog_bytes())
        if self.mode is DetectionMode.ROOT_VICTIM:
            paused = self.port.paused_recently(now, self.victim_memory_ns)
            return classify_root_victim(backlog, self.threshold_credits, paused)
        if self.mode is DetectionMode.DEMAND_THRESHOLD:
            self._prune(now)
            return classify_demand(self._offered_sum, self.window_ns,
                                   self.port.wire.rate_bps, backlog,
                                   self.threshold_credits)
        return NONE

    def _marking_for(self, outcome: str) -> bool:
        if outcome == ROOT or outcome == THRESHOLD:
            return True
        if outcome == VICTIM:
            return self.mark_at is MarkAt.ROOT_AND_VICTIM
        return False

    def on_grant(self, now: int, packet: Packet):
        """Run after every successful arbitration, before the packet exits."""
        outcome = self.evaluate(now)
        already_marked = packet.ecn == CE
        will_mark = self._marking_for(outcome) and packet.kind is PacketKind.DATA
        self.port.marking = self._marking_for(outcome)
        self._update_state(outcome, now)
        if self.kind != NONE:
            if packet.flow is not None:
                self._flows.add(packet.flow)
            self._forwarded += 1
        if will_mark:
            self._marked += 1
            self.stats.record_mark(self.node_id, self.port.index, now,
                                   fresh=not already_marked)

    # -- episode state machine --------------------------------------------------

    def _update_state(self, outcome: str, now: int):
        if outcome != NONE:
            self._last_true = now
            if self.kind == NONE:
                self.kind = outcome
                self._since = now
                self._reset_episode()
            elif outcome != self.kind:
                self._close_episode(now)
                self.kind = outcome
                self._since = now
                self._reset_episode()
            self._ensure_check(now)
        elif self.kind != NONE and now - self._last_true >= self.hysteresis_ns:
            self._close_episode(now)
            self.kind = NONE
            self.port.marking = False

    def _reset_episode(self):
        self._flows = set()
        self._forwarded = 0
        self._marked = 0

    def _close_episode(self, end: int):
        self.stats.record_congestion_event(CongestionEvent(
            self.node_id, self.port.index, self.kind, self._since, end,
            frozenset(self._flows), self._forwarded, self._marked))

    def _ensure_check(self, now: int):
        if self._check_evt is None:
            self._check_evt = self.engine.schedule(
                self._last_true + self.hysteresis_ns, self.port.name,
                EventKind.CONGESTION_CHECK, self._on_check)

    def _on_check(self):
        self._check_evt = None
        now = self.engine.now
        if self.kind == NONE:
            return
        outcome = self.evaluate(now)
        if outcome != NONE:
            self._update_state(outcome, now)
        elif now - self._last_true >= self.hysteresis_ns:
            self._update_state(NONE, now)
        else:
            self._check_evt = self.engine.schedule(
                self._last_true + self.hysteresis_ns, self.port.name,
                EventKind.CONGESTION_CHECK, self._on_check)

    def close(self, t_end: int):
        if self.kind != NONE:
            self._close_episode(t_end)
            self.kind = NONE


class SwitchNode:
    """A switch: forwards between ports, arbitrates each output round-robin
    over (input port, VL) queues, and runs a congestion monitor per output."""

    def __init__(self, engine: Engine, node_id: str, stats: StatsLedger,
                 rcm: RcmConfig, num_vls: int):
        self.engine = engine
        self.node_id = node_id
        self.stats = stats
        self.rcm = rcm
        self.num_vls = num_vls
        self.ports: list[Port] = []
        self.route_port: dict[str, Port] = {}
        self.voq: list[dict[tuple[int, int], deque]] = []
        self.queued_bytes: list[int] = []
        self.arbiters: list[RoundRobinArbiter] = []
        self.monitors: list[Optional[CongestionMonitor]] = []

    def add_port(self, port: Port):
        self.ports.append(port)
        port.select = lambda now, p=port: self._select(p, now)

    def finalize(self):
        for out in self.ports:
            keys = [(p.index, vl) for p in self.ports if p.index != out.index
                    for vl in range(self.num_vls)]
            self.voq.append({key: deque() for key in keys})
            self.queued_bytes.append(0)
            self.arbiters.append(RoundRobinArbiter(keys))
            if self.rcm.mode is not DetectionMode.OFF:
                monitor = CongestionMonitor(
                    self.engine, self.stats, self.node_id, out, self.rcm,
                    lambda idx=out.index: self.queued_bytes[idx])
                self.monitors.append(monitor)
            else:
                self.monitors.append(None)

    def on_packet(self, port: Port, packet: Packet):
        now = self.engine.now
        port.ibuf_enqueue(packet, now)
        out = self.route_port[packet.dst]
        self.voq[out.index][(port.index, packet.vl)].append(packet)
        self.queued_bytes[out.index] += packet.wire_bytes
        monitor = self.monitors[out.index]
        if monitor is not None:
            monitor.on_offered(packet.wire_bytes, now)
        out.kick(now)

    def _select(self, out: Port, now: int):
        voq = self.voq[out.index]

        def eligible(key):
            return bool(voq[key]) and not out.vl_paused(key[1], now)

        key = self.arbiters[out.index].grant(eligible)
        if key is None:
            return None
        packet = voq[key].popleft()
        self.queued_bytes[out.index] -= packet.wire_bytes
        self.ports[key[0]].ibuf_dequeue(packet, now)
        monitor = self.monitors[out.index]
        if monitor is not None:
            monitor.on_grant(now, packet)
        return packet, None, None

    def close(self, t_end: int):
        for monitor in self.monitors:
            if monitor is not None:
                monitor.close(t_end)
        for port in self.ports:
            port.close_intervals(t_end)

    def buffered_packets(self) -> int:
        return sum(len(q) for voqs in self.voq for q in voqs.values())

    def buffered_data_packets(self) -> int:
        return sum(1 for voqs in self.voq for q in voqs.values()
                   for pkt in q if pkt.kind is PacketKind.DATA)
