"""Measurement collection: per-flow delivery counters and throughput windows,
latency samples, congestion episodes, rate-level changes, pause intervals,
and buffer-occupancy samples."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .link import FlowKey


class UnsupportedFormat(Exception):
    """Requested report format is not one of the supported ones."""


@dataclass
class FlowStats:
    flow_id: str
    key: FlowKey
    packets_sent: int = 0
    bytes_sent: int = 0
    packets_delivered: int = 0
    bytes_delivered: int = 0
    steady_bytes: int = 0
    marked_packets_received: int = 0
    cnps_emitted: int = 0
    cnps_received_at_src: int = 0
    cnps_delivered: int = 0
    rcm_constrained_packets: int = 0
    constraint_degree: int = 0
    latency_samples_ns: list[int] = field(default_factory=list)
    window_bytes: dict[int, int] = field(default_factory=dict)

    @property
    def mean_latency_ns(self) -> float:
        if not self.latency_samples_ns:
            return 0.0
        return sum(self.latency_samples_ns) / len(self.latency_samples_ns)


@dataclass
class CongestionEvent:
    node: str
    port: int
    kind: str                 # ROOT | VICTIM | THRESHOLD
    start_ns: int
    end_ns: int
    flows_through: frozenset[FlowKey]
    packets_forwarded: int
    packets_marked: int


@dataclass
class RateChange:
    time_ns: int
    flow_id: str
    old_level: int
    new_level: int
    cause: str                # CNP | RECOVERY


@dataclass
class PauseInterval:
    node: str
    port: int
    vl: int
    role: str                 # sent | received
    start_ns: int
    end_ns: int


@dataclass
class MarkRecord:
    node: str
    port: int
    time_ns: int
    fresh: bool               # False when the packet arrived already marked


class StatsLedger:
    """Collected during a run by the event loop; finalized once at the end."""

    def __init__(self, window_ns: int, duration_ns: int):
        self.window_ns = window_ns
        self.duration_ns = duration_ns
        self.steady_start_ns = duration_ns // 2
        self.flows: dict[FlowKey, FlowStats] = {}
        self.flow_order: list[FlowKey] = []
        self.congestion_events: list[CongestionEvent] = []
        self.rate_changes: list[RateChange] = []
        self.pause_intervals: list[PauseInterval] = []
        self.marks: list[MarkRecord] = []
        self.occupancy_samples: list[tuple[int, str, int, int, int]] = []
        self.unknown_flow_cnps = 0
        self.finalized = False

    def register_flow(self, flow_id: str, key: FlowKey):
        self.flows[key] = FlowStats(flow_id, key)
        self.flow_order.append(key)

    def flow(self, key: FlowKey) -> FlowStats:
        return self.flows[key]

    # -- per-packet hooks -----------------------------------------------------

    def record_sent(self, key: FlowKey, payload_bytes: int, level: int):
        fs = self.flows[key]
        fs.packets_sent += 1
        fs.bytes_sent += payload_bytes
        if level > 0:
            fs.rcm_constrained_packets += 1
            fs.constraint_degree += level

    def record_delivery(self, key: FlowKey, payload_bytes: int,
                        send_time_ns: int, recv_time_ns: int):
        if recv_time_ns < send_time_ns:
            raise AssertionError(
                f"delivery before send: recv {recv_time_ns} < send {send_time_ns}"
            )
        fs = self.flows[key]
        fs.packets_delivered += 1
        fs.bytes_delivered += payload_bytes
        fs.latency_samples_ns.append(recv_time_ns - send_time_ns)
        window = recv_time_ns // self.window_ns
        fs.window_bytes[window] = fs.window_bytes.get(window, 0) + payload_bytes
        if recv_time_ns >= self.steady_start_ns:
            fs.steady_bytes += payload_bytes

    def record_marked_received(self, key: FlowKey):
        self.flows[key].marked_packets_received += 1

    def record_cnp_emitted(self, key: FlowKey):
        self.flows[key].cnps_emitted += 1

    def record_cnp_delivered(self, key: FlowKey):
        if key in self.flows:
            self.flows[key].cnps_delivered += 1

    def record_cnp_applied(self, key: FlowKey):
        self.flows[key].cnps_received_at_src += 1

    def record_unknown_cnp(self):
        self.unknown_flow_cnps += 1

    # -- mechanism hooks ------------------------------------------------------

    def record_rate_change(self, time_ns: int, flow_id: str,
                           old_level: int, new_level: int, cause: str):
        self.rate_changes.append(RateChange(time_ns, flow_id, old_level, new_level, cause))

    def record_pause_interval(self, node: str, port: int, vl: int, role: str,
                              start_ns: Optional[int], end_ns: int):
        self.pause_intervals.append(
            PauseInterval(node, port, vl, role, start_ns or 0, end_ns))

    def record_congestion_event(self, event: CongestionEvent):
        self.congestion_events.append(event)

    def record_mark(self, node: str, port: int, time_ns: int, fresh: bool):
        self.marks.append(MarkRecord(node, port, time_ns, fresh))

    def record_occupancy(self, time_ns: int, node: str, port: int, vl: int,
                         credits: int):
        self.occupancy_samples.append((time_ns, node, port, vl, credits))

    # -- derived numbers ------------------------------------------------------

    def steady_gbps(self, key: FlowKey) -> float:
        span = self.duration_ns - self.steady_start_ns
        if span <= 0:
            return 0.0
        return self.flows[key].steady_bytes * 8 / span

    def total_gbps(self, key: FlowKey) -> float:
        if self.duration_ns <= 0:
            return 0.0
        return self.flows[key].bytes_delivered * 8 / self.duration_ns

    def throughput_series(self, key: FlowKey) -> list[tuple[int, int, float]]:
        """(window_start_ns, window_end_ns, payload_gbps) tuples in time order."""
        fs = self.flows[key]
        out = []
        for window in sorted(fs.window_bytes):
            start = window * self.window_ns
            end = min(start + self.window_ns, self.duration_ns)
            span = end - start
            if span > 0:
                out.append((start, end, fs.window_bytes[window] * 8 / span))
        return out

    def finalize(self, t_end: int):
        self.duration_ns = t_end
        self.steady_start_ns = t_end // 2
        self.finalized = True


def jain_fairness(values: list[float]) -> float:
    if not values or all(v == 0 for v in values):
        return 1.0
    return sum(values) ** 2 / (len(values) * sum(v * v for v in values))
