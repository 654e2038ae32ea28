"""Channel-adapter endpoints: message segmentation and paced injection on the
send side, packet consumption and congestion-notification reflection on the
receive side, and the per-flow rate ladder.

The ladder holds a level counter per flow.  Each received CNP raises the
level by one; each recovery event (enough time elapsed and/or enough bytes
sent since the last change) lowers it by one, never below zero.  A flow at
level k schedules consecutive packet transmissions (k + 1) base intervals
apart, where the base interval is the wire time of one full-sized packet on
the source link, so level 0 is line rate and level 1 halves the rate.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from typing import Optional

from .kernel import Engine, EventKind
from .link import (
    CE,
    CNP_WIRE_BYTES,
    FlowKey,
    Packet,
    PacketKind,
    Port,
    ceil_ns,
    round_ns,
)
from .scenario import FlowSpec, RcmConfig, RecoveryCombine, UNBOUNDED
from .stats import StatsLedger
from .switch import RoundRobinArbiter


def segment_message(message_bytes: int, mtu_payload: int) -> list[int]:
    """Split a message into payload sizes; all full MTU except a last remainder."""
    if message_bytes < 1:
        raise ValueError("message_bytes must be >= 1")
    if mtu_payload < 1:
        raise ValueError("mtu_payload must be >= 1")
    full, rest = divmod(message_bytes, mtu_payload)
    return [mtu_payload] * full + ([rest] if rest else [])


class RateController:
    """Per-flow injection state: ladder level, pacing deadline, recovery
    accounting.  Pure state machine; the owner drives timers."""

    def __init__(self, base_interval_ns: Fraction, recovery_time_ns: int,
                 recovery_bytes: int, combine: RecoveryCombine):
        self.base_interval_ns = base_interval_ns
        self.recovery_time_ns = recovery_time_ns
        self.recovery_bytes = recovery_bytes
        self.combine = combine
        self.level = 0
        self.next_eligible: Fraction = Fraction(0)
        self.bytes_since_change = 0
        self.last_change_ns: Optional[int] = None
        self.last_cnp_ns: Optional[int] = None

    def next_injection_time(self, now: int) -> int:
        return max(now, ceil_ns(self.next_eligible))

    def on_transmit_start(self, start: Fraction):
        """Pacing: the packet after this one may not start earlier than
        (level + 1) base intervals from this start."""
        self.next_eligible = start + (self.level + 1) * self.base_interval_ns

    def on_cnp(self, now: int):
        self.level += 1
        self.last_cnp_ns = now
        self.last_change_ns = now
        self.bytes_since_change = 0

    def add_bytes(self, payload_bytes: int):
        self.bytes_since_change += payload_bytes

    def recovery_ready(self, now: int) -> bool:
        time_ok = (self.last_change_ns is not None
                   and now - self.last_change_ns >= self.recovery_time_ns)
        bytes_ok = self.bytes_since_change >= self.recovery_bytes
        if self.combine is RecoveryCombine.ALL:
            return time_ok and bytes_ok
        return time_ok or bytes_ok

    def apply_recovery(self, now: int) -> bool:
        """One recovery event; returns True iff the level actually dropped."""
        changed = self.level > 0
        if changed:
            self.level -= 1
            self.last_change_ns = now
        self.bytes_since_change = 0
        return changed


class HostFlow:
    """Runtime state of one outgoing flow at its source CA."""

    def __init__(self, spec: FlowSpec, key: FlowKey, controller: RateController,
                 out_port: Port):
        self.spec = spec
        self.key = key
        self.controller = controller
        self.out_port = out_port
        self.remaining = spec.message_bytes      # None = unbounded
        self.next_seq = 0
        self.active = False                      # True once started, until fully sent
        self.inject_evt: Optional[int] = None
        self.recovery_evt: Optional[int] = None

    @property
    def fully_staged(self) -> bool:
        return self.remaining is not UNBOUNDED and self.remaining == 0


class HostNode:
    """A CA: sources flows through per-port round-robin queues and consumes
    arriving traffic immediately (hosts are infinite sinks)."""

    def __init__(self, engine: Engine, node_id: str, stats: StatsLedger,
                 rcm: RcmConfig, overhead_bytes: int):
        self.engine = engine
        self.node_id = node_id
        self.stats = stats
        self.rcm = rcm
        self.overhead_bytes = overhead_bytes
        self.ports: list[Port] = []
        self.route_port: dict[str, Port] = {}
        self.flows: dict[str, HostFlow] = {}
        self.flows_by_key: dict[FlowKey, HostFlow] = {}
        self.queues: list[dict[tuple, deque]] = []
        self.arbiters: list[RoundRobinArbiter] = []
        self._last_cnp_emit: dict[FlowKey, int] = {}
        self._marked_since_cnp: dict[FlowKey, int] = {}

    def add_port(self, port: Port):
        self.ports.append(port)
        self.queues.append({})
        self.arbiters.append(RoundRobinArbiter())
        port.select = lambda now, p=port: self._select(p, now)

    def finalize(self):
        pass

    # -- sending ----------------------------------------------------------------

    def add_flow(self, spec: FlowSpec):
        key = FlowKey(spec.src, spec.dst, spec.vl)
        out_port = self.route_port[spec.dst]
        mtu_wire = spec.mtu_payload_bytes + self.overhead_bytes
        base = Fraction(mtu_wire * 8 * 1_000_000_000, out_port.wire.rate_bps)
        controller = RateController(base, self.rcm.recovery_time_ns,
                                    self.rcm.recovery_bytes,
                                    self.rcm.recovery_combine)
        flow = HostFlow(spec, key, controller, out_port)
        self.flows[spec.flow_id] = flow
        self.flows_by_key[key] = flow
        self.engine.schedule(spec.start_ns, self.node_id, EventKind.FLOW_START,
                             self._on_flow_start, flow)

    def _queue_for(self, port: Port, qkey: tuple) -> deque:
        queues = self.queues[port.index]
        q = queues.get(qkey)
        if q is None:
            q = deque()
            queues[qkey] = q
            self.arbiters[port.index].register(qkey)
        return q

    def _on_flow_start(self, flow: HostFlow):
        flow.active = True
        self._stage(flow)

    def _on_inject(self, flow: HostFlow):
        flow.inject_evt = None
        self._stage(flow)

    def _stage(self, flow: HostFlow):
        """Create the next packet and queue it for its output port."""
        spec = flow.spec
        if flow.remaining is UNBOUNDED:
            payload = spec.mtu_payload_bytes
        else:
            payload = min(spec.mtu_payload_bytes, flow.remaining)
            flow.remaining -= payload
        packet = Packet(PacketKind.DATA, spec.src, spec.dst, spec.vl,
                        payload, payload + self.overhead_bytes,
                        flow=flow.key, seq=flow.next_seq)
        flow.next_seq += 1
        self._queue_for(flow.out_port, ("flow", spec.flow_id)).append(packet)
        flow.out_port.kick(self.engine.now)

    def _select(self, port: Port, now: int):
        queues = self.queues[port.index]

        def eligible(qkey):
            q = queues[qkey]
            return bool(q) and not port.vl_paused(q[0].vl, now)

        qkey = self.arbiters[port.index].grant(eligible)
        if qkey is None:
            return None
        packet = queues[qkey].popleft()
        if qkey[0] == "flow":
            flow = self.flows[qkey[1]]
            return packet, flow.controller.next_eligible, (
                lambda start, f=flow, p=packet: self._on_data_grant(f, p, start))
        return packet, None, None

    def _on_data_grant(self, flow: HostFlow, packet: Packet, start: Fraction):
        now = self.engine.now
        ctrl = flow.controller
        packet.send_time_ns = round_ns(start)
        self.stats.record_sent(flow.key, packet.payload_bytes, ctrl.level)
        ctrl.on_transmit_start(start)
        ctrl.add_bytes(packet.payload_bytes)
        self._maybe_recover(flow, now)
        if flow.fully_staged:
            if not self.queues[flow.out_port.index][("flow", flow.spec.flow_id)]:
                flow.active = False
            return
        at = max(now, ceil_ns(ctrl.next_eligible))
        flow.inject_evt = self.engine.schedule(
            at, self.node_id, EventKind.INJECT, self._on_inject, flow)

    # -- receiving ----------------------------------------------------------------

    def on_packet(self, port: Port, packet: Packet):
        now = self.engine.now
        if packet.kind is PacketKind.DATA:
            self.stats.record_delivery(packet.flow, packet.payload_bytes,
                                       packet.send_time_ns, now)
            if packet.ecn == CE:
                self.stats.record_marked_received(packet.flow)
                self._reflect_cnp(packet, now)
        elif packet.kind is PacketKind.CNP:
            self._on_cnp(packet, now)

    def _reflect_cnp(self, packet: Packet, now: int):
        key = packet.flow
        count = self._marked_since_cnp.get(key, 0) + 1
        last = self._last_cnp_emit.get(key)
        silence = self.rcm.cnp_max_silence_ns
        due = count >= self.rcm.cnp_per_marked or last is None or (
            silence > 0 and now - last >= silence)
        min_interval = self.rcm.cnp_min_interval_ns
        if min_interval > 0 and last is not None and now - last < min_interval:
            due = False
        if not due:
            self._marked_since_cnp[key] = count
            return
        self._marked_since_cnp[key] = 0
        self._last_cnp_emit[key] = now
        vl = key.vl if self.rcm.cnp_vl is None else self.rcm.cnp_vl
        cnp = Packet(PacketKind.CNP, self.node_id, key.src, vl, 0,
                     CNP_WIRE_BYTES, flow=key)
        out_port = self.route_port[key.src]
        self.stats.record_cnp_emitted(key)
        self._queue_for(out_port, ("cnp", key)).append(cnp)
        out_port.kick(now)

    def _on_cnp(self, packet: Packet, now: int):
        key = packet.flow
        self.stats.record_cnp_delivered(key)
        flow = self.flows_by_key.get(key)
        if flow is None or not flow.active:
            self.stats.record_unknown_cnp()
            return
        ctrl = flow.controller
        old = ctrl.level
        ctrl.on_cnp(now)
        self.stats.record_cnp_applied(key)
        self.stats.record_rate_change(now, flow.spec.flow_id, old, ctrl.level, "CNP")
        self._rearm_recovery(flow, now + ctrl.recovery_time_ns)

    # -- recovery ----------------------------------------------------------------

    def _rearm_recovery(self, flow: HostFlow, at: int):
        if flow.recovery_evt is not None:
            self.engine.cancel(flow.recovery_evt)
        flow.recovery_evt = self.engine.schedule(
            at, self.node_id, EventKind.RECOVERY_TIMER,
            self._on_recovery_timer, flow)

    def _on_recovery_timer(self, flow: HostFlow):
        flow.recovery_evt = None
        self._maybe_recover(flow, self.engine.now)

    def _maybe_recover(self, flow: HostFlow, now: int):
        ctrl = flow.controller
        if not ctrl.recovery_ready(now):
            return
        old = ctrl.level
        if ctrl.apply_recovery(now):
            self.stats.record_rate_change(now, flow.spec.flow_id, old,
                                          ctrl.level, "RECOVERY")
        if flow.recovery_evt is not None:
            self.engine.cancel(flow.recovery_evt)
            flow.recovery_evt = None
        if ctrl.level > 0:
            self._rearm_recovery(flow, now + ctrl.recovery_time_ns)

    # -- bookkeeping ----------------------------------------------------------------

    def close(self, t_end: int):
        for port in self.ports:
            port.close_intervals(t_end)

    def buffered_packets(self) -> int:
        return sum(len(q) for queues in self.queues for q in queues.values())
