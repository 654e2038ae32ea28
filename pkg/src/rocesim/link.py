"""Ports and wires: output scheduling, input-buffer credit accounting, and the
per-VL pause/resume state machine of IEEE 802.1Qbb priority flow control.

Buffer space is accounted in credits of 64 bytes.  A pause frame carries, per
VL, a quanta count where one quantum is 512 bit-times at the link rate; a
frame with quanta 0 resumes the VL.  Wire occupancy and serialization times
are tracked as exact rationals (nanoseconds); event timestamps are rounded to
integer nanoseconds only when scheduled, so back-to-back transmissions and
paced injections accumulate no rounding drift.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, NamedTuple, Optional

from .kernel import Engine, EventKind
from .scenario import Link

CREDIT_BYTES = 64
PFC_FRAME_WIRE_BYTES = 64
CNP_WIRE_BYTES = 64
PAUSE_QUANTUM_BITS = 512
MAX_PAUSE_QUANTA = 65535

#: the pause initiator refreshes a still-needed pause once the pause it sent
#: is within this tail fraction of expiring (numerator/denominator).
PAUSE_REFRESH_NUM = 9
PAUSE_REFRESH_DEN = 10

ECT = "10"   # ECN-capable transport, the default for data packets
CE = "11"    # congestion experienced


class BufferOverflow(Exception):
    """An input buffer exceeded its capacity; PFC is misconfigured."""


class HeadroomExceedsCapacity(Exception):
    """The computed pause headroom does not fit in the buffer."""


class PacketKind(Enum):
    DATA = "data"
    CNP = "cnp"


class FlowKey(NamedTuple):
    src: str
    dst: str
    vl: int


@dataclass(slots=True)
class Packet:
    kind: PacketKind
    src: str
    dst: str
    vl: int
    payload_bytes: int
    wire_bytes: int
    flow: Optional[FlowKey] = None
    ecn: str = ECT
    seq: int = 0
    send_time_ns: int = -1


@dataclass(slots=True)
class PfcFrame:
    """Per-VL pause frame; quanta maps enabled VLs to their pause quanta."""

    quanta: dict[int, int]
    wire_bytes: int = PFC_FRAME_WIRE_BYTES


class SendPfc(NamedTuple):
    """Action emitted by input-buffer watermark crossings."""

    vl: int
    quanta: int


def credits_for(nbytes: int) -> int:
    return -(-nbytes // CREDIT_BYTES)


def wire_time_ns(nbytes: int, rate_bps: int) -> Fraction:
    """Exact serialization time of nbytes at rate_bps, in nanoseconds."""
    return Fraction(nbytes * 8 * 1_000_000_000, rate_bps)


def round_ns(t: Fraction) -> int:
    """Round-half-up to integer nanoseconds."""
    return (t.numerator * 2 + t.denominator) // (t.denominator * 2)


def ceil_ns(t: Fraction) -> int:
    return -(-t.numerator // t.denominator)


def pause_duration_ns(quanta: int, rate_bps: int) -> int:
    return round_ns(Fraction(quanta * PAUSE_QUANTUM_BITS * 1_000_000_000, rate_bps))


def propagation_delay_bytes(link: Link) -> int:
    """Bytes in flight on the wire at line rate over one propagation delay."""
    return -(-link.propagation_delay_ns * link.rate_bps // 8_000_000_000)


def compute_auto_watermarks(
    link: Link,
    mtu_wire_bytes: int,
    capacity_credits: int,
    extra_headroom_bytes: int = 0,
) -> tuple[int, int]:
    """High/low pause watermarks (credits) leaving enough headroom for all
    bytes that can still land after a pause is triggered: a round trip of
    wire bytes, one packet finishing at the sender, one packet blocking the
    reverse wire ahead of the pause frame, and the pause frame itself."""
    headroom_bytes = (
        2 * propagation_delay_bytes(link)
        + 2 * mtu_wire_bytes
        + PFC_FRAME_WIRE_BYTES
        + extra_headroom_bytes
    )
    high = capacity_credits - credits_for(headroom_bytes)
    low = high // 2
    if high <= 0 or high <= low:
        raise HeadroomExceedsCapacity(
            f"headroom {credits_for(headroom_bytes)} credits does not fit in "
            f"{capacity_credits} credits for link {link.a}-{link.b}"
        )
    return high, low


class InBuf:
    """Per-VL receive buffer with credit accounting and edge-triggered
    pause/resume watermark crossings."""

    def __init__(self, num_vls: int, capacity_credits: int, high: int, low: int,
                 pause_quanta: int, pfc_enabled: bool = True):
        self.num_vls = num_vls
        self.capacity_credits = capacity_credits
        self.high = high
        self.low = low
        self.pause_quanta = pause_quanta
        self.pfc_enabled = pfc_enabled
        self.occupancy_bytes = [0] * num_vls
        self.pause_sent = [False] * num_vls

    def occupancy_credits(self, vl: int) -> int:
        return credits_for(self.occupancy_bytes[vl])

    def enqueue(self, packet: Packet) -> list[SendPfc]:
        vl = packet.vl
        before = self.occupancy_credits(vl)
        self.occupancy_bytes[vl] += packet.wire_bytes
        after = self.occupancy_credits(vl)
        if after > self.capacity_credits:
            raise BufferOverflow(
                f"vl {vl}: occupancy {after} credits exceeds capacity "
                f"{self.capacity_credits}"
            )
        actions: list[SendPfc] = []
        if (self.pfc_enabled and not self.pause_sent[vl]
                and before < self.high <= after):
            self.pause_sent[vl] = True
            actions.append(SendPfc(vl, self.pause_quanta))
        return actions

    def dequeue(self, packet: Packet) -> list[SendPfc]:
        vl = packet.vl
        before = self.occupancy_credits(vl)
        self.occupancy_bytes[vl] -= packet.wire_bytes
        assert self.occupancy_bytes[vl] >= 0, "ibuf accounting went negative"
        after = self.occupancy_credits(vl)
        actions: list[SendPfc] = []
        if self.pause_sent[vl] and after <= self.low < before:
            self.pause_sent[vl] = False
            actions.append(SendPfc(vl, 0))
        return actions


class Wire:
    """One direction of a link."""

    __slots__ = ("rate_bps", "propagation_delay_ns", "free_at", "sending",
                 "in_flight", "data_in_flight")

    def __init__(self, rate_bps: int, propagation_delay_ns: int):
        self.rate_bps = rate_bps
        self.propagation_delay_ns = propagation_delay_ns
        self.free_at: Fraction = Fraction(0)
        self.sending = False
        self.in_flight = 0
        self.data_in_flight = 0


#: a committed selection: the packet, an optional pacing constraint on the
#: serialization start, and a callback invoked with the exact start time.
Grant = tuple[Packet, Optional[Fraction], Optional[Callable[[Fraction], None]]]


class Port:
    """One attachment of a node to a link: the outbound wire with its pause
    state and control queue, plus the inbound buffer."""

    def __init__(self, engine: Engine, node, index: int, link: Link,
                 num_vls: int, ibuf: InBuf, stats=None):
        self.engine = engine
        self.node = node
        self.index = index
        self.link = link
        self.num_vls = num_vls
        self.ibuf = ibuf
        self.stats = stats
        self.wire = Wire(link.rate_bps, link.propagation_delay_ns)
        self.peer: Optional[Port] = None
        self.name = f"{node.node_id}.p{index}"
        # outbound pause state, per VL (pauses received from the peer)
        self.pause_until: list[Optional[int]] = [None] * num_vls
        self.last_pause_clear: list[Optional[int]] = [None] * num_vls
        self._pause_evt: list[Optional[int]] = [None] * num_vls
        self._pause_started: list[Optional[int]] = [None] * num_vls
        # pauses we initiated (tracked for refresh)
        self._refresh_evt: list[Optional[int]] = [None] * num_vls
        self._pause_sent_started: list[Optional[int]] = [None] * num_vls
        self.control: deque[PfcFrame] = deque()
        self.marking = False
        self._granting = False
        #: set by the owning node: returns a Grant or None; only called when
        #: the wire is clear to send, so a returned grant is committed.
        self.select: Callable[[int], Optional[Grant]] = lambda now: None

    # -- outbound -----------------------------------------------------------

    def vl_paused(self, vl: int, now: int) -> bool:
        until = self.pause_until[vl]
        return until is not None and until > now

    def paused_recently(self, now: int, memory_ns: int) -> bool:
        for vl in range(self.num_vls):
            if self.pause_until[vl] is not None:
                return True
            cleared = self.last_pause_clear[vl]
            if cleared is not None and now - cleared <= memory_ns:
                return True
        return False

    def _start_time(self, pacing: Optional[Fraction], now: int) -> Fraction:
        """Exact serialization start: the latest constraint still newer than
        the previous tick, or the current tick when all constraints are
        stale.  Sub-nanosecond residue carries through; nothing requantizes
        a live back-to-back or paced timeline."""
        start = None
        free = self.wire.free_at
        if free > now - 1:
            start = free
        if pacing is not None and pacing > now - 1:
            start = pacing if start is None else max(start, pacing)
        return Fraction(now) if start is None else start

    def kick(self, now: int):
        """Start the next transmission if the wire is idle and work exists."""
        if self.wire.sending or self._granting:
            return
        if self.control:
            frame = self.control.popleft()
            self._begin(frame, frame.wire_bytes, self._start_time(None, now))
            return
        self._granting = True
        try:
            grant = self.select(now)
        finally:
            self._granting = False
        if grant is None:
            return
        packet, pacing, on_grant = grant
        start = self._start_time(pacing, now)
        if packet.kind is PacketKind.DATA and self.marking:
            mark_ecn(packet)
        if on_grant is not None:
            on_grant(start)
        self._begin(packet, packet.wire_bytes, start)

    def _begin(self, item, wire_bytes: int, start: Fraction):
        wire = self.wire
        wire.free_at = start + wire_time_ns(wire_bytes, wire.rate_bps)
        wire.sending = True
        wire.in_flight += 1
        if isinstance(item, Packet) and item.kind is PacketKind.DATA:
            wire.data_in_flight += 1
        done = round_ns(wire.free_at)
        self.engine.schedule(done, self.name, EventKind.TRANSMIT_COMPLETE,
                             self._on_transmit_complete)
        peer = self.peer
        self.engine.schedule(done + wire.propagation_delay_ns, peer.name,
                             EventKind.PACKET_ARRIVAL, peer._on_arrival, item)

    def _on_transmit_complete(self):
        self.wire.sending = False
        self.kick(self.engine.now)

    def _on_arrival(self, item):
        peer_wire = self.peer.wire
        peer_wire.in_flight -= 1
        if isinstance(item, PfcFrame):
            self.apply_pfc(item, self.engine.now)
        else:
            if item.kind is PacketKind.DATA:
                peer_wire.data_in_flight -= 1
            self.node.on_packet(self, item)

    # -- received-pause state ----------------------------------------------

    def apply_pfc(self, frame: PfcFrame, now: int):
        for vl, quanta in frame.quanta.items():
            if vl >= self.num_vls:
                continue
            if quanta > 0:
                duration = pause_duration_ns(quanta, self.wire.rate_bps)
                if self._pause_evt[vl] is not None:
                    self.engine.cancel(self._pause_evt[vl])
                if self.pause_until[vl] is None:
                    self._pause_started[vl] = now
                self.pause_until[vl] = now + duration
                self._pause_evt[vl] = self.engine.schedule(
                    now + duration, self.name, EventKind.PAUSE_EXPIRY,
                    self._on_pause_expiry, vl)
            else:
                self._clear_pause(vl, now)
                self.kick(now)

    def _on_pause_expiry(self, vl: int):
        self._pause_evt[vl] = None
        self._clear_pause(vl, self.engine.now)
        self.kick(self.engine.now)

    def _clear_pause(self, vl: int, now: int):
        if self.pause_until[vl] is None:
            return
        if self._pause_evt[vl] is not None:
            self.engine.cancel(self._pause_evt[vl])
            self._pause_evt[vl] = None
        self.pause_until[vl] = None
        self.last_pause_clear[vl] = now
        if self.stats is not None:
            self.stats.record_pause_interval(
                self.node.node_id, self.index, vl, "received",
                self._pause_started[vl], now)
        self._pause_started[vl] = None

    # -- inbound buffer -----------------------------------------------------

    def ibuf_enqueue(self, packet: Packet, now: int):
        for action in self.ibuf.enqueue(packet):
            self._emit_pfc(action, now)

    def ibuf_dequeue(self, packet: Packet, now: int):
        for action in self.ibuf.dequeue(packet):
            self._emit_pfc(action, now)

    def _emit_pfc(self, action: SendPfc, now: int):
        vl, quanta = action
        self.control.append(PfcFrame({vl: quanta}))
        if quanta > 0:
            self._pause_sent_started[vl] = now
            self._arm_refresh(vl, now)
        else:
            if self._refresh_evt[vl] is not None:
                self.engine.cancel(self._refresh_evt[vl])
                self._refresh_evt[vl] = None
            if self.stats is not None:
                self.stats.record_pause_interval(
                    self.node.node_id, self.index, vl, "sent",
                    self._pause_sent_started[vl], now)
            self._pause_sent_started[vl] = None
        self.kick(now)

    def _arm_refresh(self, vl: int, now: int):
        duration = pause_duration_ns(self.ibuf.pause_quanta, self.wire.rate_bps)
        delay = duration * PAUSE_REFRESH_NUM // PAUSE_REFRESH_DEN
        if self._refresh_evt[vl] is not None:
            self.engine.cancel(self._refresh_evt[vl])
        self._refresh_evt[vl] = self.engine.schedule(
            now + delay, self.name, EventKind.PAUSE_REFRESH,
            self._on_refresh, vl)

    def _on_refresh(self, vl: int):
        self._refresh_evt[vl] = None
        now = self.engine.now
        if self.ibuf.pause_sent[vl] and self.ibuf.occupancy_credits(vl) > self.ibuf.low:
            self.control.append(PfcFrame({vl: self.ibuf.pause_quanta}))
            self._arm_refresh(vl, now)
            self.kick(now)

    # -- run-end bookkeeping -------------------------------------------------

    def close_intervals(self, t_end: int):
        if self.stats is None:
            return
        for vl in range(self.num_vls):
            if self._pause_started[vl] is not None:
                self.stats.record_pause_interval(
                    self.node.node_id, self.index, vl, "received",
                    self._pause_started[vl], t_end)
                self._pause_started[vl] = None
            if self._pause_sent_started[vl] is not None:
                self.stats.record_pause_interval(
                    self.node.node_id, self.index, vl, "sent",
                    self._pause_sent_started[vl], t_end)
                self._pause_sent_started[vl] = None


def mark_ecn(packet: Packet) -> Packet:
    """Set congestion-experienced on a data packet; control packets pass
    through unmarked."""
    if packet.kind is PacketKind.DATA:
        packet.ecn = CE
    return packet
