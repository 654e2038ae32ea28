"""Deterministic discrete-event core: virtual clock, ordered event queue, seeded RNG.

Simulation time is a non-negative integer count of nanoseconds.  Events fire
in (fire_at, seq) order where seq is a global insertion counter, so ties at
the same timestamp resolve in scheduling order and a run replays bit for bit
regardless of the heap implementation.
"""

from __future__ import annotations

import heapq
import random
import time
from dataclasses import dataclass
from enum import Enum
from typing import IO, Optional


class EventKind(Enum):
    PACKET_ARRIVAL = "PacketArrival"
    TRANSMIT_COMPLETE = "TransmitComplete"
    PAUSE_EXPIRY = "PauseExpiry"
    RECOVERY_TIMER = "RecoveryTimer"
    STATS_SAMPLE = "StatsSample"
    FLOW_START = "FlowStart"
    # Wakeups beyond the six above: paced injection, pause refresh at the
    # pause initiator, and congestion-state clear checks.
    INJECT = "Inject"
    PAUSE_REFRESH = "PauseRefresh"
    CONGESTION_CHECK = "CongestionCheck"


class SchedulingInPast(Exception):
    """An event was scheduled before the current clock."""


@dataclass
class RunSummary:
    events_processed: int
    clock_ns: int
    wall_seconds: float


class Engine:
    """Single-threaded event loop over integer-nanosecond virtual time."""

    def __init__(self, seed: int = 0, trace: Optional[IO[str]] = None):
        self.now: int = 0
        self.rng = random.Random(seed)
        self._heap: list = []
        self._seq = 0
        self._pending: set[int] = set()
        self._cancelled: set[int] = set()
        self._trace = trace
        self.events_processed = 0

    def schedule(self, at: int, target: str, kind: EventKind, fn, *args) -> int:
        """Schedule fn(*args) at absolute time `at`; returns a cancellable id."""
        if at < self.now:
            raise SchedulingInPast(f"cannot schedule at {at} ns, clock is {self.now} ns")
        seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (at, seq, target, kind, fn, args))
        self._pending.add(seq)
        return seq

    def cancel(self, event_id: int) -> bool:
        """True iff the event existed and had not fired; cancelled events never fire."""
        if event_id in self._pending:
            self._pending.discard(event_id)
            self._cancelled.add(event_id)
            return True
        return False

    def run_until(self, t_end: int) -> RunSummary:
        """Process every event with fire_at <= t_end; leave the clock at t_end."""
        t0 = time.perf_counter()
        heap = self._heap
        trace = self._trace
        started = self.events_processed
        while heap and heap[0][0] <= t_end:
            at, seq, target, kind, fn, args = heapq.heappop(heap)
            if seq in self._cancelled:
                self._cancelled.discard(seq)
                continue
            self._pending.discard(seq)
            self.now = at
            if trace is not None:
                trace.write(f"{at},{seq},{target},{kind.value}\n")
            self.events_processed += 1
            fn(*args)
        self.now = max(self.now, t_end)
        return RunSummary(self.events_processed - started, self.now, time.perf_counter() - t0)
