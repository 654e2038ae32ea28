"""Built-in scenarios.

`parking-lot` is the classic unfairness setup: sources A, B and C reach a
first switch, a fourth source D joins at a second switch, and all four send
unbounded streams to receiver R behind the second switch.  Every link runs
at 40 Gbps.  `baseline` is a single uncontended flow over the same two-switch
chain, used to pin the maximum payload throughput.
"""

from __future__ import annotations

from .scenario import (
    FlowSpec,
    Link,
    MechanismConfig,
    Node,
    NodeKind,
    Scenario,
    Topology,
    UNBOUNDED,
    finalize_scenario,
)

LINK_RATE_BPS = 40_000_000_000
LINK_DELAY_NS = 100
MTU_PAYLOAD_BYTES = 2048


def _scenario(nodes, links, flows) -> Scenario:
    topo = Topology(nodes=nodes, links=links)
    mech = MechanismConfig()
    finalize_scenario(topo, flows, mech)
    return Scenario(topo, flows, mech)


def build_parking_lot() -> Scenario:
    """Four senders (A, B, C via switch1; D via switch2) to one receiver R."""
    nodes = [
        Node("A", NodeKind.CA),
        Node("B", NodeKind.CA),
        Node("C", NodeKind.CA),
        Node("D", NodeKind.CA),
        Node("R", NodeKind.CA),
        Node("switch1", NodeKind.NE),
        Node("switch2", NodeKind.NE),
    ]
    links = [
        Link("A", "switch1", LINK_RATE_BPS, LINK_DELAY_NS),
        Link("B", "switch1", LINK_RATE_BPS, LINK_DELAY_NS),
        Link("C", "switch1", LINK_RATE_BPS, LINK_DELAY_NS),
        Link("switch1", "switch2", LINK_RATE_BPS, LINK_DELAY_NS),
        Link("D", "switch2", LINK_RATE_BPS, LINK_DELAY_NS),
        Link("switch2", "R", LINK_RATE_BPS, LINK_DELAY_NS),
    ]
    flows = [
        FlowSpec(src, src, "R", vl=0, start_ns=0, message_bytes=UNBOUNDED,
                 mtu_payload_bytes=MTU_PAYLOAD_BYTES)
        for src in ("A", "B", "C", "D")
    ]
    return _scenario(nodes, links, flows)


def build_baseline() -> Scenario:
    """One CA sending to R across two switches; no contention anywhere."""
    nodes = [
        Node("A", NodeKind.CA),
        Node("R", NodeKind.CA),
        Node("switch1", NodeKind.NE),
        Node("switch2", NodeKind.NE),
    ]
    links = [
        Link("A", "switch1", LINK_RATE_BPS, LINK_DELAY_NS),
        Link("switch1", "switch2", LINK_RATE_BPS, LINK_DELAY_NS),
        Link("switch2", "R", LINK_RATE_BPS, LINK_DELAY_NS),
    ]
    flows = [
        FlowSpec("A", "A", "R", vl=0, start_ns=0, message_bytes=UNBOUNDED,
                 mtu_payload_bytes=MTU_PAYLOAD_BYTES)
    ]
    return _scenario(nodes, links, flows)


PRESETS = {
    "parking-lot": build_parking_lot,
    "baseline": build_baseline,
}
