"""Builds a live network from a scenario and drives one simulation run."""

from __future__ import annotations

from typing import IO, Optional

from .host import HostNode
from .kernel import Engine, EventKind, RunSummary
from .link import InBuf, Port, compute_auto_watermarks
from .scenario import Scenario, WatermarkMode
from .stats import StatsLedger
from .switch import SwitchNode
from .link import FlowKey

DEFAULT_WINDOW_NS = 100_000


class Simulation:
    """One deterministic run of a scenario.

    Construction wires up nodes, ports and flows; `run()` drives the event
    loop to the configured duration and finalizes statistics.
    """

    def __init__(self, scenario: Scenario, duration_ns: int, seed: int = 0,
                 trace: Optional[IO[str]] = None,
                 window_ns: int = DEFAULT_WINDOW_NS):
        self.scenario = scenario
        self.duration_ns = duration_ns
        self.engine = Engine(seed=seed, trace=trace)
        self.stats = StatsLedger(window_ns=window_ns, duration_ns=duration_ns)
        self.nodes: dict[str, HostNode | SwitchNode] = {}
        self._build()

    def _build(self):
        topo, flows, mech = self.scenario
        engine, stats = self.engine, self.stats

        for node in topo.nodes:
            if node.is_ca:
                self.nodes[node.id] = HostNode(engine, node.id, stats, mech.rcm,
                                               mech.overhead_bytes_per_packet)
            else:
                self.nodes[node.id] = SwitchNode(engine, node.id, stats,
                                                 mech.rcm, mech.num_vls)

        mtu_wire_max = (max((f.mtu_payload_bytes for f in flows), default=2048)
                        + mech.overhead_bytes_per_packet)
        pfc = mech.pfc
        for link in topo.links:
            if not pfc.enabled:
                high, low = mech.ibuf_capacity_credits, mech.ibuf_capacity_credits // 2
            elif pfc.watermark_mode is WatermarkMode.MANUAL:
                high, low = pfc.high_watermark_credits, pfc.low_watermark_credits
            else:
                high, low = compute_auto_watermarks(
                    link, mtu_wire_max, mech.ibuf_capacity_credits,
                    pfc.headroom_extra_bytes)
            ports = []
            for node_id in (link.a, link.b):
                node = self.nodes[node_id]
                ibuf = InBuf(mech.num_vls, mech.ibuf_capacity_credits, high, low,
                             pfc.pause_quanta, pfc_enabled=pfc.enabled)
                port = Port(engine, node, len(node.ports), link, mech.num_vls,
                            ibuf, stats)
                node.add_port(port)
                ports.append(port)
            ports[0].peer = ports[1]
            ports[1].peer = ports[0]

        # resolve static routes to output ports
        port_toward: dict[tuple[str, str], Port] = {}
        for node_id, node in self.nodes.items():
            for port in node.ports:
                link = port.link
                peer_id = link.b if link.a == node_id else link.a
                port_toward[(node_id, peer_id)] = port
        for (node_id, dst), next_hop in topo.routes.items():
            port = port_toward.get((node_id, next_hop))
            if port is None:
                raise ValueError(f"route ({node_id} -> {dst}) via {next_hop} "
                                 "does not follow an attached link")
            self.nodes[node_id].route_port[dst] = port

        for node in self.nodes.values():
            node.finalize()

        for spec in flows:
            key = FlowKey(spec.src, spec.dst, spec.vl)
            stats.register_flow(spec.flow_id, key)
            self.nodes[spec.src].add_flow(spec)

        if self.duration_ns >= self.stats.window_ns:
            self.engine.schedule(self.stats.window_ns, "stats",
                                 EventKind.STATS_SAMPLE, self._on_sample)

    def _on_sample(self):
        now = self.engine.now
        for node in self.nodes.values():
            if isinstance(node, SwitchNode):
                for port in node.ports:
                    for vl in range(port.num_vls):
                        self.stats.record_occupancy(
                            now, node.node_id, port.index, vl,
                            port.ibuf.occupancy_credits(vl))
        at = now + self.stats.window_ns
        if at <= self.duration_ns:
            self.engine.schedule(at, "stats", EventKind.STATS_SAMPLE,
                                 self._on_sample)

    def run(self) -> RunSummary:
        summary = self.engine.run_until(self.duration_ns)
        for node in self.nodes.values():
            node.close(self.duration_ns)
        self.stats.finalize(self.duration_ns)
        return summary

    # -- introspection used by conservation checks ------------------------------

    def buffered_packets(self) -> int:
        return sum(node.buffered_packets() for node in self.nodes.values())

    def wires_in_flight(self) -> int:
        return sum(port.wire.in_flight for node in self.nodes.values()
                   for port in node.ports)

    def data_packets_in_network(self) -> int:
        """Data packets that left their source queue but have not been
        delivered: on a wire or buffered inside a switch."""
        on_wires = sum(port.wire.data_in_flight for node in self.nodes.values()
                       for port in node.ports)
        in_switches = sum(node.buffered_data_packets()
                          for node in self.nodes.values()
                          if isinstance(node, SwitchNode))
        return on_wires + in_switches
