"""Scenario definition: network topology, traffic flows, and mechanism parameters.

A scenario is a flat, sectioned plain-text document.  Sections `[node]`,
`[link]`, `[flow]` and `[route]` may repeat, one per entity; `[general]`,
`[pfc]` and `[rcm]` appear at most once.  Each section holds `key = value`
lines; `#` starts a comment.  Unknown sections or keys are rejected.

    [general]
    num_vls = 1
    ibuf_capacity_credits = 512        # 64-byte credits per port per VL
    overhead_bytes_per_packet = 108    # wire bytes added to every data payload

    [pfc]
    enabled = true
    watermark_mode = auto              # auto | manual
    pause_quanta = 65535               # quanta carried in a pause frame
    headroom_extra_bytes = 0
    # high_watermark_credits / low_watermark_credits required in manual mode

    [rcm]
    mode = off                         # off | 1a (root/victim) | 1b (demand threshold)
    mark_at = root                     # root | root+victim        (mode 1a only)
    input_threshold_credits = 64
    detection_window_ns = 10us
    hysteresis_ns = 10us               # defaults to detection_window_ns
    victim_memory_ns = 10us            # defaults to detection_window_ns
    recovery_time_ns = 100us
    recovery_bytes = 153600
    recovery_combine = any             # any | all
    cnp_min_interval_ns = 0            # 0 = one CNP per marked packet
    cnp_vl = data                      # data | explicit VL index

    [node]
    id = A
    kind = CA                          # CA (host) | NE (switch)

    [link]
    a = A
    b = switch1
    rate_bps = 40e9
    propagation_delay_ns = 100

    [flow]
    id = A
    src = A
    dst = R
    vl = 0
    start_ns = 0
    message_bytes = unbounded          # unbounded | positive byte count
    mtu_payload_bytes = 2048

    [route]                            # optional; missing entries are
    node = switch1                     # auto-filled by shortest path
    dst = R
    next_hop = switch2

Values with a time unit accept ns/us/ms/s suffixes; bare integers are ns.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Union


class ParseError(Exception):
    """Malformed scenario text; carries the offending line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ValidationError(Exception):
    """Structurally well-formed scenario that violates an invariant."""


class NodeKind(Enum):
    CA = "CA"
    NE = "NE"


class WatermarkMode(Enum):
    AUTO = "auto"
    MANUAL = "manual"


class DetectionMode(Enum):
    OFF = "off"
    ROOT_VICTIM = "1a"
    DEMAND_THRESHOLD = "1b"


class MarkAt(Enum):
    ROOT_ONLY = "root"
    ROOT_AND_VICTIM = "root+victim"


class RecoveryCombine(Enum):
    ANY = "any"
    ALL = "all"


#: message_bytes value for a flow that never runs out of data.
UNBOUNDED: Optional[int] = None


@dataclass
class Node:
    id: str
    kind: NodeKind

    @property
    def is_ca(self) -> bool:
        return self.kind is NodeKind.CA


@dataclass
class Link:
    a: str
    b: str
    rate_bps: int = 40_000_000_000
    propagation_delay_ns: int = 0


@dataclass
class Topology:
    nodes: list[Node] = field(default_factory=list)
    links: list[Link] = field(default_factory=list)
    #: static next hop keyed by (node id, destination CA id)
    routes: dict[tuple[str, str], str] = field(default_factory=dict)

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def has_node(self, node_id: str) -> bool:
        return any(n.id == node_id for n in self.nodes)

    def neighbors(self, node_id: str) -> list[str]:
        out = []
        for link in self.links:
            if link.a == node_id:
                out.append(link.b)
            elif link.b == node_id:
                out.append(link.a)
        return out

    def port_count(self, node_id: str) -> int:
        return len(self.neighbors(node_id))

    def cas(self) -> list[Node]:
        return [n for n in self.nodes if n.is_ca]


@dataclass
class FlowSpec:
    flow_id: str
    src: str
    dst: str
    vl: int = 0
    start_ns: int = 0
    message_bytes: Optional[int] = UNBOUNDED
    mtu_payload_bytes: int = 2048


@dataclass
class PfcConfig:
    enabled: bool = True
    watermark_mode: WatermarkMode = WatermarkMode.AUTO
    high_watermark_credits: Optional[int] = None
    low_watermark_credits: Optional[int] = None
    pause_quanta: int = 65535
    headroom_extra_bytes: int = 0


@dataclass
class RcmConfig:
    mode: DetectionMode = DetectionMode.OFF
    mark_at: MarkAt = MarkAt.ROOT_ONLY
    input_threshold_credits: int = 320
    detection_window_ns: int = 10_000
    hysteresis_ns: Optional[int] = None        # None -> detection_window_ns
    victim_memory_ns: Optional[int] = None     # None -> detection_window_ns
    recovery_time_ns: int = 20_000
    recovery_bytes: int = 153_600
    recovery_combine: RecoveryCombine = RecoveryCombine.ANY
    # CNP damping at the receiver.  A marked packet is reflected as a CNP
    # when either N marked packets of the flow have accumulated
    # (cnp_per_marked, proportional to the flow's share of marked traffic) or
    # the flow has been marked after cnp_max_silence_ns without any CNP
    # (keeps reflection responsive when marking is sustained).  Setting
    # cnp_per_marked=1 reflects every marked packet, which makes the rate
    # ladder overreact to marking bursts and underutilize the bottleneck.
    # cnp_min_interval_ns additionally rate-limits reflection (0 = no limit).
    cnp_per_marked: int = 12
    cnp_max_silence_ns: int = 8_000
    cnp_min_interval_ns: int = 0
    cnp_vl: Optional[int] = None               # None -> same VL as the data flow

    @property
    def effective_hysteresis_ns(self) -> int:
        return self.detection_window_ns if self.hysteresis_ns is None else self.hysteresis_ns

    @property
    def effective_victim_memory_ns(self) -> int:
        return self.detection_window_ns if self.victim_memory_ns is None else self.victim_memory_ns


@dataclass
class MechanismConfig:
    pfc: PfcConfig = field(default_factory=PfcConfig)
    rcm: RcmConfig = field(default_factory=RcmConfig)
    overhead_bytes_per_packet: int = 108
    ibuf_capacity_credits: int = 512
    num_vls: int = 1


class Scenario(NamedTuple):
    topology: Topology
    flows: list[FlowSpec]
    mech: MechanismConfig


@dataclass
class Diagnostic:
    """A route-validation finding; diagnostics are data, not exceptions."""

    kind: str          # "missing" | "cycle" | "bad_hop"
    node: str
    dst: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} route ({self.node} -> {self.dst}): {self.detail}"


# ---------------------------------------------------------------------------
# value converters

_TIME_SUFFIXES = {"ns": 1, "us": 1_000, "ms": 1_000_000, "s": 1_000_000_000}


def parse_duration_ns(text: str) -> int:
    """'10ms' -> 10000000; bare integers are nanoseconds."""
    t = text.strip().lower()
    for suffix in ("ns", "us", "ms", "s"):
        if t.endswith(suffix):
            body = t[: -len(suffix)].strip()
            try:
                value = float(body)
            except ValueError:
                raise ValueError(f"bad duration {text!r}")
            ns = value * _TIME_SUFFIXES[suffix]
            if ns != int(ns):
                raise ValueError(f"duration {text!r} is not a whole number of ns")
            return int(ns)
    try:
        return int(t)
    except ValueError:
        raise ValueError(f"bad duration {text!r}")


def _conv_int(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


def _conv_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _conv_str(text: str) -> str:
    return text.strip()


def _conv_enum(enum_cls):
    def conv(text: str):
        t = text.strip().lower()
        for member in enum_cls:
            if member.value.lower() == t or member.name.lower() == t:
                return member
        choices = "|".join(m.value for m in enum_cls)
        raise ValueError(f"expected one of {choices}, got {text!r}")

    return conv


def _conv_message_bytes(text: str) -> Optional[int]:
    if text.strip().lower() == "unbounded":
        return UNBOUNDED
    v = _conv_int(text)
    if v <= 0:
        raise ValueError("message_bytes must be positive or 'unbounded'")
    return v


def _conv_cnp_vl(text: str) -> Optional[int]:
    if text.strip().lower() == "data":
        return None
    return _conv_int(text)


def _conv_opt_duration(text: str) -> int:
    return parse_duration_ns(text)


# section name -> {key: converter}
_SCHEMAS = {
    "general": {
        "num_vls": _conv_int,
        "ibuf_capacity_credits": _conv_int,
        "overhead_bytes_per_packet": _conv_int,
    },
    "pfc": {
        "enabled": _conv_bool,
        "watermark_mode": _conv_enum(WatermarkMode),
        "high_watermark_credits": _conv_int,
        "low_watermark_credits": _conv_int,
        "pause_quanta": _conv_int,
        "headroom_extra_bytes": _conv_int,
    },
    "rcm": {
        "mode": _conv_enum(DetectionMode),
        "mark_at": _conv_enum(MarkAt),
        "input_threshold_credits": _conv_int,
        "detection_window_ns": _conv_opt_duration,
        "hysteresis_ns": _conv_opt_duration,
        "victim_memory_ns": _conv_opt_duration,
        "recovery_time_ns": _conv_opt_duration,
        "recovery_bytes": _conv_int,
        "recovery_combine": _conv_enum(RecoveryCombine),
        "cnp_per_marked": _conv_int,
        "cnp_max_silence_ns": _conv_opt_duration,
        "cnp_min_interval_ns": _conv_opt_duration,
        "cnp_vl": _conv_cnp_vl,
    },
    "node": {"id": _conv_str, "kind": _conv_enum(NodeKind)},
    "link": {
        "a": _conv_str,
        "b": _conv_str,
        "rate_bps": _conv_int,
        "propagation_delay_ns": _conv_opt_duration,
    },
    "flow": {
        "id": _conv_str,
        "src": _conv_str,
        "dst": _conv_str,
        "vl": _conv_int,
        "start_ns": _conv_opt_duration,
        "message_bytes": _conv_message_bytes,
        "mtu_payload_bytes": _conv_int,
    },
    "route": {"node": _conv_str, "dst": _conv_str, "next_hop": _conv_str},
}

_SINGLETON_SECTIONS = ("general", "pfc", "rcm")


def _split_sections(text: str) -> list[tuple[str, int, dict[str, tuple[str, int]]]]:
    """Return (section name, header line, {key: (raw value, line)}) triples."""
    sections = []
    current: Optional[dict[str, tuple[str, int]]] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError("unterminated section header", lineno)
            name = line[1:-1].strip().lower()
            if name not in _SCHEMAS:
                raise ParseError(f"unknown section [{name}]", lineno)
            current = {}
            sections.append((name, lineno, current))
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        if current is None:
            raise ParseError("key outside of any section", lineno)
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key in current:
            raise ParseError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ParseError(f"empty value for {key!r}", lineno)
        current[key] = (value, lineno)
    return sections


def _apply_section(obj, name: str, table: dict[str, tuple[str, int]]):
    schema = _SCHEMAS[name]
    for key, (raw, lineno) in table.items():
        if key not in schema:
            raise ParseError(f"unknown key {key!r} in [{name}]", lineno)
        try:
            value = schema[key](raw)
        except ValueError as exc:
            raise ParseError(str(exc), lineno)
        setattr(obj, key, value)


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate a scenario document.

    Raises ParseError on malformed syntax or unknown sections/keys, and
    ValidationError when the parsed scenario violates an invariant.
    """
    sections = _split_sections(text)

    mech = MechanismConfig()
    topo = Topology()
    flows: list[FlowSpec] = []
    user_routes: list[tuple[str, str, str, int]] = []
    seen_singletons: set[str] = set()

    for name, header_line, table in sections:
        if name in _SINGLETON_SECTIONS:
            if name in seen_singletons:
                raise ParseError(f"duplicate [{name}] section", header_line)
            seen_singletons.add(name)
            target = {"general": mech, "pfc": mech.pfc, "rcm": mech.rcm}[name]
            _apply_section(target, name, table)
        elif name == "node":
            node = Node(id="", kind=NodeKind.CA)
            _apply_section(node, name, table)
            if not node.id:
                raise ParseError("node requires an id", header_line)
            topo.nodes.append(node)
        elif name == "link":
            link = Link(a="", b="")
            _apply_section(link, name, table)
            if not link.a or not link.b:
                raise ParseError("link requires endpoints a and b", header_line)
            topo.links.append(link)
        elif name == "flow":
            flow = FlowSpec(flow_id="", src="", dst="")
            if "id" in table:
                flow.flow_id = table["id"][0]
            _apply_section(flow, name, {k: v for k, v in table.items() if k != "id"})
            if not flow.src or not flow.dst:
                raise ParseError("flow requires src and dst", header_line)
            if not flow.flow_id:
                flow.flow_id = flow.src
            flows.append(flow)
        elif name == "route":
            entry = type("R", (), {"node": "", "dst": "", "next_hop": ""})()
            _apply_section(entry, name, table)
            if not (entry.node and entry.dst and entry.next_hop):
                raise ParseError("route requires node, dst, next_hop", header_line)
            user_routes.append((entry.node, entry.dst, entry.next_hop, header_line))

    for node_id, dst, next_hop, lineno in user_routes:
        key = (node_id, dst)
        if key in topo.routes:
            raise ParseError(f"duplicate route for ({node_id}, {dst})", lineno)
        topo.routes[key] = next_hop

    finalize_scenario(topo, flows, mech)
    return Scenario(topo, flows, mech)


def finalize_scenario(topo: Topology, flows: list[FlowSpec], mech: MechanismConfig):
    """Fill auto routes and validate every invariant; raises ValidationError."""
    _validate_topology(topo)
    auto_fill_routes(topo)
    diagnostics = validate_routes(topo)
    if diagnostics:
        raise ValidationError("; ".join(str(d) for d in diagnostics))
    _validate_flows(topo, flows, mech)
    validate_mechanism(mech)


def _validate_topology(topo: Topology):
    seen = set()
    for node in topo.nodes:
        if node.id in seen:
            raise ValidationError(f"duplicate node id {node.id!r}")
        seen.add(node.id)
    for link in topo.links:
        for end in (link.a, link.b):
            if end not in seen:
                raise ValidationError(f"link endpoint {end!r} is not a declared node")
        if link.a == link.b:
            raise ValidationError(f"link from {link.a!r} to itself")
        if link.rate_bps <= 0:
            raise ValidationError(f"link {link.a}-{link.b}: rate_bps must be positive")
        if link.propagation_delay_ns < 0:
            raise ValidationError(f"link {link.a}-{link.b}: negative propagation delay")
    pairs = set()
    for link in topo.links:
        key = frozenset((link.a, link.b))
        if key in pairs:
            raise ValidationError(f"parallel link {link.a}-{link.b}: each port attaches to one link")
        pairs.add(key)


def _validate_flows(topo: Topology, flows: list[FlowSpec], mech: MechanismConfig):
    seen = set()
    seen_keys = set()
    for flow in flows:
        if flow.flow_id in seen:
            raise ValidationError(f"duplicate flow id {flow.flow_id!r}")
        seen.add(flow.flow_id)
        key = (flow.src, flow.dst, flow.vl)
        if key in seen_keys:
            raise ValidationError(
                f"flow {flow.flow_id}: duplicate (src, dst, vl) {key}; rate "
                "state is keyed by that triple")
        seen_keys.add(key)
        for end, role in ((flow.src, "src"), (flow.dst, "dst")):
            if not topo.has_node(end):
                raise ValidationError(f"flow {flow.flow_id}: {role} {end!r} is not a node")
            if not topo.node(end).is_ca:
                raise ValidationError(f"flow {flow.flow_id}: {role} {end!r} is not a CA")
        if flow.src == flow.dst:
            raise ValidationError(f"flow {flow.flow_id}: src equals dst")
        if not 0 <= flow.vl < mech.num_vls:
            raise ValidationError(
                f"flow {flow.flow_id}: vl {flow.vl} outside [0, {mech.num_vls})"
            )
        if flow.mtu_payload_bytes < 1:
            raise ValidationError(f"flow {flow.flow_id}: mtu_payload_bytes must be >= 1")
        if flow.start_ns < 0:
            raise ValidationError(f"flow {flow.flow_id}: negative start_ns")
        if (flow.src, flow.dst) not in topo.routes and topo.has_node(flow.src):
            raise ValidationError(f"flow {flow.flow_id}: no route from {flow.src} to {flow.dst}")


def validate_mechanism(mech: MechanismConfig):
    if mech.num_vls < 1:
        raise ValidationError("num_vls must be >= 1")
    if mech.ibuf_capacity_credits < 1:
        raise ValidationError("ibuf_capacity_credits must be >= 1")
    if mech.overhead_bytes_per_packet < 0:
        raise ValidationError("overhead_bytes_per_packet must be >= 0")
    pfc = mech.pfc
    if not 1 <= pfc.pause_quanta <= 65535:
        raise ValidationError("pause_quanta must be in [1, 65535]")
    if pfc.watermark_mode is WatermarkMode.MANUAL:
        if pfc.high_watermark_credits is None or pfc.low_watermark_credits is None:
            raise ValidationError("manual watermark mode requires high and low watermarks")
    high, low = pfc.high_watermark_credits, pfc.low_watermark_credits
    if high is not None and low is not None:
        if low >= high:
            raise ValidationError(
                f"low watermark ({low}) >= high watermark ({high})"
            )
        if high > mech.ibuf_capacity_credits:
            raise ValidationError(
                f"high watermark ({high}) exceeds buffer capacity "
                f"({mech.ibuf_capacity_credits} credits)"
            )
    rcm = mech.rcm
    if rcm.input_threshold_credits < 1:
        raise ValidationError("input_threshold_credits must be >= 1")
    if rcm.detection_window_ns < 1:
        raise ValidationError("detection_window_ns must be >= 1")
    if rcm.recovery_time_ns < 1:
        raise ValidationError("recovery_time_ns must be >= 1")
    if rcm.recovery_bytes < 1:
        raise ValidationError("recovery_bytes must be >= 1")
    if rcm.cnp_per_marked < 1:
        raise ValidationError("cnp_per_marked must be >= 1")
    if rcm.cnp_vl is not None and not 0 <= rcm.cnp_vl < mech.num_vls:
        raise ValidationError(f"cnp_vl {rcm.cnp_vl} outside [0, {mech.num_vls})")


# ---------------------------------------------------------------------------
# routing

def auto_fill_routes(topo: Topology):
    """Add shortest-path next hops for every (node, CA destination) pair that
    has no user-declared route.  Neighbor order follows link declaration
    order, so the fill is deterministic."""
    for dst in topo.cas():
        parents = _bfs_parents(topo, dst.id)
        for node_id, parent in parents.items():
            key = (node_id, dst.id)
            if key not in topo.routes:
                topo.routes[key] = parent


def _bfs_parents(topo: Topology, root: str) -> dict[str, str]:
    parents: dict[str, str] = {}
    visited = {root}
    frontier = [root]
    while frontier:
        next_frontier = []
        for node_id in frontier:
            for peer in topo.neighbors(node_id):
                if peer not in visited:
                    visited.add(peer)
                    parents[peer] = node_id
                    next_frontier.append(peer)
        frontier = next_frontier
    return parents


def validate_routes(topo: Topology) -> list[Diagnostic]:
    """Check completeness and loop-freedom; empty list means routes are good."""
    diagnostics: list[Diagnostic] = []
    neighbor_sets = {n.id: set(topo.neighbors(n.id)) for n in topo.nodes}
    for dst in topo.cas():
        reachable = set(_bfs_parents(topo, dst.id))
        for node in topo.nodes:
            if node.id == dst.id or node.id not in reachable:
                continue
            diag = _walk_route(topo, neighbor_sets, node.id, dst.id)
            if diag is not None:
                diagnostics.append(diag)
    return diagnostics


def _walk_route(topo, neighbor_sets, start: str, dst: str) -> Optional[Diagnostic]:
    visited = [start]
    current = start
    while current != dst:
        next_hop = topo.routes.get((current, dst))
        if next_hop is None:
            return Diagnostic("missing", start, dst,
                              f"no next hop at {current} (unreachable destination)")
        if next_hop not in neighbor_sets.get(current, ()):
            return Diagnostic("bad_hop", start, dst,
                              f"{current} -> {next_hop} is not an attached link")
        if next_hop in visited:
            cycle = " -> ".join(visited[visited.index(next_hop):] + [next_hop])
            return Diagnostic("cycle", start, dst, f"routing cycle {cycle}")
        visited.append(next_hop)
        current = next_hop
    return None


# ---------------------------------------------------------------------------
# rendering and overrides

def render_scenario(scenario: Scenario) -> str:
    """Render to the canonical text form; parse(render(s)) == s."""
    topo, flows, mech = scenario
    out = []

    def block(name, pairs):
        out.append(f"[{name}]")
        for key, value in pairs:
            out.append(f"{key} = {value}")
        out.append("")

    block("general", [
        ("num_vls", mech.num_vls),
        ("ibuf_capacity_credits", mech.ibuf_capacity_credits),
        ("overhead_bytes_per_packet", mech.overhead_bytes_per_packet),
    ])
    pfc_pairs = [
        ("enabled", "true" if mech.pfc.enabled else "false"),
        ("watermark_mode", mech.pfc.watermark_mode.value),
    ]
    if mech.pfc.high_watermark_credits is not None:
        pfc_pairs.append(("high_watermark_credits", mech.pfc.high_watermark_credits))
    if mech.pfc.low_watermark_credits is not None:
        pfc_pairs.append(("low_watermark_credits", mech.pfc.low_watermark_credits))
    pfc_pairs += [
        ("pause_quanta", mech.pfc.pause_quanta),
        ("headroom_extra_bytes", mech.pfc.headroom_extra_bytes),
    ]
    block("pfc", pfc_pairs)
    rcm = mech.rcm
    rcm_pairs = [
        ("mode", rcm.mode.value),
        ("mark_at", rcm.mark_at.value),
        ("input_threshold_credits", rcm.input_threshold_credits),
        ("detection_window_ns", rcm.detection_window_ns),
    ]
    if rcm.hysteresis_ns is not None:
        rcm_pairs.append(("hysteresis_ns", rcm.hysteresis_ns))
    if rcm.victim_memory_ns is not None:
        rcm_pairs.append(("victim_memory_ns", rcm.victim_memory_ns))
    rcm_pairs += [
        ("recovery_time_ns", rcm.recovery_time_ns),
        ("recovery_bytes", rcm.recovery_bytes),
        ("recovery_combine", rcm.recovery_combine.value),
        ("cnp_per_marked", rcm.cnp_per_marked),
        ("cnp_max_silence_ns", rcm.cnp_max_silence_ns),
        ("cnp_min_interval_ns", rcm.cnp_min_interval_ns),
        ("cnp_vl", "data" if rcm.cnp_vl is None else rcm.cnp_vl),
    ]
    block("rcm", rcm_pairs)
    for node in topo.nodes:
        block("node", [("id", node.id), ("kind", node.kind.value)])
    for link in topo.links:
        block("link", [
            ("a", link.a),
            ("b", link.b),
            ("rate_bps", link.rate_bps),
            ("propagation_delay_ns", link.propagation_delay_ns),
        ])
    for flow in flows:
        block("flow", [
            ("id", flow.flow_id),
            ("src", flow.src),
            ("dst", flow.dst),
            ("vl", flow.vl),
            ("start_ns", flow.start_ns),
            ("message_bytes", "unbounded" if flow.message_bytes is UNBOUNDED
             else flow.message_bytes),
            ("mtu_payload_bytes", flow.mtu_payload_bytes),
        ])
    for (node_id, dst), next_hop in sorted(topo.routes.items()):
        block("route", [("node", node_id), ("dst", dst), ("next_hop", next_hop)])
    return "\n".join(out)


#: keys reachable through `--set`; aliases without a section prefix map
#: into [general].
def set_config_value(mech: MechanismConfig, dotted_key: str, raw: str):
    """Apply one `section.key=value` override to a MechanismConfig in place."""
    key = dotted_key.strip().lower()
    if "." not in key:
        key = "general." + key
    section, _, field_name = key.partition(".")
    if section not in _SINGLETON_SECTIONS:
        raise ValidationError(f"unknown config section {section!r} in {dotted_key!r}")
    schema = _SCHEMAS[section]
    if field_name not in schema:
        raise ValidationError(f"unknown config key {dotted_key!r}")
    try:
        value = schema[field_name](raw)
    except ValueError as exc:
        raise ValidationError(f"{dotted_key}: {exc}")
    target = {"general": mech, "pfc": mech.pfc, "rcm": mech.rcm}[section]
    setattr(target, field_name, value)
