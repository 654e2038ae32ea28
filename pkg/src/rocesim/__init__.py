"""Packet-level discrete-event simulator of lossless RoCEv2-style fabrics:
IEEE 802.1Qbb per-VL priority flow control plus ECN/CNP congestion
management with a linear rate-reduction ladder."""

from .kernel import Engine, EventKind, RunSummary, SchedulingInPast
from .link import (
    BufferOverflow,
    FlowKey,
    HeadroomExceedsCapacity,
    Packet,
    PacketKind,
    compute_auto_watermarks,
)
from .presets import PRESETS, build_baseline, build_parking_lot
from .scenario import (
    FlowSpec,
    Link,
    MechanismConfig,
    Node,
    ParseError,
    Scenario,
    Topology,
    UNBOUNDED,
    ValidationError,
    parse_scenario,
    render_scenario,
    set_config_value,
    validate_routes,
)
from .simulation import Simulation
from .stats import StatsLedger, UnsupportedFormat, jain_fairness
from .report import finalize_report, write_report_dir

__version__ = "0.1.0"

__all__ = [
    "Engine", "EventKind", "RunSummary", "SchedulingInPast",
    "BufferOverflow", "FlowKey", "HeadroomExceedsCapacity", "Packet",
    "PacketKind", "compute_auto_watermarks",
    "PRESETS", "build_baseline", "build_parking_lot",
    "FlowSpec", "Link", "MechanismConfig", "Node", "ParseError", "Scenario",
    "Topology", "UNBOUNDED", "ValidationError", "parse_scenario",
    "render_scenario", "set_config_value", "validate_routes",
    "Simulation", "StatsLedger", "UnsupportedFormat", "jain_fairness",
    "finalize_report", "write_report_dir",
    "__version__",
]
