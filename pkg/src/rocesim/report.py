"""Report emission: delimited tables, a JSON document, plot-ready series
files, and rendered matplotlib figures.

Report files contain no wall-clock timestamps, so two runs of the same
scenario and seed produce byte-identical text outputs.  Figures are rendered
alongside the delimited output but their bytes depend on the matplotlib
version.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from .stats import StatsLedger, UnsupportedFormat

FLOWS_CSV_HEADER = ("flow,src,dst,vl,steady_gbps,total_bytes,mean_latency_ns,"
                    "marked,cnps,constrained,constraint_degree")


def _flow_key_str(key) -> str:
    return f"{key.src}>{key.dst}@{key.vl}"


def render_flows_csv(stats: StatsLedger) -> str:
    lines = [FLOWS_CSV_HEADER]
    for key in stats.flow_order:
        fs = stats.flows[key]
        lines.append(
            f"{fs.flow_id},{key.src},{key.dst},{key.vl},"
            f"{stats.steady_gbps(key):.6f},{fs.bytes_delivered},"
            f"{fs.mean_latency_ns:.1f},{fs.marked_packets_received},"
            f"{fs.cnps_received_at_src},{fs.rcm_constrained_packets},"
            f"{fs.constraint_degree}"
        )
    return "\n".join(lines) + "\n"


def render_congestion_csv(stats: StatsLedger) -> str:
    lines = ["node,port,kind,start_ns,end_ns,flows"]
    for ev in stats.congestion_events:
        flows = ";".join(sorted(_flow_key_str(k) for k in ev.flows_through))
        lines.append(f"{ev.node},{ev.port},{ev.kind},{ev.start_ns},{ev.end_ns},{flows}")
    return "\n".join(lines) + "\n"


def render_rate_changes_csv(stats: StatsLedger) -> str:
    lines = ["time_ns,flow,old_level,new_level,cause"]
    for rc in stats.rate_changes:
        lines.append(f"{rc.time_ns},{rc.flow_id},{rc.old_level},{rc.new_level},{rc.cause}")
    return "\n".join(lines) + "\n"


def render_pause_intervals_csv(stats: StatsLedger) -> str:
    lines = ["node,port,vl,role,start_ns,end_ns"]
    for pi in stats.pause_intervals:
        lines.append(f"{pi.node},{pi.port},{pi.vl},{pi.role},{pi.start_ns},{pi.end_ns}")
    return "\n".join(lines) + "\n"


def render_throughput_series_csv(stats: StatsLedger) -> str:
    """Long-format series, one row per (flow, window): plot-tool ready."""
    lines = ["flow,window_start_ns,window_end_ns,payload_gbps"]
    for key in stats.flow_order:
        flow_id = stats.flows[key].flow_id
        for start, end, gbps in stats.throughput_series(key):
            lines.append(f"{flow_id},{start},{end},{gbps:.6f}")
    return "\n".join(lines) + "\n"


def render_occupancy_csv(stats: StatsLedger) -> str:
    lines = ["time_ns,node,port,vl,credits"]
    for t, node, port, vl, credits in stats.occupancy_samples:
        lines.append(f"{t},{node},{port},{vl},{credits}")
    return "\n".join(lines) + "\n"


def render_json(stats: StatsLedger) -> str:
    doc = {
        "duration_ns": stats.duration_ns,
        "steady_window_ns": [stats.steady_start_ns, stats.duration_ns],
        "unknown_flow_cnps": stats.unknown_flow_cnps,
        "flows": [],
        "congestion_events": [],
        "rate_changes": [
            {"time_ns": rc.time_ns, "flow": rc.flow_id, "old_level": rc.old_level,
             "new_level": rc.new_level, "cause": rc.cause}
            for rc in stats.rate_changes
        ],
        "pause_intervals": [
            {"node": pi.node, "port": pi.port, "vl": pi.vl, "role": pi.role,
             "start_ns": pi.start_ns, "end_ns": pi.end_ns}
            for pi in stats.pause_intervals
        ],
    }
    for key in stats.flow_order:
        fs = stats.flows[key]
        doc["flows"].append({
            "flow": fs.flow_id,
            "src": key.src,
            "dst": key.dst,
            "vl": key.vl,
            "packets_sent": fs.packets_sent,
            "packets_delivered": fs.packets_delivered,
            "bytes_delivered": fs.bytes_delivered,
            "steady_gbps": stats.steady_gbps(key),
            "total_gbps": stats.total_gbps(key),
            "mean_latency_ns": fs.mean_latency_ns,
            "max_latency_ns": max(fs.latency_samples_ns, default=0),
            "marked_packets_received": fs.marked_packets_received,
            "cnps_emitted": fs.cnps_emitted,
            "cnps_received_at_src": fs.cnps_received_at_src,
            "rcm_constrained_packets": fs.rcm_constrained_packets,
            "constraint_degree": fs.constraint_degree,
            "throughput_windows": [
                {"start_ns": s, "end_ns": e, "payload_gbps": g}
                for s, e, g in stats.throughput_series(key)
            ],
        })
    for ev in stats.congestion_events:
        doc["congestion_events"].append({
            "node": ev.node,
            "port": ev.port,
            "kind": ev.kind,
            "start_ns": ev.start_ns,
            "end_ns": ev.end_ns,
            "flows": sorted(_flow_key_str(k) for k in ev.flows_through),
            "packets_forwarded": ev.packets_forwarded,
            "packets_marked": ev.packets_marked,
        })
    return json.dumps(doc, indent=2) + "\n"


def finalize_report(stats: StatsLedger, t_end: int, fmt: str) -> str:
    """Render the run's report document in the requested format."""
    if not stats.finalized:
        stats.finalize(t_end)
    if fmt == "csv":
        return render_flows_csv(stats)
    if fmt == "json":
        return render_json(stats)
    raise UnsupportedFormat(f"unsupported report format {fmt!r}")


def render_figures(stats: StatsLedger, out_dir: Path) -> list[Path]:
    """Render throughput and occupancy figures as PNG files."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for key in stats.flow_order:
        series = stats.throughput_series(key)
        if not series:
            continue
        xs = [0.5 * (s + e) / 1e6 for s, e, _ in series]
        ys = [g for _, _, g in series]
        ax.plot(xs, ys, label=stats.flows[key].flow_id, linewidth=1.2)
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("payload throughput (Gbps)")
    ax.set_title("Per-flow throughput")
    if stats.flow_order:
        ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    path = out_dir / "throughput.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    by_port: dict[tuple[str, int, int], list[tuple[int, int]]] = {}
    for t, node, port, vl, credits in stats.occupancy_samples:
        by_port.setdefault((node, port, vl), []).append((t, credits))
    if by_port:
        ranked = sorted(by_port.items(),
                        key=lambda item: -max(c for _, c in item[1]))[:8]
        fig, ax = plt.subplots(figsize=(8, 4.5))
        for (node, port, vl), samples in ranked:
            xs = [t / 1e6 for t, _ in samples]
            ys = [c for _, c in samples]
            ax.plot(xs, ys, label=f"{node}.p{port} vl{vl}", linewidth=1.0)
        ax.set_xlabel("time (ms)")
        ax.set_ylabel("input buffer occupancy (credits)")
        ax.set_title("Buffer occupancy (busiest ports)")
        ax.legend(loc="best", fontsize=8)
        ax.grid(True, alpha=0.3)
        path = out_dir / "occupancy.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


def write_report_dir(stats: StatsLedger, out_dir: Path,
                     effective_scenario: Optional[str] = None,
                     figures: bool = True) -> dict[str, Path]:
    """Write every report artifact into out_dir; returns name -> path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {
        "flows.csv": render_flows_csv(stats),
        "report.json": render_json(stats),
        "throughput_timeseries.csv": render_throughput_series_csv(stats),
        "congestion_events.csv": render_congestion_csv(stats),
        "rate_changes.csv": render_rate_changes_csv(stats),
        "pause_intervals.csv": render_pause_intervals_csv(stats),
        "occupancy.csv": render_occupancy_csv(stats),
    }
    if effective_scenario is not None:
        files["effective.scn"] = effective_scenario
    written = {}
    for name, content in files.items():
        path = out_dir / name
        path.write_text(content)
        written[name] = path
    if figures:
        for path in render_figures(stats, out_dir):
            written[path.name] = path
    return written
