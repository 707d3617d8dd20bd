"""Static SVG charts from a report directory written by ``RunReport.write``."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
# fixed salt so SVG element ids (and therefore bytes) repeat across runs
matplotlib.rcParams["svg.hashsalt"] = "smartt-sim"
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

CHART_KINDS = ("fct_cdf", "cwnd_timeseries", "queue_timeseries", "fairness_bar")

_SOURCES = {
    "fct_cdf": ("flows.csv", ["flow_id", "fct_ns"]),
    "fairness_bar": ("flows.csv", ["flow_id", "size", "fct_ns"]),
    "cwnd_timeseries": ("cwnd_trace.csv", ["time_ns", "flow_id", "cwnd", "quick_adapt"]),
    "queue_timeseries": ("queues.csv", ["time_ns", "port_id", "data_bytes"]),
}


class ChartError(ValueError):
    pass


def _read(report_dir: Path, name: str, needed: list) -> list:
    path = report_dir / name
    if not path.exists():
        raise ChartError(f"{path}: file not found")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        for c in needed:
            if c not in cols:
                raise ChartError(f"{path}: missing column '{c}'")
        rows = list(reader)
    return rows


def fct_cdf_points(fcts) -> tuple:
    """Sorted FCTs and their empirical CDF (last point is 1.0)."""
    x = np.sort(np.asarray(fcts, dtype=float))
    y = np.arange(1, len(x) + 1) / len(x) if len(x) else np.array([])
    return x, y


def _fct_cdf(rows, ax):
    fcts = [float(r["fct_ns"]) / 1e3 for r in rows if r["fct_ns"] != ""]
    if not fcts:
        raise ChartError("no finished flows to plot")
    x, y = fct_cdf_points(fcts)
    ax.step(np.concatenate([[x[0]], x]), np.concatenate([[0.0], y]), where="post")
    ax.set_xlabel("flow completion time (us)")
    ax.set_ylabel("CDF")
    ax.set_ylim(0, 1.02)
    ax.set_title(f"FCT CDF, {len(fcts)} flows, spread {x[-1] - x[0]:.1f} us")


def _fairness_bar(rows, ax):
    done = [r for r in rows if r["fct_ns"] != ""]
    if not done:
        raise ChartError("no finished flows to plot")
    ids = [int(r["flow_id"]) for r in done]
    gbps = [int(r["size"]) * 8 / float(r["fct_ns"]) for r in done]
    ax.bar(range(len(ids)), gbps)
    ax.set_xticks(range(len(ids)))
    ax.set_xticklabels([str(i) for i in ids], fontsize=6)
    ax.set_xlabel("flow")
    ax.set_ylabel("mean throughput (Gb/s)")
    ax.set_title("per-flow throughput")


def _cwnd_timeseries(rows, ax):
    if not rows:
        raise ChartError("empty cwnd trace")
    series: dict = {}
    collapses: dict = {}
    for r in rows:
        fid = int(r["flow_id"])
        t = int(r["time_ns"]) / 1e3
        cw = float(r["cwnd"]) / 1e3
        series.setdefault(fid, ([], []))
        series[fid][0].append(t)
        series[fid][1].append(cw)
        if r["quick_adapt"] == "1":
            collapses.setdefault(fid, ([], []))
            collapses[fid][0].append(t)
            collapses[fid][1].append(cw)
    for fid in sorted(series):
        ax.plot(*series[fid], lw=0.8, label=f"flow {fid}" if len(series) <= 8 else None)
    for fid in sorted(collapses):
        ax.scatter(*collapses[fid], color="red", s=12, zorder=3)
    ax.set_xlabel("time (us)")
    ax.set_ylabel("cwnd (KB)")
    ax.set_title("congestion window (red: QuickAdapt)")
    if len(series) <= 8:
        ax.legend(fontsize=7)


def _queue_timeseries(rows, ax):
    if not rows:
        raise ChartError("empty queue trace")
    series: dict = {}
    for r in rows:
        pid = int(r["port_id"])
        series.setdefault(pid, ([], []))
        series[pid][0].append(int(r["time_ns"]) / 1e3)
        series[pid][1].append(int(r["data_bytes"]) / 1e3)
    # only the busiest ports, otherwise the chart is unreadable
    top = sorted(series, key=lambda p: -max(series[p][1]))[:6]
    for pid in sorted(top):
        ax.step(*series[pid], where="post", lw=0.8, label=f"port {pid}")
    ax.set_xlabel("time (us)")
    ax.set_ylabel("queue (KB)")
    ax.set_title("switch queue occupancy")
    ax.legend(fontsize=7)


_DRAW = {
    "fct_cdf": _fct_cdf,
    "fairness_bar": _fairness_bar,
    "cwnd_timeseries": _cwnd_timeseries,
    "queue_timeseries": _queue_timeseries,
}


def render_charts(report_dir, kinds=CHART_KINDS, out_dir=None) -> list:
    """Write one ``<kind>.svg`` per requested kind; return the paths.

    All inputs are read and checked before any file is written, so a bad
    report produces an error and no partial output.
    """
    report_dir = Path(report_dir)
    out_dir = Path(out_dir) if out_dir is not None else report_dir
    kinds = [kinds] if isinstance(kinds, str) else list(kinds)
    for k in kinds:
        if k not in CHART_KINDS:
            raise ChartError(f"unknown chart kind {k!r}; expected one of {CHART_KINDS}")
    loaded = []
    for k in kinds:
        name, cols = _SOURCES[k]
        loaded.append((k, _read(report_dir, name, cols)))

    figs = []
    for k, rows in loaded:
        fig, ax = plt.subplots(figsize=(6, 4))
        try:
            _DRAW[k](rows, ax)
        except ChartError:
            plt.close(fig)
            for f, _ in figs:
                plt.close(f)
            raise
        fig.tight_layout()
        figs.append((fig, k))

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    # fixed metadata keeps the SVG bytes stable across runs
    for fig, k in figs:
        path = out_dir / f"{k}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written
