"""Run configuration, experiment orchestration and report files.

A run reads one JSON config, builds the tree, plays the workload to
quiescence (or ``t_end_ns``) and writes:

``flows.csv``        one row per flow
``cwnd_trace.csv``   one row per congestion-control event
``queues.csv``       switch queue occupancy on every enqueue/dequeue
``summary.json``     FCT statistics, ideal-time ratio, loss counters
``manifest.json``    config echo and topology summary
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from .cc import CcParams, SmarttCc
from .lb import LB_MODES, make_pool
from .net import RedConfig
from .network import Fabric
from .sim import EventKind, SimTime, Simulator
from .topology import FatTree, FatTreeConfig, TopologyError, build
from .transport import SenderFlow
from .workloads import FlowSpec, WorkloadSpec, build_schedule, ideal_time, total_bytes

SCHEMA_VERSION = 1

FLOWS_COLUMNS = [
    "flow_id", "src", "dst", "size", "start_ns", "finish_ns", "fct_ns",
    "retx_packets", "retx_bytes", "nacks", "timeouts",
]
CWND_COLUMNS = ["time_ns", "flow_id", "cwnd", "branch", "quick_adapt", "fast_increase"]
QUEUE_COLUMNS = ["time_ns", "port_id", "data_bytes", "ctrl_bytes"]

# CcParams fields that come from the topology unless explicitly overridden
_DERIVED_CC = {"mtu", "bdp_scale"}
_CC_KEYS = {f.name for f in dataclasses.fields(CcParams)} - _DERIVED_CC


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    topology: FatTreeConfig = field(default_factory=FatTreeConfig)
    cc: dict = field(default_factory=dict)
    lb_mode: str = "reps"
    trimming: bool = True
    workload: WorkloadSpec = field(default_factory=WorkloadSpec)
    seed: int = 1
    t_end_ns: int = 1_000_000_000
    output_dir: Optional[str] = None
    red: dict = field(default_factory=lambda: {"kmin_frac": 0.2, "kmax_frac": 0.8})
    trace_cwnd: bool = True
    trace_queues: bool = True

    def validate(self) -> None:
        try:
            self.topology.radix()
        except TopologyError as e:
            raise ConfigError(f"topology: {e}") from None
        if self.lb_mode not in LB_MODES:
            raise ConfigError(f"lb_mode: expected one of {LB_MODES}, got {self.lb_mode!r}")
        unknown = sorted(set(self.cc) - _CC_KEYS)
        if unknown:
            raise ConfigError(f"cc.{unknown[0]}: unknown key")
        try:
            self.workload.validate(self.topology.n_hosts)
        except ValueError as e:
            raise ConfigError(f"workload: {e}") from None
        if self.t_end_ns <= 0:
            raise ConfigError("t_end_ns: must be positive")
        self.red_config(1_000_000)
        # surface bad cc values now rather than at the first flow
        self.cc_params(mtu=self.topology.mtu, brtt=10_000, bdp=1_000_000)

    def red_config(self, capacity: int) -> RedConfig:
        unknown = sorted(set(self.red) - {"kmin_frac", "kmax_frac", "kmin", "kmax"})
        if unknown:
            raise ConfigError(f"red.{unknown[0]}: unknown key")
        if "kmin" in self.red or "kmax" in self.red:
            kmin = int(self.red.get("kmin", 0.2 * capacity))
            kmax = int(self.red.get("kmax", 0.8 * capacity))
        else:
            kmin = int(self.red.get("kmin_frac", 0.2) * capacity)
            kmax = int(self.red.get("kmax_frac", 0.8) * capacity)
        if not 0 <= kmin < kmax:
            raise ConfigError(f"red: need 0 <= kmin < kmax, got kmin={kmin} kmax={kmax}")
        if kmax > capacity:
            raise ConfigError(f"red.kmax: {kmax} exceeds queue capacity {capacity}")
        return RedConfig(kmin, kmax)

    def cc_params(self, mtu: int, brtt: int, bdp: int, bdp_scale: float = 1.0) -> CcParams:
        kw: dict = {"mtu": mtu, "brtt": brtt, "bdp": bdp, "bdp_scale": bdp_scale,
                    "trimming": self.trimming}
        kw.update(self.cc)
        try:
            return CcParams(**kw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"cc: {e}") from None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _from_mapping(cls, data: Any, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError(f"{path}.{key}: unknown key" if path else f"{key}: unknown key")
    return data


def config_from_dict(data: dict, base_dir=None) -> RunConfig:
    """Build and validate a config; relative matrix paths resolve against ``base_dir``."""
    _from_mapping(RunConfig, data, "")
    data = dict(data)
    topo = FatTreeConfig(**_from_mapping(FatTreeConfig, data.pop("topology", {}), "topology"))
    wl_raw = dict(_from_mapping(WorkloadSpec, data.pop("workload", {}), "workload"))
    if "uneven" in wl_raw:
        wl_raw["uneven"] = {int(k): int(v) for k, v in wl_raw["uneven"].items()}
    mf = wl_raw.get("matrix_file")
    if mf and base_dir is not None and not Path(mf).is_absolute():
        wl_raw["matrix_file"] = str(Path(base_dir) / mf)
    wl = WorkloadSpec(**wl_raw)
    cc = data.pop("cc", {})
    if not isinstance(cc, dict):
        raise ConfigError("cc: expected an object")
    cfg = RunConfig(topology=topo, workload=wl, cc=dict(cc), **data)
    cfg.validate()
    return cfg


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None
    return config_from_dict(data, base_dir=Path(path).parent)


def set_by_path(data: dict, dotted: str, value: Any) -> dict:
    """Return a deep copy of ``data`` with ``a.b.c`` set to ``value``."""
    out = json.loads(json.dumps(data))
    node = out
    keys = dotted.split(".")
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value
    return out


@dataclass
class FlowRecord:
    flow_id: int
    src: int
    dst: int
    size: int
    start_ns: Optional[int]
    finish_ns: Optional[int]
    fct_ns: Optional[int]
    retx_packets: int
    retx_bytes: int
    nacks: int
    timeouts: int
    spurious_acks: int = 0


@dataclass
class RunReport:
    config: dict
    topology: dict
    flows: list
    counters: dict
    cwnd_trace: list
    queue_trace: list
    ideal_ns: int
    complete: bool
    end_time_ns: int
    events_processed: int

    def fcts(self) -> list:
        return [f.fct_ns for f in self.flows if f.fct_ns is not None]

    def summary(self) -> dict:
        fcts = np.array(self.fcts(), dtype=float)
        finished = [f for f in self.flows if f.finish_ns is not None]
        if finished and self.complete:
            makespan = max(f.finish_ns for f in finished) - min(f.start_ns for f in self.flows
                                                                 if f.start_ns is not None)
        else:
            makespan = None
        msg_bytes = sum(f.size for f in self.flows)

        def pct(q):
            return float(np.percentile(fcts, q)) if fcts.size else None

        return {
            "schema_version": SCHEMA_VERSION,
            "complete": self.complete,
            "n_flows": len(self.flows),
            "n_finished": len(finished),
            "fct_min": float(fcts.min()) if fcts.size else None,
            "fct_max": float(fcts.max()) if fcts.size else None,
            "fct_mean": float(fcts.mean()) if fcts.size else None,
            "fct_p50": pct(50),
            "fct_p99": pct(99),
            "fct_delta": float(fcts.max() - fcts.min()) if fcts.size else None,
            "completion_time": makespan,
            "ideal_ns": self.ideal_ns,
            "ideal_ratio": makespan / self.ideal_ns if self.ideal_ns and makespan is not None else None,
            "message_bytes": msg_bytes,
            "trims": self.counters["trimmed"],
            "drops": self.counters["dropped"],
            "ctrl_drops": self.counters["ctrl_dropped"],
            "ecn_marks": self.counters["marked"],
            "injected": self.counters["injected"],
            "delivered": self.counters["delivered"],
            "conservation_ok": self.counters["injected"] == (
                self.counters["delivered"] + self.counters["trimmed"] + self.counters["dropped"]),
            "retransmissions": sum(f.retx_packets for f in self.flows),
            "retransmitted_bytes": sum(f.retx_bytes for f in self.flows),
            "retransmit_fraction": (sum(f.retx_bytes for f in self.flows) / msg_bytes
                                    if msg_bytes else 0.0),
            "nacks": sum(f.nacks for f in self.flows),
            "timeouts": sum(f.timeouts for f in self.flows),
            "spurious_acks": sum(f.spurious_acks for f in self.flows),
            "max_queue_bytes": self.counters.get("max_queue_bytes", 0),
            "end_time_ns": self.end_time_ns,
            "events_processed": self.events_processed,
        }

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "flows.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(FLOWS_COLUMNS)
            for f in self.flows:
                w.writerow(["" if v is None else v for v in (
                    f.flow_id, f.src, f.dst, f.size, f.start_ns, f.finish_ns, f.fct_ns,
                    f.retx_packets, f.retx_bytes, f.nacks, f.timeouts)])
        with open(out / "cwnd_trace.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CWND_COLUMNS)
            for t, fid, cwnd, branch, qa, fi in self.cwnd_trace:
                w.writerow((t, fid, f"{cwnd:.1f}", branch, qa, fi))
        with open(out / "queues.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(QUEUE_COLUMNS)
            w.writerows(self.queue_trace)
        (out / "summary.json").write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        manifest = {"schema_version": SCHEMA_VERSION, "config": self.config, "topology": self.topology}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return out


class Experiment:
    """A configured, not-yet-run simulation. Tests poke at its internals."""

    def __init__(self, cfg: RunConfig, schedule: Optional[list] = None):
        cfg.validate()
        self.cfg = cfg
        self.topo: FatTree = build(cfg.topology)
        self.sim = Simulator(cfg.seed)
        self.queue_trace: Optional[list] = [] if cfg.trace_queues else None
        self.cwnd_trace: Optional[list] = [] if cfg.trace_cwnd else None
        self.fabric = Fabric(self.sim, self.topo, trimming=cfg.trimming,
                             red=cfg.red_config(self.topo.queue_capacity),
                             queue_trace=self.queue_trace)
        self.schedule: list = build_schedule(cfg.workload, self.topo) if schedule is None else schedule
        self.flows: list = [None] * len(self.schedule)
        self._dependents: dict = {}
        self._waiting: dict = {}
        self._finished: set = set()
        self.on_flow_finish: list = []
        ref_bdp = self.topo.bdp_bytes()
        self._ref_bdp = ref_bdp
        for i, spec in enumerate(self.schedule):
            if spec.src == spec.dst:
                raise ConfigError(f"flow {i}: source equals destination")
            for h in (spec.src, spec.dst):
                if not 0 <= h < self.topo.n_hosts:
                    raise ConfigError(f"flow {i}: host {h} out of range")
            if spec.depends_on:
                self._waiting[i] = set(spec.depends_on)
                for d in spec.depends_on:
                    self._dependents.setdefault(d, []).append(i)
            else:
                self.sim.at(spec.start, self._start_flow, i, EventKind.APP_START)

    def cc_params_for(self, src: int, dst: int) -> CcParams:
        brtt = self.topo.base_rtt_between(src, dst)
        bdp = self.topo.bdp_bytes(brtt)
        return self.cfg.cc_params(self.topo.config.mtu, brtt, bdp, bdp / self._ref_bdp)

    def _start_flow(self, i: int) -> None:
        spec: FlowSpec = self.schedule[i]
        cc = SmarttCc(self.cc_params_for(spec.src, spec.dst), flow_id=i, trace=self.cwnd_trace)
        lb = make_pool(self.cfg.lb_mode, self.topo.n_paths(spec.src, spec.dst), self.sim.rng)
        flow = SenderFlow(i, spec.src, spec.dst, spec.size, self.topo.config.mtu, cc, lb,
                          self.fabric, on_finish=self._flow_done)
        flow.start_time = self.sim.now
        self.flows[i] = flow
        self.fabric.hosts[spec.src].add_sender(flow)

    def _flow_done(self, flow: SenderFlow) -> None:
        self._finished.add(flow.flow_id)
        for cb in self.on_flow_finish:
            cb(flow)
        for j in self._dependents.get(flow.flow_id, ()):
            waiting = self._waiting[j]
            waiting.discard(flow.flow_id)
            if not waiting:
                start = max(self.schedule[j].start, self.sim.now)
                self.sim.at(start, self._start_flow, j, EventKind.APP_START)

    def add_probe(self, interval: SimTime, fn: Callable[[SimTime], None],
                  until: Optional[SimTime] = None) -> None:
        """Call ``fn(now)`` every ``interval`` ns while flows are unfinished."""

        def tick(_):
            fn(self.sim.now)
            if len(self._finished) < len(self.schedule) and (
                    until is None or self.sim.now + interval <= until):
                self.sim.after(interval, tick, None, EventKind.MEASUREMENT_TICK)

        self.sim.after(interval, tick, None, EventKind.MEASUREMENT_TICK)

    @property
    def done(self) -> bool:
        return len(self._finished) == len(self.schedule)

    def run(self) -> RunReport:
        self.sim.run_until(self.cfg.t_end_ns)
        return self.report()

    def report(self) -> RunReport:
        records = []
        for i, spec in enumerate(self.schedule):
            f = self.flows[i]
            if f is None:
                records.append(FlowRecord(i, spec.src, spec.dst, spec.size, None, None, None, 0, 0, 0, 0))
                continue
            records.append(FlowRecord(
                i, f.src, f.dst, f.size, f.start_time, f.finish_time, f.fct,
                f.retx_packets, f.retx_bytes, f.nacks, f.timeouts, f.spurious_acks))
        counters = dataclasses.asdict(self.fabric.counters)
        counters["max_queue_bytes"] = max(
            (p.max_data_bytes for p in self.fabric.switch_ports()), default=0)
        return RunReport(
            config=self.cfg.to_dict(),
            topology=self.topo.summary(),
            flows=records,
            counters=counters,
            cwnd_trace=self.cwnd_trace or [],
            queue_trace=self.queue_trace or [],
            ideal_ns=ideal_time(self.schedule, self.topo),
            complete=self.done,
            end_time_ns=self.sim.now,
            events_processed=self.sim.stats().events_processed,
        )


def run_experiment(cfg: RunConfig, out_dir=None, schedule: Optional[list] = None) -> RunReport:
    report = Experiment(cfg, schedule).run()
    target = out_dir if out_dir is not None else cfg.output_dir
    if target is not None:
        report.write(target)
    return report
