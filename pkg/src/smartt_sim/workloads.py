"""Traffic patterns as flow schedules, plus ideal completion-time oracles.

A schedule is a list of :class:`FlowSpec`. Flow ids are list positions. A
flow starts at ``start`` or when every flow in ``depends_on`` has finished,
whichever is later.

Schedules round-trip through a plain-text connection matrix, one flow per
line::

    # src dst size start_ns depends_on
    0 5 2097152 0 -
    0 6 2097152 0 0
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .topology import FatTree

WORKLOAD_KINDS = ("incast", "permutation", "alltoall", "matrix")


@dataclass(frozen=True)
class FlowSpec:
    src: int
    dst: int
    size: int
    start: int = 0
    depends_on: tuple = ()


@dataclass
class WorkloadSpec:
    kind: str = "incast"
    msg_size: int = 2 * 1024 * 1024
    fan_in: int = 8
    receiver: int = 0
    # flow index -> size override ("uneven" variants)
    uneven: dict = field(default_factory=dict)
    k_window: int = 1
    seed: int = 0
    matrix_file: Optional[str] = None

    def validate(self, n_hosts: int) -> None:
        if self.kind not in WORKLOAD_KINDS:
            raise ValueError(f"workload kind must be one of {WORKLOAD_KINDS}, got {self.kind!r}")
        if self.msg_size <= 0:
            raise ValueError("msg_size must be positive")
        if self.kind == "incast" and not 0 <= self.fan_in <= n_hosts - 1:
            raise ValueError(f"fan_in must be in [0, {n_hosts - 1}]")
        if self.k_window < 1:
            raise ValueError("k_window must be >= 1")
        if self.kind == "matrix" and not self.matrix_file:
            raise ValueError("matrix workloads need matrix_file")


def gen_incast(
    n: int,
    size: int,
    topo: Optional[FatTree] = None,
    receiver: int = 0,
    n_hosts: Optional[int] = None,
    uneven: Optional[dict] = None,
) -> list:
    """``n`` senders to one receiver, all at t=0. Off-rack senders are picked first."""
    if n == 0:
        return []
    total = topo.n_hosts if topo is not None else n_hosts
    if total is None:
        total = n + 1
    if n > total - 1:
        raise ValueError(f"cannot fit a {n}:1 incast on {total} hosts")
    others = [h for h in range(total) if h != receiver]
    if topo is not None:
        others.sort(key=lambda h: (topo.same_rack(h, receiver), h))
    uneven = uneven or {}
    return [FlowSpec(src, receiver, int(uneven.get(i, size))) for i, src in enumerate(others[:n])]


def gen_permutation(
    racks: Sequence[Sequence[int]],
    size: int,
    seed: int = 0,
    uneven: Optional[dict] = None,
) -> list:
    """One flow per host to a host in a different rack; every host receives once.

    Racks are paired by a seeded derangement (a plain rotation when there
    are only two), hosts inside a rack pair are matched by a seeded shuffle.
    """
    rng = random.Random(seed)
    n_racks = len(racks)
    if n_racks < 2:
        hosts = list(racks[0]) if racks else []
        if len(hosts) < 2:
            return []
        order = hosts[1:] + hosts[:1]
        pairs = list(zip(hosts, order))
    else:
        sizes = {len(r) for r in racks}
        if len(sizes) != 1:
            raise ValueError("permutation needs equally sized racks")
        sigma = _derangement(n_racks, rng)
        pairs = []
        for r, rack in enumerate(racks):
            dst_rack = list(racks[sigma[r]])
            rng.shuffle(dst_rack)
            pairs.extend(zip(rack, dst_rack))
    pairs.sort()
    uneven = uneven or {}
    return [FlowSpec(s, d, int(uneven.get(i, size))) for i, (s, d) in enumerate(pairs)]


def _derangement(n: int, rng: random.Random) -> list:
    while True:
        perm = list(range(n))
        rng.shuffle(perm)
        if all(perm[i] != i for i in range(n)):
            return perm


def gen_alltoall(hosts: Sequence[int], size: int, k: int) -> list:
    """Ring-ordered all-to-all with at most ``k`` outstanding flows per host.

    Host ``i`` sends to ``i+1, i+2, ...`` (mod n) in that order; its j-th flow
    waits for its (j-k)-th flow to finish.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    hosts = list(hosts)
    n = len(hosts)
    flows: list = []
    for i, src in enumerate(hosts):
        mine: list = []
        for j in range(1, n):
            dep = (mine[j - 1 - k],) if j - 1 - k >= 0 else ()
            mine.append(len(flows))
            flows.append(FlowSpec(src, hosts[(i + j) % n], size, 0, dep))
    return flows


def build_schedule(spec: WorkloadSpec, topo: FatTree) -> list:
    spec.validate(topo.n_hosts)
    if spec.kind == "incast":
        return gen_incast(spec.fan_in, spec.msg_size, topo, spec.receiver, uneven=spec.uneven)
    if spec.kind == "permutation":
        return gen_permutation(topo.racks, spec.msg_size, spec.seed, spec.uneven)
    if spec.kind == "alltoall":
        return gen_alltoall(range(topo.n_hosts), spec.msg_size, spec.k_window)
    return read_matrix(spec.matrix_file)


def write_matrix(flows: Iterable[FlowSpec], path) -> None:
    lines = ["# src dst size start_ns depends_on"]
    for f in flows:
        deps = ",".join(str(d) for d in f.depends_on) or "-"
        lines.append(f"{f.src} {f.dst} {f.size} {f.start} {deps}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path) -> list:
    flows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ValueError(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
        src, dst, size, start = (int(x) for x in parts[:4])
        deps = () if parts[4] == "-" else tuple(int(x) for x in parts[4].split(","))
        if any(d < 0 for d in deps):
            raise ValueError(f"{path}:{lineno}: negative dependency id")
        flows.append(FlowSpec(src, dst, size, start, deps))
    for i, f in enumerate(flows):
        if any(d >= len(flows) or d == i for d in f.depends_on):
            raise ValueError(f"{path}: flow {i} depends on an unknown flow")
    return flows


def total_bytes(flows: Iterable[FlowSpec]) -> int:
    return sum(f.size for f in flows)


def ideal_time(flows: Sequence[FlowSpec], topo: FatTree) -> int:
    """Lower bound on makespan, in ns.

    The busiest resource under perfect spreading (a host NIC, a host
    downlink, a rack's uplink bundle or a rack's downlink bundle, and for 3
    tiers a pod's core bundle) sets the transfer time; one base RTT is added
    for the last byte and its ACK. Dependencies and start offsets are
    ignored, so this is a bound, not a prediction.
    """
    if not flows:
        return 0
    cfg = topo.config
    byte_ns = 8e9 / cfg.link_speed
    half, up = cfg.radix()
    tx: dict = {}
    rx: dict = {}
    rack_up: dict = {}
    rack_down: dict = {}
    pod_up: dict = {}
    pod_down: dict = {}
    for f in flows:
        tx[f.src] = tx.get(f.src, 0) + f.size
        rx[f.dst] = rx.get(f.dst, 0) + f.size
        st, dt = topo.tor_of_host[f.src], topo.tor_of_host[f.dst]
        if st != dt:
            rack_up[st] = rack_up.get(st, 0) + f.size
            rack_down[dt] = rack_down.get(dt, 0) + f.size
            if cfg.tiers == 3 and topo.pod_of[st] != topo.pod_of[dt]:
                pod_up[topo.pod_of[st]] = pod_up.get(topo.pod_of[st], 0) + f.size
                pod_down[topo.pod_of[dt]] = pod_down.get(topo.pod_of[dt], 0) + f.size
    loads = [max(tx.values()), max(rx.values())]
    if rack_up:
        loads.append(max(rack_up.values()) / up)
        loads.append(max(rack_down.values()) / up)
    if pod_up:
        # each wired aggregation switch has k/2 core links
        pod_links = up * half
        loads.append(max(pod_up.values()) / pod_links)
        loads.append(max(pod_down.values()) / pod_links)
    start = min(f.start for f in flows)
    return int(start + max(loads) * byte_ns) + topo.base_rtt


def ideal_incast(n: int, size: int, link_speed: float, brtt: int) -> int:
    return int(n * size * 8e9 / link_speed) + brtt


def ideal_permutation(size: int, link_speed: float, brtt: int, oversub: int = 1) -> int:
    return int(size * 8e9 / link_speed * max(1, oversub)) + brtt
