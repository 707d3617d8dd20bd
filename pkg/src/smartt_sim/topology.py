"""Fat-tree construction and entropy-based path selection.

Nodes are numbered hosts first (``0 .. n_hosts-1``), then switches. Every
directed link is an egress port with an integer id; a :class:`Path` is the
tuple of port ids from the source NIC to the destination's ToR downlink.

Two shapes are supported:

* 2 tiers (leaf/spine): ``n_hosts / hosts_per_tor`` ToRs, each wired once to
  every spine; ``hosts_per_tor / oversub_ratio`` spines.
* 3 tiers (k-ary fat tree): ``k`` pods of ``k/2`` ToRs and ``k/2``
  aggregation switches, ``(k/2)**2`` cores, ``k**3/4`` hosts. ToRs keep
  ``(k/2) / oversub_ratio`` uplinks.

Oversubscription removes uplinks rather than slowing them, so every link
runs at the same speed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Optional

from .net import HEADER_SIZE, serialization_ns
from .sim import SimTime

Path = tuple


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class FatTreeConfig:
    n_hosts: int = 16
    oversub_ratio: int = 1
    link_speed: float = 800e9
    link_latency: int = 600
    switch_latency: int = 400
    mtu: int = 4096
    tiers: int = 2
    hosts_per_tor: Optional[int] = None

    def validate(self) -> None:
        if self.n_hosts <= 0:
            raise TopologyError("n_hosts must be positive")
        if self.oversub_ratio not in (1, 2, 4, 8):
            raise TopologyError(f"oversub_ratio must be 1, 2, 4 or 8, got {self.oversub_ratio}")
        if self.tiers not in (2, 3):
            raise TopologyError(f"tiers must be 2 or 3, got {self.tiers}")
        if self.link_latency <= 0:
            raise TopologyError("link_latency must be positive (zero-length links are not allowed)")
        if self.switch_latency < 0:
            raise TopologyError("switch_latency must be non-negative")
        if self.link_speed <= 0:
            raise TopologyError("link_speed must be positive")
        if self.mtu <= HEADER_SIZE:
            raise TopologyError(f"mtu must exceed the {HEADER_SIZE}-byte header")

    def radix(self) -> tuple[int, int]:
        """Return ``(hosts_per_tor, n_uplinks_per_tor)`` after validation."""
        self.validate()
        if self.tiers == 2:
            hpt = self.hosts_per_tor or _default_hosts_per_tor(self.n_hosts)
            if self.n_hosts % hpt:
                raise TopologyError(
                    f"{self.n_hosts} hosts do not split into racks of {hpt}")
            if hpt % self.oversub_ratio:
                raise TopologyError(
                    f"{hpt} hosts per ToR cannot be oversubscribed {self.oversub_ratio}:1")
            return hpt, hpt // self.oversub_ratio
        k = round((4 * self.n_hosts) ** (1 / 3))
        if k < 2 or k % 2 or k ** 3 // 4 != self.n_hosts:
            raise TopologyError(
                f"a 3-tier fat tree needs k**3/4 hosts for even k; {self.n_hosts} is not")
        if self.hosts_per_tor not in (None, k // 2):
            raise TopologyError(f"3-tier k={k} fixes hosts_per_tor at {k // 2}")
        half = k // 2
        if half % self.oversub_ratio:
            raise TopologyError(f"k={k} cannot be oversubscribed {self.oversub_ratio}:1")
        return half, half // self.oversub_ratio


def _default_hosts_per_tor(n: int) -> int:
    """Smallest power of two at least sqrt(n) that divides n (falls back to n)."""
    h = 1
    while h * h < n:
        h *= 2
    while h <= n:
        if n % h == 0:
            return h
        h *= 2
    return n


@dataclass(frozen=True)
class PortSpec:
    port_id: int
    src: int
    dst: int
    to_switch: bool


@dataclass
class FatTree:
    """Immutable wiring plus routing tables. Build with :func:`build`."""

    config: FatTreeConfig
    n_switches: int
    tier_of: list  # node -> 0 host, 1 tor, 2 agg/spine, 3 core
    ports: list  # PortSpec indexed by port id
    up_ports: dict = field(repr=False)  # node -> [port ids]
    down_ports: dict = field(repr=False)
    tor_of_host: list = field(repr=False)
    host_port: dict = field(repr=False)  # (tor, host) -> downlink port id
    nic_port: list = field(repr=False)  # host -> NIC egress port id
    pod_of: dict = field(repr=False)
    _reach: dict = field(repr=False, default_factory=dict)
    _tor_paths: dict = field(repr=False, default_factory=dict)
    _paths: dict = field(repr=False, default_factory=dict)

    @property
    def n_hosts(self) -> int:
        return self.config.n_hosts

    @property
    def n_nodes(self) -> int:
        return self.n_hosts + self.n_switches

    @property
    def tors(self) -> list:
        return sorted({t for t in self.tor_of_host})

    def hosts_in_rack(self, tor: int) -> list:
        return [h for h in range(self.n_hosts) if self.tor_of_host[h] == tor]

    @property
    def racks(self) -> list:
        return [self.hosts_in_rack(t) for t in self.tors]

    def same_rack(self, a: int, b: int) -> bool:
        return self.tor_of_host[a] == self.tor_of_host[b]

    def _reach_tors(self, node: int) -> frozenset:
        r = self._reach.get(node)
        if r is None:
            if self.tier_of[node] == 1:
                r = frozenset([node])
            else:
                acc = set()
                for pid in self.down_ports.get(node, ()):
                    acc |= self._reach_tors(self.ports[pid].dst)
                r = frozenset(acc)
            self._reach[node] = r
        return r

    def _switch_paths(self, src_tor: int, dst_tor: int) -> list:
        key = (src_tor, dst_tor)
        cached = self._tor_paths.get(key)
        if cached is not None:
            return cached
        out: list = []
        if src_tor == dst_tor:
            out.append(())
        else:
            frontier = {src_tor: [()]}
            while frontier:
                hits = sorted(n for n in frontier if dst_tor in self._reach_tors(n))
                if hits:
                    for node in hits:
                        for chain in frontier[node]:
                            self._descend(node, dst_tor, list(chain), out)
                    break
                nxt: dict = {}
                for node in sorted(frontier):
                    for pid in self.up_ports.get(node, ()):
                        parent = self.ports[pid].dst
                        nxt.setdefault(parent, []).extend(c + (pid,) for c in frontier[node])
                frontier = nxt
        out.sort()
        self._tor_paths[key] = out
        return out

    def _descend(self, node: int, dst_tor: int, acc: list, out: list) -> None:
        if node == dst_tor:
            out.append(tuple(acc))
            return
        for pid in self.down_ports.get(node, ()):
            child = self.ports[pid].dst
            if dst_tor in self._reach_tors(child):
                acc.append(pid)
                self._descend(child, dst_tor, acc, out)
                acc.pop()

    def paths_between(self, src: int, dst: int) -> list:
        """All shortest up/down paths from host ``src`` to host ``dst``, in a fixed order."""
        if src == dst:
            raise TopologyError("no path from a host to itself")
        key = (src, dst)
        paths = self._paths.get(key)
        if paths is None:
            s_tor, d_tor = self.tor_of_host[src], self.tor_of_host[dst]
            first = self.nic_port[src]
            last = self.host_port[(d_tor, dst)]
            paths = [(first,) + mid + (last,) for mid in self._switch_paths(s_tor, d_tor)]
            self._paths[key] = paths
        return paths

    def n_paths(self, src: int, dst: int) -> int:
        return len(self.paths_between(src, dst))

    def route(self, src: int, dst: int, entropy: int) -> Path:
        paths = self.paths_between(src, dst)
        return paths[entropy % len(paths)]

    def expected_path_count(self, src: int, dst: int) -> int:
        """Closed-form path count for the built radix."""
        hpt, up = self.config.radix()
        if self.same_rack(src, dst):
            return 1
        if self.config.tiers == 2:
            return up
        if self.pod_of[self.tor_of_host[src]] == self.pod_of[self.tor_of_host[dst]]:
            return up
        half = hpt
        return up * half

    def hop_count(self, src: int, dst: int) -> int:
        """Number of egress ports (= links) on a path between two hosts."""
        return len(self.paths_between(src, dst)[0])

    def hop_classes(self) -> list:
        """Distinct path lengths present in this tree, shortest first."""
        classes = {2}
        if self.n_hosts > self.config.radix()[0]:
            classes.add(4)
            if self.config.tiers == 3 and len(set(self.pod_of.values())) > 1:
                classes.add(6)
        return sorted(classes)

    def measure_base_rtt(self, hop_class: Optional[int] = None) -> SimTime:
        """Idle RTT of a full-MTU packet and its header-size ACK over ``hop_class`` links.

        Defaults to the longest path in the tree.
        """
        c = self.config
        links = max(self.hop_classes()) if hop_class is None else hop_class
        switches = links - 1
        ser = serialization_ns(c.mtu, c.link_speed) + serialization_ns(HEADER_SIZE, c.link_speed)
        return 2 * (links * c.link_latency + switches * c.switch_latency) + links * ser

    def base_rtt_between(self, src: int, dst: int) -> SimTime:
        return self.measure_base_rtt(self.hop_count(src, dst))

    @cached_property
    def base_rtt(self) -> SimTime:
        return self.measure_base_rtt()

    def bdp_bytes(self, rtt: Optional[SimTime] = None) -> int:
        rtt = self.base_rtt if rtt is None else rtt
        return int(self.config.link_speed * rtt / 8e9)

    @cached_property
    def queue_capacity(self) -> int:
        return self.bdp_bytes()

    def summary(self) -> dict:
        hpt, up = self.config.radix()
        classes = self.hop_classes()
        return {
            "config": asdict(self.config),
            "n_hosts": self.n_hosts,
            "n_switches": self.n_switches,
            "n_ports": len(self.ports),
            "hosts_per_tor": hpt,
            "uplinks_per_tor": up,
            "paths_by_hop_class": {
                str(h): self._sample_path_count(h) for h in classes
            },
            "base_rtt_ns": {str(h): self.measure_base_rtt(h) for h in classes},
            "bdp_bytes": self.bdp_bytes(),
            "queue_capacity_bytes": self.queue_capacity,
        }

    def _sample_path_count(self, hops: int) -> int:
        for dst in range(1, self.n_hosts):
            if self.hop_count(0, dst) == hops:
                return self.n_paths(0, dst)
        return 0


def build(config: FatTreeConfig) -> FatTree:
    hpt, up = config.radix()
    n = config.n_hosts
    tier_of = [0] * n
    ports: list = []
    up_ports: dict = {}
    down_ports: dict = {}
    host_port: dict = {}
    nic_port = [0] * n
    pod_of: dict = {}
    tor_of_host = [0] * n

    def new_node(tier: int) -> int:
        tier_of.append(tier)
        return len(tier_of) - 1

    def link(a: int, b: int) -> tuple[int, int]:
        """Bidirectional link; returns (a->b port, b->a port)."""
        ab = PortSpec(len(ports), a, b, tier_of[b] > 0)
        ports.append(ab)
        ba = PortSpec(len(ports), b, a, tier_of[a] > 0)
        ports.append(ba)
        return ab.port_id, ba.port_id

    n_tors = n // hpt
    tors = [new_node(1) for _ in range(n_tors)]
    for h in range(n):
        tor = tors[h // hpt]
        tor_of_host[h] = tor
        nic, down = link(h, tor)
        nic_port[h] = nic
        host_port[(tor, h)] = down
        down_ports.setdefault(tor, []).append(down)
        up_ports[h] = [nic]

    if config.tiers == 2:
        spines = [new_node(2) for _ in range(up)] if n_tors > 1 else []
        for tor in tors:
            pod_of[tor] = 0
            for sp in spines:
                u, d = link(tor, sp)
                up_ports.setdefault(tor, []).append(u)
                down_ports.setdefault(sp, []).append(d)
    else:
        k = 2 * hpt
        half = hpt
        aggs_by_pod = []
        for pod in range(k):
            aggs = [new_node(2) for _ in range(half)]
            aggs_by_pod.append(aggs)
            for t in tors[pod * half:(pod + 1) * half]:
                pod_of[t] = pod
                for agg in aggs[:up]:
                    u, d = link(t, agg)
                    up_ports.setdefault(t, []).append(u)
                    down_ports.setdefault(agg, []).append(d)
        cores = [new_node(3) for _ in range(half * half)]
        for ci, core in enumerate(cores):
            agg_idx = ci // half
            for pod in range(k):
                agg = aggs_by_pod[pod][agg_idx]
                u, d = link(agg, core)
                up_ports.setdefault(agg, []).append(u)
                down_ports.setdefault(core, []).append(d)

    return FatTree(
        config=config,
        n_switches=len(tier_of) - n,
        tier_of=tier_of,
        ports=ports,
        up_ports=up_ports,
        down_ports=down_ports,
        tor_of_host=tor_of_host,
        host_port=host_port,
        nic_port=nic_port,
        pod_of=pod_of,
    )
