"""Runtime fabric: one port object per directed link, one host per NIC."""

from __future__ import annotations

from typing import Optional

from .net import NetCounters, NicPort, Packet, RedConfig, SwitchPort
from .sim import Simulator
from .topology import FatTree
from .transport import Host


class Fabric:
    def __init__(
        self,
        sim: Simulator,
        topo: FatTree,
        trimming: bool = True,
        red_fractions: tuple = (0.2, 0.8),
        queue_trace: Optional[list] = None,
        red: Optional[RedConfig] = None,
    ):
        self.sim = sim
        self.topo = topo
        self.trimming = trimming
        self.counters = NetCounters()
        self.queue_trace = queue_trace
        cfg = topo.config
        cap = topo.queue_capacity
        if red is None:
            red = RedConfig.from_fractions(cap, *red_fractions)
        self.hosts = [Host(h, self) for h in range(topo.n_hosts)]
        self.ports: list = [None] * len(topo.ports)
        for spec in topo.ports:
            delay = cfg.link_latency + (cfg.switch_latency if spec.to_switch else 0)
            if spec.src < topo.n_hosts:
                host = self.hosts[spec.src]
                port = NicPort(sim, spec.port_id, cfg.link_speed, host, self.arrive, delay,
                               counters=self.counters, name=f"nic{spec.src}")
                host.nic = port
            else:
                port = SwitchPort(
                    sim, spec.port_id, cfg.link_speed, cap, red, self.arrive, delay,
                    trimming=trimming, counters=self.counters, trace=queue_trace,
                    name=f"sw{spec.src}->{spec.dst}",
                )
            self.ports[spec.port_id] = port

    def arrive(self, pkt: Packet) -> None:
        pkt.hop += 1
        path = pkt.path
        if pkt.hop < len(path):
            self.ports[path[pkt.hop]].try_enqueue(pkt)
        else:
            self.hosts[pkt.dst].receive(pkt)

    def switch_ports(self) -> list:
        return [p for p in self.ports if not isinstance(p, NicPort)]

    def port_names(self) -> dict:
        return {p.port_id: p.name for p in self.ports}

    def quiescent(self) -> bool:
        return all(not p.has_backlog() for p in self.ports) and self.sim.pending == 0
