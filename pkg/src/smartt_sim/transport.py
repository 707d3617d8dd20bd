"""Sender and receiver endpoints.

Senders are window-limited and pulled by their host's NIC one packet at a
time, round-robin across the host's active flows. Receivers ACK every data
packet (echoing the ECN mark and send timestamp) and NACK every trimmed
header. Lost packets come back through NACKs or, failing that, a per-packet
retransmission timer.
"""

from __future__ import annotations

from collections import deque
from typing import TYPE_CHECKING, Callable, Optional

from .cc import AckInfo, SmarttCc
from .lb import EntropyPool
from .net import HEADER_SIZE, NicPort, Packet, PacketKind
from .sim import EventKind, SimTime

if TYPE_CHECKING:
    from .network import Fabric


class SenderFlow:
    def __init__(
        self,
        flow_id: int,
        src: int,
        dst: int,
        size: int,
        mtu: int,
        cc: SmarttCc,
        lb: EntropyPool,
        fabric: "Fabric",
        on_finish: Optional[Callable[["SenderFlow"], None]] = None,
    ):
        if size <= 0:
            raise ValueError("message size must be positive")
        self.flow_id = flow_id
        self.src = src
        self.dst = dst
        self.size = size
        self.mtu = mtu
        self.cc = cc
        self.lb = lb
        self.fabric = fabric
        self.on_finish = on_finish
        self.n_packets = -(-size // mtu)
        self.next_psn = 0
        self.unacked: dict = {}  # psn -> [size, ts_sent, entropy, timer]
        self.retransmit: deque = deque()
        self._rtx_pending: set = set()
        self.acked: set = set()
        self.bytes_acked = 0
        self.start_time: Optional[SimTime] = None
        self.finish_time: Optional[SimTime] = None
        self.packets_sent = 0
        self.retx_packets = 0
        self.retx_bytes = 0
        self.nacks = 0
        self.timeouts = 0
        self.spurious_acks = 0

    def packet_size(self, psn: int) -> int:
        return min(self.mtu, self.size - psn * self.mtu)

    @property
    def in_flight(self) -> int:
        return self.cc.s.in_flight

    @property
    def finished(self) -> bool:
        return self.finish_time is not None

    @property
    def fct(self) -> Optional[SimTime]:
        if self.finish_time is None or self.start_time is None:
            return None
        return self.finish_time - self.start_time

    def _candidate(self) -> Optional[int]:
        rtx = self.retransmit
        while rtx and rtx[0] not in self._rtx_pending:
            rtx.popleft()
        if rtx:
            return rtx[0]
        if self.next_psn < self.n_packets:
            return self.next_psn
        return None

    def can_send(self) -> bool:
        psn = self._candidate()
        if psn is None:
            return False
        return self.cc.s.in_flight + self.packet_size(psn) <= self.cc.s.cwnd

    def try_send(self, now: SimTime, max_packets: Optional[int] = None) -> list:
        """Emit packets while the window allows; retransmissions go first."""
        out: list = []
        s = self.cc.s
        while max_packets is None or len(out) < max_packets:
            psn = self._candidate()
            if psn is None:
                break
            size = self.packet_size(psn)
            if s.in_flight + size > s.cwnd:
                break
            retx = bool(self.retransmit) and self.retransmit[0] == psn
            if retx:
                self.retransmit.popleft()
                self._rtx_pending.discard(psn)
                self.retx_packets += 1
                self.retx_bytes += size
            else:
                self.next_psn += 1
            entropy = self.lb.next_entropy()
            pkt = Packet(
                self.flow_id, psn, PacketKind.DATA, size, self.src, self.dst,
                entropy=entropy, ts_sent=now,
                path=self.fabric.topo.route(self.src, self.dst, entropy),
            )
            pkt.retx = retx
            timer = self.fabric.sim.at(
                now + self.cc.p.rto, self._on_timeout, (psn, now), EventKind.TIMEOUT)
            self.unacked[psn] = [size, now, entropy, timer]
            s.in_flight += size
            self.packets_sent += 1
            out.append(pkt)
        return out

    def on_ack(self, ack: Packet, now: SimTime) -> None:
        psn = ack.psn
        if psn in self.acked:
            self.spurious_acks += 1
            return
        entry = self.unacked.pop(psn, None)
        if entry is not None:
            size = entry[0]
            self.cc.s.in_flight -= size
            self.fabric.sim.cancel(entry[3])
        elif psn in self._rtx_pending:
            # a copy we had given up on arrived after all
            self._rtx_pending.discard(psn)
            size = self.packet_size(psn)
        else:
            self.spurious_acks += 1
            return
        self.acked.add(psn)
        self.bytes_acked += size
        info = AckInfo(size, ack.ecn_echo, now - ack.ts_sent, ack.entropy)
        decision = self.cc.on_ack(info, now)
        self.lb.on_feedback(ack.entropy, ack.ecn_echo or decision.lb_path_change)
        if self.bytes_acked >= self.size:
            self._finish(now)
        else:
            self.fabric.hosts[self.src].nic.kick()

    def on_nack(self, nack: Packet, now: SimTime) -> None:
        entry = self.unacked.get(nack.psn)
        if entry is None or entry[1] != nack.ts_sent:
            return
        del self.unacked[nack.psn]
        size = entry[0]
        self.cc.s.in_flight -= size
        self.fabric.sim.cancel(entry[3])
        self._queue_retransmit(nack.psn)
        self.nacks += 1
        self.cc.on_trim(size, now)
        self.lb.on_feedback(nack.entropy, True)
        self.fabric.hosts[self.src].nic.kick()

    def _on_timeout(self, payload) -> None:
        psn, ts = payload
        entry = self.unacked.get(psn)
        if entry is None or entry[1] != ts:
            return
        del self.unacked[psn]
        self.cc.s.in_flight -= entry[0]
        self._queue_retransmit(psn)
        self.timeouts += 1
        now = self.fabric.sim.now
        self.cc.on_timeout(entry[0], now)
        self.lb.on_feedback(entry[2], True)
        self.fabric.hosts[self.src].nic.kick()

    def _queue_retransmit(self, psn: int) -> None:
        if psn not in self._rtx_pending:
            self._rtx_pending.add(psn)
            self.retransmit.append(psn)

    def _finish(self, now: SimTime) -> None:
        self.finish_time = now
        for entry in self.unacked.values():
            self.fabric.sim.cancel(entry[3])
        self.unacked.clear()
        self.retransmit.clear()
        self._rtx_pending.clear()
        self.fabric.hosts[self.src].remove_sender(self)
        if self.on_finish is not None:
            self.on_finish(self)


class ReceiverFlow:
    def __init__(self, flow_id: int, host_id: int):
        self.flow_id = flow_id
        self.host_id = host_id
        self.received: set = set()
        self.bytes_received = 0
        self.duplicates = 0

    def on_data(self, p: Packet, now: SimTime) -> Packet:
        if p.psn in self.received:
            self.duplicates += 1
        else:
            self.received.add(p.psn)
            self.bytes_received += p.size
        ack = Packet(p.flow_id, p.psn, PacketKind.ACK, HEADER_SIZE, p.dst, p.src,
                     entropy=p.entropy, ts_sent=p.ts_sent, orig_size=p.size)
        ack.ecn_echo = p.ecn_marked
        return ack

    def on_trimmed(self, h: Packet, now: SimTime) -> Packet:
        return Packet(h.flow_id, h.psn, PacketKind.NACK, HEADER_SIZE, h.dst, h.src,
                      entropy=h.entropy, ts_sent=h.ts_sent, orig_size=h.orig_size)


class Host:
    def __init__(self, host_id: int, fabric: "Fabric"):
        self.host_id = host_id
        self.fabric = fabric
        self.nic: NicPort  # attached by the fabric
        self.senders: dict = {}
        self.receivers: dict = {}
        self._active: deque = deque()

    def add_sender(self, flow: SenderFlow) -> None:
        self.senders[flow.flow_id] = flow
        self._active.append(flow)
        self.nic.kick()

    def remove_sender(self, flow: SenderFlow) -> None:
        try:
            self._active.remove(flow)
        except ValueError:
            pass

    def pull_data(self, now: SimTime) -> Optional[Packet]:
        active = self._active
        for _ in range(len(active)):
            flow = active[0]
            active.rotate(-1)
            pkts = flow.try_send(now, 1)
            if pkts:
                return pkts[0]
        return None

    def has_pending_data(self) -> bool:
        return any(f.can_send() for f in self._active)

    def receive(self, pkt: Packet) -> None:
        now = self.fabric.sim.now
        kind = pkt.kind
        if kind == PacketKind.DATA:
            self.fabric.counters.delivered += 1
            r = self.receivers.get(pkt.flow_id)
            if r is None:
                r = self.receivers[pkt.flow_id] = ReceiverFlow(pkt.flow_id, self.host_id)
            self.send_control(r.on_data(pkt, now))
        elif kind == PacketKind.TRIMMED:
            r = self.receivers.get(pkt.flow_id)
            if r is None:
                r = self.receivers[pkt.flow_id] = ReceiverFlow(pkt.flow_id, self.host_id)
            self.send_control(r.on_trimmed(pkt, now))
        else:
            flow = self.senders.get(pkt.flow_id)
            if flow is None:
                return
            if kind == PacketKind.ACK:
                flow.on_ack(pkt, now)
            else:
                flow.on_nack(pkt, now)

    def send_control(self, pkt: Packet) -> None:
        pkt.path = self.fabric.topo.route(pkt.src, pkt.dst, pkt.entropy)
        pkt.hop = 0
        self.nic.try_enqueue(pkt)
