"""Packets and output ports.

A port owns two FIFOs: a byte-bounded data queue (RED marking on dequeue,
trimming on overflow) and a control queue that is always drained first.
Ports are store-and-forward: a packet occupies the port for its
serialization time, then arrives at the next hop after the link and, for
switches, the traversal latency.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Optional

from .sim import EventKind, SimTime, Simulator

if TYPE_CHECKING:
    from .transport import Host

HEADER_SIZE = 64


class PacketKind(enum.IntEnum):
    DATA = 0
    TRIMMED = 1
    ACK = 2
    NACK = 3


class Packet:
    """One unit on the wire.

    ``path`` is the tuple of port ids the packet traverses and ``hop`` the
    index of the port it is currently queued at (or heading to).
    """

    __slots__ = (
        "flow_id", "psn", "kind", "size", "orig_size", "entropy",
        "ecn_marked", "ecn_echo", "ts_sent", "src", "dst", "path", "hop",
        "retx",
    )

    def __init__(
        self,
        flow_id: int,
        psn: int,
        kind: PacketKind,
        size: int,
        src: int,
        dst: int,
        entropy: int = 0,
        ts_sent: SimTime = 0,
        orig_size: int = 0,
        path: tuple = (),
    ):
        self.flow_id = flow_id
        self.psn = psn
        self.kind = kind
        self.size = size
        self.orig_size = orig_size
        self.entropy = entropy
        self.ecn_marked = False
        self.ecn_echo = False
        self.ts_sent = ts_sent
        self.src = src
        self.dst = dst
        self.path = path
        self.hop = 0
        self.retx = False

    @property
    def is_control(self) -> bool:
        return self.kind != PacketKind.DATA

    def __repr__(self) -> str:
        return (
            f"Packet({self.kind.name} flow={self.flow_id} psn={self.psn} "
            f"size={self.size} ent={self.entropy} ecn={int(self.ecn_marked)})"
        )


def serialization_ns(size_bytes: int, link_speed: float) -> int:
    """Wire time in whole nanoseconds, rounded up (never below 1 ns)."""
    if link_speed <= 0:
        raise ValueError("link speed must be positive")
    return max(1, math.ceil(size_bytes * 8e9 / link_speed - 1e-9))


@dataclass(frozen=True)
class RedConfig:
    kmin: int
    kmax: int

    def __post_init__(self):
        if not 0 <= self.kmin < self.kmax:
            raise ValueError(f"RED needs 0 <= kmin < kmax, got {self.kmin}, {self.kmax}")

    @classmethod
    def from_fractions(cls, capacity: int, lo: float = 0.2, hi: float = 0.8) -> "RedConfig":
        return cls(int(capacity * lo), int(capacity * hi))

    def marking_probability(self, occupancy: int) -> float:
        if occupancy <= self.kmin:
            return 0.0
        if occupancy >= self.kmax:
            return 1.0
        return (occupancy - self.kmin) / (self.kmax - self.kmin)


class EnqueueResult(enum.Enum):
    ENQUEUED = "enqueued"
    TRIMMED = "trimmed"
    DROPPED = "dropped"
    DROPPED_CTRL = "dropped_ctrl"


@dataclass
class NetCounters:
    """Data-packet fate counters shared by every port in a fabric."""

    injected: int = 0
    delivered: int = 0
    trimmed: int = 0
    dropped: int = 0
    ctrl_dropped: int = 0
    marked: int = 0

    def conserved(self) -> bool:
        return self.injected == self.delivered + self.trimmed + self.dropped


class SwitchPort:
    """Egress port with a strict-priority control queue over a RED data queue.

    ``forward`` is called with the packet once it reaches the far end of the
    link (after serialization, propagation and next-hop traversal).
    """

    def __init__(
        self,
        sim: Simulator,
        port_id: int,
        link_speed: float,
        capacity: int,
        red: Optional[RedConfig],
        forward: Callable[[Packet], None],
        delay_to_next: SimTime,
        trimming: bool = True,
        ctrl_capacity: Optional[int] = None,
        counters: Optional[NetCounters] = None,
        trace: Optional[list] = None,
        name: str = "",
    ):
        if delay_to_next <= 0:
            raise ValueError("zero-length links are not allowed")
        if red is not None and red.kmax > capacity:
            raise ValueError("RED kmax exceeds queue capacity")
        self.sim = sim
        self.port_id = port_id
        self.name = name or f"port{port_id}"
        self.link_speed = link_speed
        self.capacity = capacity
        self.ctrl_capacity = capacity if ctrl_capacity is None else ctrl_capacity
        self.red = red
        self.trimming = trimming
        self.forward = forward
        self.delay_to_next = delay_to_next
        self.counters = counters if counters is not None else NetCounters()
        self.trace = trace

        self.data_queue: deque[Packet] = deque()
        self.ctrl_queue: deque[Packet] = deque()
        self.data_bytes = 0
        self.ctrl_bytes = 0
        self.busy_until: SimTime = 0
        self.max_data_bytes = 0
        self.tx_bytes = 0
        self.busy_ns = 0
        self._wake = None
        self._ser_cache: dict[int, int] = {}

    def ser(self, size: int) -> int:
        ns = self._ser_cache.get(size)
        if ns is None:
            ns = self._ser_cache[size] = serialization_ns(size, self.link_speed)
        return ns

    def _sample(self) -> None:
        if self.trace is not None:
            self.trace.append((self.sim.now, self.port_id, self.data_bytes, self.ctrl_bytes))

    def _push_ctrl(self, pkt: Packet) -> bool:
        if self.ctrl_bytes + pkt.size > self.ctrl_capacity:
            self.counters.ctrl_dropped += 1
            return False
        self.ctrl_queue.append(pkt)
        self.ctrl_bytes += pkt.size
        return True

    def try_enqueue(self, pkt: Packet) -> EnqueueResult:
        if pkt.kind == PacketKind.DATA:
            if self.data_bytes + pkt.size <= self.capacity:
                self.data_queue.append(pkt)
                self.data_bytes += pkt.size
                if self.data_bytes > self.max_data_bytes:
                    self.max_data_bytes = self.data_bytes
                result = EnqueueResult.ENQUEUED
            elif self.trimming:
                self.counters.trimmed += 1
                pkt.kind = PacketKind.TRIMMED
                pkt.orig_size = pkt.size
                pkt.size = HEADER_SIZE
                result = (
                    EnqueueResult.TRIMMED if self._push_ctrl(pkt)
                    else EnqueueResult.DROPPED_CTRL
                )
            else:
                self.counters.dropped += 1
                return EnqueueResult.DROPPED
        elif self._push_ctrl(pkt):
            result = EnqueueResult.ENQUEUED
        else:
            return EnqueueResult.DROPPED_CTRL
        self._sample()
        self.kick()
        return result

    enqueue = try_enqueue

    def dequeue_and_mark(self) -> Optional[Packet]:
        if self.ctrl_queue:
            pkt = self.ctrl_queue.popleft()
            self.ctrl_bytes -= pkt.size
            self._sample()
            return pkt
        if self.data_queue:
            pkt = self.data_queue.popleft()
            self.data_bytes -= pkt.size
            red = self.red
            if red is not None and not pkt.ecn_marked:
                q = self.data_bytes
                if q >= red.kmax:
                    pkt.ecn_marked = True
                elif q > red.kmin:
                    if self.sim.rng.random() < (q - red.kmin) / (red.kmax - red.kmin):
                        pkt.ecn_marked = True
                if pkt.ecn_marked:
                    self.counters.marked += 1
            self._sample()
            return pkt
        return None

    def has_backlog(self) -> bool:
        return bool(self.ctrl_queue or self.data_queue)

    def kick(self) -> None:
        """Start transmitting if idle, else make sure a wake-up is pending."""
        if self._wake is not None:
            return
        now = self.sim.now
        if self.busy_until > now:
            self._wake = self.sim.at(self.busy_until, self._on_wake, None, EventKind.TX_COMPLETE)
            return
        self._transmit(now)

    def _on_wake(self, _) -> None:
        self._wake = None
        self.kick()

    def _transmit(self, now: SimTime) -> None:
        pkt = self.dequeue_and_mark()
        if pkt is None:
            return
        ser = self.ser(pkt.size)
        self.busy_until = now + ser
        self.tx_bytes += pkt.size
        self.busy_ns += ser
        self.sim.at(self.busy_until + self.delay_to_next, self.forward, pkt)
        if self.has_backlog():
            self._wake = self.sim.at(self.busy_until, self._on_wake, None, EventKind.TX_COMPLETE)


class NicPort(SwitchPort):
    """Host egress: control packets queue here, data is pulled from the host's flows.

    Pull-on-idle means a data packet is stamped when it actually starts
    serializing, so the echoed timestamp measures network RTT only.
    """

    def __init__(self, sim: Simulator, port_id: int, link_speed: float, host: "Host",
                 forward: Callable[[Packet], None], delay_to_next: SimTime,
                 counters: Optional[NetCounters] = None, trace: Optional[list] = None,
                 name: str = ""):
        super().__init__(
            sim, port_id, link_speed, capacity=1 << 62, red=None, forward=forward,
            delay_to_next=delay_to_next, trimming=False, ctrl_capacity=1 << 62,
            counters=counters, trace=None, name=name,
        )
        self.host = host

    def dequeue_and_mark(self) -> Optional[Packet]:
        if self.ctrl_queue:
            pkt = self.ctrl_queue.popleft()
            self.ctrl_bytes -= pkt.size
            return pkt
        pkt = self.host.pull_data(self.sim.now)
        if pkt is not None:
            self.counters.injected += 1
        return pkt

    def has_backlog(self) -> bool:
        return bool(self.ctrl_queue) or self.host.has_pending_data()
