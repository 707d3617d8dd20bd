"""Sender-side congestion control combining ECN, delay and trimming feedback.

One :class:`SmarttCc` per flow. The transport calls :meth:`SmarttCc.on_ack`,
:meth:`SmarttCc.on_trim` and :meth:`SmarttCc.on_timeout`; everything else is
internal but public so it can be exercised directly.

Per ACK, after the ignore check, QuickAdapt and FastIncrease get the first
word; if neither acts, the (ECN, RTT vs. target) pair selects one of four
reactions:

=========  ==============  =========================================
ECN        RTT vs target   reaction
=========  ==============  =========================================
marked     above           multiplicative decrease (once per base RTT)
marked     at/below        leave cwnd alone, ask the LB for a new path
clean      above           fair increase
clean      at/below        proportional increase, then fair increase
=========  ==============  =========================================

The window is clamped to ``[mtu, max_cwnd]`` after every update.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .sim import SimTime

ADJUST_MODES = ("per_packet", "sample_n", "accumulate_window")
INCREASE_MODES = ("fair", "additive")
ECN_LOW_RTT_ACTIONS = ("noop", "md")


@dataclass
class CcParams:
    mtu: int
    brtt: SimTime
    bdp: int
    trtt_factor: float = 1.5
    # absolute queueing-delay target; when set, trtt = brtt + target_delay
    target_delay: Optional[float] = None
    fi: float = 0.25
    # path BDP / reference BDP; scales both increase constants
    bdp_scale: float = 1.0
    pi: Optional[float] = None
    k_fast: int = 2
    fast_eps: float = 0.1
    qa_scaling: float = 1.0
    md_floor: float = 0.5
    md_gain: float = 0.8
    ewma_alpha: float = 1 / 16
    max_cwnd_factor: float = 1.5
    # a full-BDP first window overruns a one-BDP buffer under incast
    initial_cwnd_factor: float = 0.25
    rto_factor: float = 7.0
    rto_override: Optional[SimTime] = None
    trimming: bool = True
    qa_high_rtt_factor: float = 1.5
    qa_low_acked_frac: float = 0.5
    quick_adapt: bool = True
    fast_increase: bool = True
    increase_mode: str = "fair"
    ecn_low_rtt_action: str = "noop"
    adjust_mode: str = "per_packet"
    sample_n: int = 1

    def __post_init__(self):
        if self.trtt <= self.brtt:
            raise ValueError("target RTT must exceed base RTT")
        if not 0 < self.md_gain <= 1:
            raise ValueError("md_gain must be in (0, 1]")
        if not 0 < self.md_floor < 1:
            raise ValueError("md_floor must be in (0, 1)")
        if self.min_cwnd > self.max_cwnd:
            raise ValueError("max_cwnd below one MTU")
        if self.increase_mode not in INCREASE_MODES:
            raise ValueError(f"increase_mode must be one of {INCREASE_MODES}")
        if self.ecn_low_rtt_action not in ECN_LOW_RTT_ACTIONS:
            raise ValueError(f"ecn_low_rtt_action must be one of {ECN_LOW_RTT_ACTIONS}")
        if self.adjust_mode not in ADJUST_MODES:
            raise ValueError(f"adjust_mode must be one of {ADJUST_MODES}")
        if self.sample_n < 1:
            raise ValueError("sample_n must be >= 1")
        if self.effective_pi <= 0:
            raise ValueError("pi must be positive")

    @property
    def trtt(self) -> float:
        if self.target_delay is not None:
            return self.brtt + self.target_delay
        return self.trtt_factor * self.brtt

    @property
    def effective_pi(self) -> float:
        if self.pi is not None:
            return self.pi
        return self.brtt / (self.trtt - self.brtt)

    @property
    def max_cwnd(self) -> float:
        return self.max_cwnd_factor * self.bdp

    @property
    def min_cwnd(self) -> int:
        return self.mtu

    @property
    def initial_cwnd(self) -> float:
        return min(max(self.initial_cwnd_factor * self.bdp, self.min_cwnd), self.max_cwnd)

    @property
    def rto(self) -> SimTime:
        if self.rto_override is not None:
            return self.rto_override
        return int(self.rto_factor * self.brtt)


@dataclass
class FlowCcState:
    cwnd: float
    in_flight: int = 0
    avg_rtt: float = 0.0
    last_md_at: Optional[SimTime] = None
    qa_end: SimTime = 0
    qa_acked: int = 0
    trigger_qa: bool = False
    bytes_to_ignore: int = 0
    bytes_ignored: int = 0
    fi_count: int = 0
    fi_active: bool = False
    last_qa_at: Optional[SimTime] = None
    # adjustment-period bookkeeping
    sample_count: int = 0
    acc_end: SimTime = 0
    acc_increase: float = 0.0
    acc_md: bool = False


@dataclass(frozen=True)
class AckInfo:
    size: int
    ecn: bool
    rtt: SimTime
    entropy: int = 0


@dataclass(frozen=True)
class CcDecision:
    branch: str
    cwnd_delta: float
    lb_path_change: bool = False


class SmarttCc:
    def __init__(self, params: CcParams, flow_id: int = 0, trace: Optional[list] = None):
        self.p = params
        self.s = FlowCcState(cwnd=params.initial_cwnd)
        self.flow_id = flow_id
        self.trace = trace
        self.md_count = 0
        self.qa_count = 0
        self.md_times: list = []
        self.qa_times: list = []
        self._scale = float(params.sample_n) if params.adjust_mode == "sample_n" else 1.0
        # "additive" drops the per-path scaling, so every flow grows by the same bytes per RTT
        scale = params.bdp_scale if params.increase_mode == "fair" else 1.0
        self._fi_const = params.fi * scale
        self._pi_const = params.effective_pi * scale

    @property
    def cwnd(self) -> float:
        return self.s.cwnd

    @property
    def in_flight(self) -> int:
        return self.s.in_flight

    @in_flight.setter
    def in_flight(self, value: int) -> None:
        self.s.in_flight = value

    # -- entry points -------------------------------------------------------

    def on_ack(self, a: AckInfo, now: SimTime) -> CcDecision:
        s, p = self.s, self.p
        before = s.cwnd
        s.qa_acked += a.size
        s.bytes_ignored += a.size
        if s.avg_rtt == 0.0:
            s.avg_rtt = float(a.rtt)
        else:
            s.avg_rtt += p.ewma_alpha * (a.rtt - s.avg_rtt)

        if s.bytes_ignored < s.bytes_to_ignore:
            return self._done(now, "ignore", before)

        adapted = self.quick_adapt(now) if p.quick_adapt else False
        fast = self.fast_increase(a) if p.fast_increase else False
        if adapted or fast:
            return self._done(now, "quick_adapt" if adapted else "fast_increase", before)
        return self.core_cases(a, now, _before=before)

    def on_trim(self, orig_size: int, now: SimTime) -> CcDecision:
        s = self.s
        before = s.cwnd
        s.bytes_ignored += orig_size
        s.cwnd -= orig_size
        s.trigger_qa = True
        branch = "trim"
        if self.p.quick_adapt and s.bytes_ignored >= s.bytes_to_ignore:
            if self.quick_adapt(now):
                branch = "trim_quick_adapt"
        return self._done(now, branch, before, lb=True)

    def on_timeout(self, size: int, now: SimTime) -> CcDecision:
        # lost bytes never come back as ACKs; count them against the ignore budget
        self.s.bytes_ignored += size
        return self._done(now, "timeout", self.s.cwnd)

    # -- the four core cases ------------------------------------------------

    def core_cases(self, a: AckInfo, now: SimTime, _before: Optional[float] = None) -> CcDecision:
        s, p = self.s, self.p
        before = s.cwnd if _before is None else _before

        if p.adjust_mode == "sample_n":
            s.sample_count += 1
            if s.sample_count < p.sample_n:
                return self._done(now, "sample_skip", before, lb=a.ecn and a.rtt <= p.trtt)
            s.sample_count = 0
        elif p.adjust_mode == "accumulate_window":
            self._flush_accumulated(now)

        trtt = p.trtt
        if a.ecn and a.rtt > trtt:
            branch = "md" if self.multiplicative_decrease(now) else "md_hold"
            return self._done(now, branch, before)
        if a.ecn:
            if p.ecn_low_rtt_action == "md":
                self.multiplicative_decrease(now)
            return self._done(now, "lb_path_change", before, lb=True)
        if a.rtt > trtt:
            self._apply_increase(self.fair_increase(a.size))
            return self._done(now, "fair_increase", before)
        self.proportional_increase(a)
        return self._done(now, "proportional_increase", before)

    def multiplicative_decrease(self, now: SimTime) -> bool:
        s, p = self.s, self.p
        if p.adjust_mode == "accumulate_window":
            s.acc_md = True
            return False
        if s.last_md_at is not None and now - s.last_md_at < p.brtt:
            return False
        s.cwnd *= self.md_factor(s.avg_rtt)
        s.last_md_at = now
        self.md_count += 1
        self.md_times.append(now)
        return True

    def md_factor(self, avg_rtt: float) -> float:
        p = self.p
        if avg_rtt <= 0:
            return 1.0
        raw = 1.0 - (avg_rtt - p.trtt) / avg_rtt * p.md_gain
        return min(1.0, max(p.md_floor, raw))

    def fair_increase(self, size: int) -> float:
        """Window growth for one ACK: ``fi`` MTUs per window's worth of ACKs."""
        return size / self.s.cwnd * self.p.mtu * self._fi_const

    def proportional_increase(self, a: AckInfo) -> float:
        s, p = self.s, self.p
        rtt = max(a.rtt, 1)
        delta = min(float(a.size), (p.trtt - rtt) / rtt * (a.size / s.cwnd) * p.mtu * self._pi_const)
        delta = max(delta, 0.0)
        self._apply_increase(delta)
        self._apply_increase(self.fair_increase(a.size))
        return delta

    def _apply_increase(self, delta: float) -> None:
        if self.p.adjust_mode == "accumulate_window":
            self.s.acc_increase += delta
        else:
            self.s.cwnd += delta * self._scale

    def _flush_accumulated(self, now: SimTime) -> None:
        s, p = self.s, self.p
        if now < s.acc_end:
            return
        if s.acc_md and (s.last_md_at is None or now - s.last_md_at >= p.brtt):
            s.cwnd *= self.md_factor(s.avg_rtt)
            s.last_md_at = now
            self.md_count += 1
            self.md_times.append(now)
        s.cwnd += s.acc_increase
        s.acc_increase = 0.0
        s.acc_md = False
        s.acc_end = now + p.brtt

    # -- QuickAdapt / FastIncrease -----------------------------------------

    def quick_adapt(self, now: SimTime) -> bool:
        """Collapse cwnd to the bytes delivered in the last target-RTT window.

        Fires at most once per window and only if a trim (or, without
        trimming, the delay heuristic) armed it during that window.
        """
        s, p = self.s, self.p
        if now < s.qa_end:
            return False
        adapted = False
        if not p.trimming and s.qa_end != 0:
            self.qa_trimless_trigger(now)
        if s.trigger_qa and s.qa_end != 0:
            s.trigger_qa = False
            s.cwnd = max(s.qa_acked * p.qa_scaling, p.mtu)
            s.bytes_to_ignore = s.in_flight
            s.bytes_ignored = 0
            s.last_qa_at = now
            self.qa_count += 1
            self.qa_times.append(now)
            adapted = True
        s.qa_end = int(now + p.trtt)
        s.qa_acked = 0
        return adapted

    def qa_trimless_trigger(self, now: SimTime) -> bool:
        s, p = self.s, self.p
        if p.trimming:
            return False
        if s.avg_rtt > p.qa_high_rtt_factor * p.trtt and s.qa_acked < p.qa_low_acked_frac * s.cwnd:
            s.trigger_qa = True
            return True
        return False

    def fast_increase(self, a: AckInfo) -> bool:
        s, p = self.s, self.p
        if a.rtt <= p.brtt * (1.0 + p.fast_eps) and not a.ecn:
            s.fi_count += a.size
            if s.fi_count > s.cwnd or s.fi_active:
                s.cwnd += p.k_fast * p.mtu
                s.fi_active = True
                return True
        else:
            s.fi_count = 0
            s.fi_active = False
        return s.fi_active

    # -- bookkeeping --------------------------------------------------------

    def clamp(self) -> None:
        s, p = self.s, self.p
        if s.cwnd > p.max_cwnd:
            s.cwnd = p.max_cwnd
        elif s.cwnd < p.min_cwnd:
            s.cwnd = float(p.min_cwnd)

    def _done(self, now: SimTime, branch: str, before: float, lb: bool = False) -> CcDecision:
        self.clamp()
        s = self.s
        if self.trace is not None:
            self.trace.append(
                (now, self.flow_id, s.cwnd, branch, int(branch.endswith("quick_adapt")), int(s.fi_active))
            )
        return CcDecision(branch, s.cwnd - before, lb)
