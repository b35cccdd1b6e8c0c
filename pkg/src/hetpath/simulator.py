"""Deterministic packet-level simulator of one TCP NewReno flow over n links.

Each data segment is handed to the next link in a global round-robin order.
A link is a FIFO server: a segment waits for the link to become idle, is
serialized at the link bandwidth and then propagates for the link delay.
There is no loss and no queue limit.  ACKs travel back after a fixed delay
(zero by default).

The receiver uses delayed cumulative ACKs.  It acknowledges when ``m_ack``
in-order segments have accumulated, when an out-of-order segment arrives,
and when an arriving segment fills a gap.  A pending delayed ACK is also
flushed when no data remains in flight, because otherwise a batch smaller
than ``m_ack`` could never be acknowledged; an explicit delayed-ACK timer
may be configured instead.

The sender only releases new data on ACKs that advance the cumulative
acknowledgment (plus the initial window at time zero).  Fast retransmit is
off by default: with no loss every retransmission is spurious.
"""

from __future__ import annotations

import csv
import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Optional

from .core import BITS_PER_BYTE, fmt, Scenario, validate_scenario


class SimulationDeadlock(RuntimeError):
    pass


class EventKind(IntEnum):
    # value is the tie-break priority at equal timestamps
    SEGMENT_ARRIVAL = 0
    ACK_ARRIVAL = 1
    DELACK_TIMER = 2


@dataclass(frozen=True, order=True)
class SimEvent:
    time: float
    kind: EventKind
    link: int
    seq: int
    counter: int = 0


@dataclass(frozen=True)
class SimOptions:
    fast_retransmit: bool = False
    ack_path_delay_s: float = 0.0
    delayed_ack_timeout_s: Optional[float] = None
    # also records every ACK as (time, cumulative ack) in SimReport.acks
    log_arrivals: bool = False
    max_events: int = 50_000_000

    def __post_init__(self):
        if self.ack_path_delay_s < 0:
            raise ValueError("ack_path_delay_s must be non-negative")
        if self.delayed_ack_timeout_s is not None and self.delayed_ack_timeout_s < 0:
            raise ValueError("delayed_ack_timeout_s must be non-negative")


@dataclass(frozen=True)
class Arrival:
    segment: int
    time: float
    link: int


@dataclass
class SenderState:
    cwnd: float
    ssthresh: float
    next_seq: int = 0
    snd_una: int = 0
    dupack_count: int = 0
    in_recovery: bool = False
    recover: int = 0

    @property
    def outstanding(self) -> int:
        return self.next_seq - self.snd_una

    @property
    def phase(self) -> str:
        return "slow-start" if self.cwnd < self.ssthresh else "congestion-avoidance"


@dataclass
class ReceiverState:
    cumulative_ack: int = 0
    out_of_order: set[int] = field(default_factory=set)
    delayed_ack_counter: int = 0


@dataclass
class SimReport:
    bytes_delivered: int
    finish_time_s: float
    out_of_order_arrivals: int
    spurious_retransmissions: int
    retransmissions: int
    acks_sent: int
    duplicate_acks: int
    max_queue_depth: tuple[int, ...]
    events_processed: int
    arrivals: list[Arrival] = field(default_factory=list, repr=False)
    acks: list[tuple[float, int]] = field(default_factory=list, repr=False)

    @property
    def throughput_bps(self) -> float:
        return BITS_PER_BYTE * self.bytes_delivered / self.finish_time_s

    @property
    def throughput_Bps(self) -> float:
        return self.bytes_delivered / self.finish_time_s


def run_sim(scenario: Scenario, options: SimOptions | None = None, **kwargs) -> SimReport:
    """Simulate the transfer described by ``scenario``.

    Keyword arguments are forwarded to :class:`SimOptions` when ``options``
    is not given, e.g. ``run_sim(sc, fast_retransmit=True)``.
    """
    validate_scenario(scenario)
    if options is None:
        options = SimOptions(**kwargs)
    elif kwargs:
        raise TypeError("pass either options or keyword arguments, not both")
    return _Simulation(scenario, options).run()


class _Simulation:
    def __init__(self, scenario: Scenario, options: SimOptions):
        cfg = scenario.config
        self.opts = options
        self.links = scenario.paths.links
        self.n = len(self.links)
        self.mss = cfg.segment_size_bytes
        self.m_ack = cfg.m_ack
        self.total_bytes = cfg.transfer_bytes
        self.n_segments = cfg.transfer_segments

        self.sender = SenderState(cwnd=cfg.init_window_segments, ssthresh=cfg.ssthresh_segments)
        self.receiver = ReceiverState()
        self.now = 0.0
        self.heap: list[SimEvent] = []
        self.counter = itertools.count()
        self.rr_next = 0
        self.link_free_at = [0.0] * self.n
        self.link_backlog: list[deque[float]] = [deque() for _ in range(self.n)]
        self.max_depth = [0] * self.n
        self.in_flight = 0
        self.delack_token = 0

        self.out_of_order_arrivals = 0
        self.spurious = 0
        self.retransmissions = 0
        self.acks_sent = 0
        self.duplicate_acks = 0
        self.finish_time: Optional[float] = None
        self.arrivals: list[Arrival] = []
        self.acks: list[tuple[float, int]] = []

    # -- helpers

    def _segment_bytes(self, seq: int) -> int:
        if seq == self.n_segments - 1:
            return self.total_bytes - seq * self.mss
        return self.mss

    def _schedule(self, time: float, kind: EventKind, link: int, seq: int) -> None:
        heapq.heappush(self.heap, SimEvent(time, kind, link, seq, next(self.counter)))

    def _transmit(self, seq: int) -> None:
        link_id = self.rr_next
        self.rr_next = (self.rr_next + 1) % self.n
        link = self.links[link_id]
        backlog = self.link_backlog[link_id]
        while backlog and backlog[0] <= self.now:
            backlog.popleft()
        start = max(self.now, self.link_free_at[link_id])
        done = start + link.serialization_time(self._segment_bytes(seq))
        self.link_free_at[link_id] = done
        backlog.append(done)
        self.max_depth[link_id] = max(self.max_depth[link_id], len(backlog))
        self.in_flight += 1
        self._schedule(done + link.prop_delay_s, EventKind.SEGMENT_ARRIVAL, link_id, seq)

    def _send_new_data(self) -> None:
        snd = self.sender
        while snd.next_seq < self.n_segments:
            after = snd.outstanding * self.mss + self._segment_bytes(snd.next_seq)
            # window check in bytes; tolerance absorbs float growth of cwnd
            if after > snd.cwnd * self.mss + 1e-9:
                break
            self._transmit(snd.next_seq)
            snd.next_seq += 1

    def _send_ack(self) -> None:
        self.acks_sent += 1
        self.receiver.delayed_ack_counter = 0
        self.delack_token += 1
        if self.opts.log_arrivals:
            self.acks.append((self.now, self.receiver.cumulative_ack))
        self._schedule(
            self.now + self.opts.ack_path_delay_s, EventKind.ACK_ARRIVAL, 0, self.receiver.cumulative_ack
        )

    # -- receiver

    def _on_segment(self, ev: SimEvent) -> None:
        rcv = self.receiver
        seq = ev.seq
        self.in_flight -= 1
        if self.opts.log_arrivals:
            self.arrivals.append(Arrival(seq, ev.time, ev.link + 1))

        if seq < rcv.cumulative_ack or seq in rcv.out_of_order:
            self.spurious += 1
            self._send_ack()
        elif seq == rcv.cumulative_ack:
            had_gap = bool(rcv.out_of_order)
            rcv.cumulative_ack += 1
            while rcv.cumulative_ack in rcv.out_of_order:
                rcv.out_of_order.remove(rcv.cumulative_ack)
                rcv.cumulative_ack += 1
            if rcv.cumulative_ack == self.n_segments and self.finish_time is None:
                self.finish_time = ev.time
            if had_gap:
                self._send_ack()
            else:
                rcv.delayed_ack_counter += 1
                if rcv.delayed_ack_counter >= self.m_ack:
                    self._send_ack()
                elif rcv.delayed_ack_counter == 1 and self.opts.delayed_ack_timeout_s is not None:
                    self._schedule(
                        self.now + self.opts.delayed_ack_timeout_s,
                        EventKind.DELACK_TIMER,
                        0,
                        self.delack_token,
                    )
        else:
            self.out_of_order_arrivals += 1
            rcv.out_of_order.add(seq)
            self._send_ack()

        if (
            rcv.delayed_ack_counter > 0
            and self.in_flight == 0
            and self.opts.delayed_ack_timeout_s is None
        ):
            self._send_ack()

    def _on_delack_timer(self, ev: SimEvent) -> None:
        if ev.seq == self.delack_token and self.receiver.delayed_ack_counter > 0:
            self._send_ack()

    # -- sender

    def _on_ack(self, ev: SimEvent) -> None:
        snd = self.sender
        ack = ev.seq
        if ack > snd.snd_una:
            newly = ack - snd.snd_una
            snd.snd_una = ack
            snd.dupack_count = 0
            if snd.in_recovery:
                if ack >= snd.recover:
                    snd.in_recovery = False
                    snd.cwnd = snd.ssthresh
                else:
                    # partial ACK: retransmit the next hole, deflate by the amount acked
                    self._retransmit(snd.snd_una)
                    snd.cwnd = max(snd.cwnd - newly + 1, 1.0)
            elif snd.cwnd < snd.ssthresh:
                snd.cwnd += 1.0
            else:
                snd.cwnd += 1.0 / snd.cwnd
            self._send_new_data()
        elif ack == snd.snd_una and snd.outstanding > 0:
            self.duplicate_acks += 1
            snd.dupack_count += 1
            if not self.opts.fast_retransmit:
                return
            if snd.in_recovery:
                snd.cwnd += 1.0
                self._send_new_data()
            elif snd.dupack_count == 3:
                snd.ssthresh = max(snd.outstanding / 2.0, 2.0)
                snd.recover = snd.next_seq
                snd.in_recovery = True
                self._retransmit(snd.snd_una)
                snd.cwnd = snd.ssthresh + 3.0

    def _retransmit(self, seq: int) -> None:
        self.retransmissions += 1
        self._transmit(seq)

    # -- main loop

    def run(self) -> SimReport:
        self._send_new_data()
        processed = 0
        while self.heap and self.finish_time is None:
            ev = heapq.heappop(self.heap)
            self.now = ev.time
            processed += 1
            if processed > self.opts.max_events:
                raise SimulationDeadlock(f"event budget of {self.opts.max_events} exhausted")
            if ev.kind is EventKind.SEGMENT_ARRIVAL:
                self._on_segment(ev)
            elif ev.kind is EventKind.ACK_ARRIVAL:
                self._on_ack(ev)
            else:
                self._on_delack_timer(ev)

        if self.finish_time is None:
            raise SimulationDeadlock(
                f"event queue drained at t={self.now:.6f}s with "
                f"{self.receiver.cumulative_ack}/{self.n_segments} segments delivered in order, "
                f"cwnd={self.sender.cwnd:.3f}, outstanding={self.sender.outstanding}"
            )
        return SimReport(
            bytes_delivered=self.total_bytes,
            finish_time_s=self.finish_time,
            out_of_order_arrivals=self.out_of_order_arrivals,
            spurious_retransmissions=self.spurious,
            retransmissions=self.retransmissions,
            acks_sent=self.acks_sent,
            duplicate_acks=self.duplicate_acks,
            max_queue_depth=tuple(self.max_depth),
            events_processed=processed,
            arrivals=self.arrivals,
            acks=self.acks,
        )


def sim_throughput(scenario: Scenario, **kwargs) -> float:
    return run_sim(scenario, **kwargs).throughput_bps


def arrival_log(report: SimReport) -> list[Arrival]:
    """Arrivals sorted by time, then link, then segment index."""
    return sorted(report.arrivals, key=lambda a: (a.time, a.link, a.segment))


def write_arrival_csv(report: SimReport, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["segment", "arrival_time_s", "link"])
        for a in arrival_log(report):
            writer.writerow([a.segment, fmt(a.time), a.link])


SIM_SUMMARY_COLUMNS = [
    "bytes_delivered",
    "finish_time_s",
    "throughput_bps",
    "out_of_order_arrivals",
    "spurious_retransmissions",
    "retransmissions",
]


def write_sim_summary_csv(report: SimReport, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SIM_SUMMARY_COLUMNS)
        writer.writerow([
            report.bytes_delivered,
            fmt(report.finish_time_s),
            fmt(report.throughput_bps),
            report.out_of_order_arrivals,
            report.spurious_retransmissions,
            report.retransmissions,
        ])
