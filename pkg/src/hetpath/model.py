"""Analytical throughput model for one TCP flow striped round-robin over n links.

The flow is divided into rounds.  Round ``i`` starts on the arrival of the
``i``-th non-duplicate ACK and releases ``C_i`` segments; it ends when the
next non-duplicate ACK reaches the sender.  For each round the model
computes the expected round duration ``E(T_i)`` and the expected number of
segments covered by the closing ACK ``E(A_{i+1})``, then advances the
window recurrence until the transfer size is reached.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from .core import BITS_PER_BYTE, fmt, ModelConfig, PathSet, Scenario, validate_scenario
from .reorder_prob import m_distribution, q_distribution

DEFAULT_MAX_ROUNDS = 10_000_000


class IterationLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class RoundContext:
    """Everything needed to evaluate a single round."""

    round_index: int
    batch_size_real: float
    window: float
    prior_segment_total: float
    paths: PathSet
    config: ModelConfig

    @property
    def batch_size_int(self) -> int:
        return max(1, round(self.batch_size_real))

    @property
    def prior_total_int(self) -> int:
        return round(self.prior_segment_total)

    @property
    def n(self) -> int:
        return self.paths.n


@dataclass(frozen=True)
class RoundOutcome:
    expected_T: float
    expected_A_next: float


@dataclass(frozen=True)
class RoundRecord:
    context: RoundContext
    outcome: RoundOutcome
    cum_bytes: int
    cum_time_s: float


@dataclass
class ThroughputReport:
    rounds: list[RoundRecord] = field(default_factory=list)
    total_time_s: float = 0.0
    total_bytes: int = 0

    @property
    def throughput_Bps(self) -> float:
        """Average throughput in bytes/second (transfer size over total time)."""
        return self.total_bytes / self.total_time_s

    @property
    def throughput_bps(self) -> float:
        return BITS_PER_BYTE * self.total_bytes / self.total_time_s

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)


def link_index(j: int, n: int, prior_total: int) -> int:
    """1-based link carrying the ``j``-th segment of a round.

    Dispatch is round-robin starting on link 1 and continues across rounds,
    hence the offset by the number of segments sent in earlier rounds.
    """
    return (j - 1 + prior_total) % n + 1


def segment_delay(ctx: RoundContext, j: int) -> float:
    """Time from the start of the round until segment ``j`` reaches the receiver.

    Queuing plus transmission is ``(floor(j/n) + 1)`` segment times on the
    carrying link, followed by its propagation delay.
    """
    n = ctx.n
    link = ctx.paths[link_index(j, n, ctx.prior_total_int) - 1]
    return (j // n + 1) * ctx.config.segment_bits / link.bandwidth_bps + link.prop_delay_s


def _delays(ctx: RoundContext, upto: int) -> list[float]:
    # index 0 unused so that delays[j] is D_{i,j}
    return [0.0] + [segment_delay(ctx, j) for j in range(1, upto + 1)]


def expected_round(ctx: RoundContext) -> RoundOutcome:
    c = ctx.batch_size_int
    m_ack = ctx.config.m_ack
    if c == 1:
        return RoundOutcome(segment_delay(ctx, 1), 1.0)
    if ctx.n == 1:
        # one link delivers in order; the delayed ACK fires on segment min(m_ack, C)
        k = min(m_ack, c)
        return RoundOutcome(segment_delay(ctx, k), float(k))

    mdist = m_distribution(c, m_ack)
    qdist = q_distribution(c)
    top = mdist.top_size
    d = _delays(ctx, top)

    # Case I: segment 1 arrives first
    t_first = math.fsum(d[k] * p for k, p in enumerate(mdist.below[: top - 1], start=1)) + d[top] * mdist.top
    a_first = mdist.expected_acked()
    # Case II: segment 1 arrives later and its arrival fills the gap
    t_other = d[1]
    a_other = qdist.expected()

    pf = 1.0 / c
    return RoundOutcome(
        t_other + pf * (t_first - t_other),
        a_other + pf * (a_first - a_other),
    )


def _ratio_term(c: int, k: int) -> float:
    """(C-k-1)(C-k-1)! / C! as a product of ratios."""
    value = (c - k - 1) / c
    for t in range(1, k + 1):
        value /= c - t
    return value


def expected_T_rearranged(ctx: RoundContext) -> float:
    """E(T_i) written as the first-segment delay plus weighted delay gaps.

    Algebraically identical to :func:`expected_round` but evaluated term by
    term: gaps ``D_{i,k} - D_{i,1}`` for ``k < m_ack`` weighted by
    ``(C-k-1)(C-k-1)!/C!``, and the gap at ``m_ack`` weighted by the tail sum
    over ``k = m_ack..C-2`` plus ``1/C!``.
    """
    c = ctx.batch_size_int
    m_ack = ctx.config.m_ack
    if c == 1:
        return segment_delay(ctx, 1)
    if ctx.n == 1:
        return segment_delay(ctx, min(m_ack, c))
    top = min(m_ack, c)
    d1 = segment_delay(ctx, 1)
    gap_top = segment_delay(ctx, top) - d1

    inv_c_fact = 1.0 / c
    for t in range(1, c):
        inv_c_fact /= t
    tail = math.fsum(_ratio_term(c, k) for k in range(m_ack, c - 1))
    head = math.fsum(
        (segment_delay(ctx, k) - d1) * _ratio_term(c, k) for k in range(1, min(m_ack - 1, c - 2) + 1)
    )
    return gap_top * tail + gap_top * inv_c_fact + d1 + head


@dataclass(frozen=True)
class DelayGap:
    propagation: float
    bandwidth: float
    queueing: float

    @property
    def total(self) -> float:
        return self.propagation + self.bandwidth + self.queueing


def delay_gap(ctx: RoundContext, k: int) -> DelayGap:
    """Split ``D_{i,k} - D_{i,1}`` into propagation, bandwidth and queueing parts."""
    n = ctx.n
    prior = ctx.prior_total_int
    first = ctx.paths[link_index(1, n, prior) - 1]
    kth = ctx.paths[link_index(k, n, prior) - 1]
    s = ctx.config.segment_bits
    b1, bk = first.bandwidth_bps, kth.bandwidth_bps
    if k == 1:
        return DelayGap(0.0, 0.0, 0.0)
    # the queueing term uses floor(1/n) = 0, which only holds for n > 1
    first_queue = (1 // n) * s / b1
    return DelayGap(
        kth.prop_delay_s - first.prop_delay_s,
        (b1 - bk) * s / (bk * b1),
        (k // n) * s / bk - first_queue,
    )


def slow_start_rounds(config: ModelConfig) -> int:
    """Round at which slow start ends: threshold minus initial window."""
    return round(config.ssthresh_segments - config.init_window_segments)


def next_window(w: float, i: int, slow_start_end: int) -> float:
    if i < slow_start_end:
        return w + 1.0
    return w + 1.0 / w


def next_batch(batch: float, expected_acked: float, w: float, i: int, slow_start_end: int) -> float:
    if i < slow_start_end:
        return expected_acked + 1.0
    return expected_acked + 1.0 / w


def run_model(scenario: Scenario, max_rounds: int = DEFAULT_MAX_ROUNDS, keep_trace: bool = True) -> ThroughputReport:
    """Iterate rounds until the cumulative bytes sent reach the transfer size."""
    validate_scenario(scenario)
    cfg = scenario.config
    target = cfg.transfer_bytes
    s = cfg.segment_size_bytes
    i_s = slow_start_rounds(cfg)

    report = ThroughputReport(total_bytes=target)
    w = cfg.init_window_segments
    batch = cfg.init_window_segments
    prior = 0.0
    times = []
    i = 1
    while True:
        if i > max_rounds:
            raise IterationLimitError(f"model did not finish within {max_rounds} rounds")
        ctx = RoundContext(i, batch, w, prior, scenario.paths, cfg)
        outcome = expected_round(ctx)
        times.append(outcome.expected_T)
        prior += batch
        cum_bytes = s * prior
        if keep_trace:
            report.rounds.append(RoundRecord(ctx, outcome, round(cum_bytes), math.fsum(times)))
        if cum_bytes >= target:
            break
        batch = next_batch(batch, outcome.expected_A_next, w, i, i_s)
        w = next_window(w, i, i_s)
        i += 1
    report.total_time_s = math.fsum(times)
    return report


def model_throughput(scenario: Scenario) -> float:
    """Average throughput in bits/second."""
    return run_model(scenario, keep_trace=False).throughput_bps


def write_report_csv(report: ThroughputReport, path: str | Path) -> None:
    """One row per round, then a ``summary`` row.

    The summary row carries the summed batch sizes in ``C``, the transfer
    size in ``cum_bytes`` and the total time in ``E_T_s`` and ``cum_time_s``.
    """
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for rec in report.rounds:
            ctx = rec.context
            writer.writerow([
                ctx.round_index,
                fmt(ctx.window),
                fmt(ctx.batch_size_real),
                fmt(rec.outcome.expected_T),
                fmt(rec.outcome.expected_A_next),
                rec.cum_bytes,
                fmt(rec.cum_time_s),
            ])
        sent = math.fsum(rec.context.batch_size_real for rec in report.rounds)
        writer.writerow(
            ["summary", "", fmt(sent), fmt(report.total_time_s), "", report.total_bytes, fmt(report.total_time_s)]
        )


REPORT_COLUMNS = ["round", "w", "C", "E_T_s", "E_A_next", "cum_bytes", "cum_time_s"]


def read_report_csv(path: str | Path) -> tuple[list[dict[str, float]], dict[str, float]]:
    """Read a report CSV back as (per-round rows, summary) with float values."""
    rows, summary = [], {}
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            if row["round"] == "summary":
                summary = {
                    "total_time_s": float(row["cum_time_s"]),
                    "total_bytes": int(row["cum_bytes"]),
                }
                summary["throughput_bps"] = BITS_PER_BYTE * summary["total_bytes"] / summary["total_time_s"]
            else:
                rows.append({k: float(v) for k, v in row.items()})
    return rows, summary
