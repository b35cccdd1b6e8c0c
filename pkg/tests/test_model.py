import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetpath.core import ModelConfig, PathSet, Scenario, mbps, ms
from hetpath.model import (
    IterationLimitError,
    RoundContext,
    delay_gap,
    expected_T_rearranged,
    expected_round,
    link_index,
    next_batch,
    next_window,
    read_report_csv,
    run_model,
    segment_delay,
    slow_start_rounds,
    write_report_csv,
)

S_BITS = 536 * 8


def ctx_for(bandwidths, delays, c, m_ack=2, prior=0, seg=536):
    paths = PathSet.from_lists(bandwidths, delays)
    return RoundContext(1, float(c), float(c), float(prior), paths, ModelConfig(segment_size_bytes=seg, m_ack=m_ack))


def enumerate_round(ctx):
    """Average T and A over every arrival order of the batch, equally likely.

    If segment 1 lands first the ACK waits for ``m_ack`` consecutive in-order
    segments (or the whole batch); otherwise the arrival of segment 1 fires
    the ACK covering every segment already present in sequence.
    """
    c, m_ack = ctx.batch_size_int, ctx.config.m_ack
    d = {j: segment_delay(ctx, j) for j in range(1, c + 1)}
    total_t = total_a = 0.0
    orders = list(itertools.permutations(range(1, c + 1)))
    for order in orders:
        if order[0] == 1:
            run = 1
            while run < len(order) and order[run] == run + 1:
                run += 1
            m = min(run, m_ack)
            total_t += d[m]
            total_a += m
        else:
            seen = set(order[: order.index(1) + 1])
            q = 0
            while q + 1 in seen:
                q += 1
            total_t += d[1]
            total_a += q
    return total_t / len(orders), total_a / len(orders)


# -- link_index and segment_delay


@pytest.mark.parametrize("j, n, prior, expected", [(1, 3, 0, 1), (4, 3, 0, 1), (2, 3, 5, 1), (5, 1, 9, 1)])
def test_link_index(j, n, prior, expected):
    assert link_index(j, n, prior) == expected


def test_segment_delay_first_segment():
    ctx = ctx_for([mbps(1), mbps(2)], [ms(10), ms(20)], 4)
    assert segment_delay(ctx, 1) == pytest.approx(0.014288, abs=1e-15)


def test_segment_delay_third_segment_queues_behind_one():
    ctx = ctx_for([mbps(2), mbps(1)], [ms(20), ms(10)], 4)
    assert segment_delay(ctx, 3) == pytest.approx(0.024288, abs=1e-15)


def test_segment_delay_uses_prior_offset():
    # two segments already sent, so segment 1 of this round goes on link 3
    ctx = ctx_for([mbps(1), mbps(1), mbps(4)], [ms(10), ms(10), ms(30)], 3, prior=2)
    assert segment_delay(ctx, 1) == pytest.approx(S_BITS / 4e6 + 0.030)


def test_segment_delay_vanishing_segment():
    ctx = ctx_for([1e18], [ms(7)], 1)
    assert segment_delay(ctx, 1) == pytest.approx(0.007)


def test_segment_delay_counts_the_jth_segment_as_quotient():
    # with n = 2, segment j = 2 already sees one queued segment time
    ctx = ctx_for([mbps(1), mbps(1)], [ms(10), ms(10)], 2)
    assert segment_delay(ctx, 2) == pytest.approx(2 * S_BITS / 1e6 + 0.010)


# -- expected_round


def test_c2_closed_form():
    ctx = ctx_for([mbps(1), mbps(2)], [ms(10), ms(30)], 2)
    out = expected_round(ctx)
    assert out.expected_T == pytest.approx((segment_delay(ctx, 1) + segment_delay(ctx, 2)) / 2)
    assert out.expected_A_next == pytest.approx(2.0)


def test_single_segment_round():
    ctx = ctx_for([mbps(1), mbps(2)], [ms(10), ms(30)], 1)
    out = expected_round(ctx)
    assert out.expected_T == segment_delay(ctx, 1)
    assert out.expected_A_next == 1.0


def test_single_link_in_order():
    ctx = ctx_for([mbps(1)], [ms(10)], 4)
    out = expected_round(ctx)
    assert out.expected_T == segment_delay(ctx, 2)
    assert out.expected_A_next == 2.0


def test_batch_below_m_ack_waits_for_whole_batch():
    ctx = ctx_for([mbps(1), mbps(1)], [ms(10), ms(20)], 2, m_ack=3)
    out = expected_round(ctx)
    assert out.expected_A_next == pytest.approx(2.0)
    assert out.expected_T == pytest.approx((segment_delay(ctx, 1) + segment_delay(ctx, 2)) / 2)


def test_c4_frozen_values():
    # serialization made negligible so D_j = 10, 11, 12, 13 ms
    ctx = ctx_for([1e18] * 4, [ms(10), ms(11), ms(12), ms(13)], 4)
    out = expected_round(ctx)
    assert out.expected_T == pytest.approx(ms(10 + 1 / 12), abs=1e-12)
    assert out.expected_A_next == pytest.approx(13 / 6, abs=1e-12)
    assert expected_T_rearranged(ctx) == pytest.approx(out.expected_T, rel=1e-9)


@pytest.mark.parametrize("c", range(2, 8))
@pytest.mark.parametrize("m_ack", [1, 2, 3])
@pytest.mark.parametrize("n", [2, 3])
def test_expected_round_matches_enumeration(c, m_ack, n):
    rng = random.Random(c * 100 + m_ack * 10 + n)
    bws = [mbps(rng.uniform(0.1, 5)) for _ in range(n)]
    dls = [ms(rng.uniform(5, 80)) for _ in range(n)]
    ctx = ctx_for(bws, dls, c, m_ack=m_ack, prior=rng.randrange(5))
    out = expected_round(ctx)
    t, a = enumerate_round(ctx)
    assert out.expected_T == pytest.approx(t, rel=1e-12)
    assert out.expected_A_next == pytest.approx(a, rel=1e-12)


def _random_context(rng):
    n = rng.randint(1, 8)
    c = rng.randint(2, 50)
    bws = [10 ** rng.uniform(4, 8) for _ in range(n)]
    dls = [10 ** rng.uniform(-3, -0.5) for _ in range(n)]
    m_ack = rng.randint(1, 4)
    return ctx_for(bws, dls, c, m_ack=m_ack, prior=rng.randrange(100))


def test_rearranged_form_agrees_on_random_contexts():
    rng = random.Random(2024)
    worst = 0.0
    for _ in range(1000):
        ctx = _random_context(rng)
        a, b = expected_round(ctx).expected_T, expected_T_rearranged(ctx)
        worst = max(worst, abs(a - b) / a)
    assert worst <= 1e-9


def test_rearranged_symmetric_delays():
    ctx = ctx_for([1e18, 1e18], [ms(25), ms(25)], 2)
    assert expected_T_rearranged(ctx) == pytest.approx(0.025)


@settings(max_examples=200)
@given(st.integers(0, 2**31 - 1))
def test_outcome_bounds(seed):
    ctx = _random_context(random.Random(seed))
    out = expected_round(ctx)
    assert out.expected_T > 0
    assert 1 - 1e-12 <= out.expected_A_next <= ctx.batch_size_int + 1e-12


# -- delay_gap


def test_delay_gap_self_is_zero():
    ctx = ctx_for([mbps(1), mbps(2)], [ms(10), ms(30)], 4)
    assert delay_gap(ctx, 1).total == 0.0


def test_delay_gap_equal_bandwidths():
    ctx = ctx_for([mbps(1), mbps(1)], [ms(10), ms(30)], 4)
    gap = delay_gap(ctx, 2)
    assert gap.propagation == pytest.approx(0.020)
    assert gap.bandwidth == 0.0
    # floor(2/2) = 1 extra segment time on link 2
    assert gap.total == pytest.approx(0.020 + S_BITS / 1e6)


@settings(max_examples=300)
@given(st.integers(0, 2**31 - 1), st.integers(1, 50))
def test_delay_gap_decomposition(seed, k_raw):
    ctx = _random_context(random.Random(seed))
    k = 1 + (k_raw - 1) % ctx.batch_size_int
    direct = segment_delay(ctx, k) - segment_delay(ctx, 1)
    assert abs(delay_gap(ctx, k).total - direct) <= 1e-12


# -- window recurrence


@pytest.mark.parametrize("ws, wl, expected", [(122, 1, 121), (5, 5, 0), (10, 1, 9)])
def test_slow_start_rounds(ws, wl, expected):
    assert slow_start_rounds(ModelConfig(init_window_segments=wl, ssthresh_segments=ws)) == expected


def test_next_window():
    assert next_window(1, 1, 121) == 2
    assert next_window(4, 200, 121) == 4.25
    assert next_window(1, 1, 0) == 2


def test_next_batch():
    assert next_batch(3, 2, 5, 1, 121) == 3
    assert next_batch(3, 2, 10, 200, 121) == pytest.approx(2.1)


# -- run_model


def test_single_segment_transfer():
    cfg = ModelConfig(transfer_bytes=536)
    rep = run_model(Scenario.build([mbps(1)], [ms(10)], cfg))
    assert rep.n_rounds == 1
    # on one link floor(1/1) = 1, so the lone segment pays two segment times
    assert rep.total_time_s == pytest.approx(2 * S_BITS / 1e6 + 0.010)
    assert rep.throughput_bps == pytest.approx(S_BITS / rep.total_time_s)


def test_two_identical_links_second_round():
    cfg = ModelConfig(transfer_bytes=536 * 3)
    rep = run_model(Scenario.build([mbps(1)] * 2, [ms(10)] * 2, cfg))
    first, second = rep.rounds
    assert first.context.batch_size_real == 1
    assert second.context.batch_size_real == 2
    ctx = second.context
    d1, d2 = segment_delay(ctx, 1), segment_delay(ctx, 2)
    assert d1 == pytest.approx(S_BITS / 1e6 + 0.010)
    assert d2 == pytest.approx(2 * S_BITS / 1e6 + 0.010)
    assert second.outcome.expected_T == pytest.approx((d1 + d2) / 2)


def test_stop_rule():
    cfg = ModelConfig(transfer_bytes=3 * 536)
    rep = run_model(Scenario.build([mbps(1)] * 2, [ms(10), ms(30)], cfg))
    assert rep.n_rounds == 2
    cfg = ModelConfig(transfer_bytes=3 * 536 + 1)
    assert run_model(Scenario.build([mbps(1)] * 2, [ms(10), ms(30)], cfg)).n_rounds == 3


def test_iteration_cap():
    with pytest.raises(IterationLimitError):
        run_model(Scenario.build([mbps(1)] * 2, [ms(10), ms(30)]), max_rounds=5)


def test_report_totals(two_link):
    rep = run_model(two_link)
    assert rep.total_time_s == pytest.approx(math.fsum(r.outcome.expected_T for r in rep.rounds), rel=1e-9)
    assert rep.throughput_bps == pytest.approx(8 * two_link.config.transfer_bytes / rep.total_time_s, rel=1e-9)
    assert rep.throughput_Bps * 8 == pytest.approx(rep.throughput_bps)


def test_trace_is_monotone_and_window_follows_recurrence(two_link):
    rep = run_model(two_link)
    i_s = slow_start_rounds(two_link.config)
    prev = None
    for rec in rep.rounds:
        if prev is not None:
            assert rec.cum_bytes > prev.cum_bytes
            assert rec.cum_time_s > prev.cum_time_s
            assert rec.context.prior_segment_total >= prev.context.prior_segment_total
            w0, w1 = prev.context.window, rec.context.window
            step = 1.0 if prev.context.round_index < i_s else 1.0 / w0
            assert w1 == pytest.approx(w0 + step, abs=1e-12)
        prev = rec


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.floats(0.05, 20.0), min_size=1, max_size=6),
    st.lists(st.floats(1.0, 300.0), min_size=6, max_size=6),
    st.integers(1, 4),
)
def test_throughput_below_capacity(bw_mbps, delay_ms, m_ack):
    n = len(bw_mbps)
    cfg = ModelConfig(m_ack=m_ack, transfer_bytes=60_000)
    sc = Scenario.build([mbps(b) for b in bw_mbps], [ms(d) for d in delay_ms[:n]], cfg)
    assert run_model(sc, keep_trace=False).throughput_bps <= sc.paths.capacity_bps * (1 + 1e-12)


@pytest.mark.parametrize("prior", range(4))
def test_homogeneous_links_symmetric(prior):
    base = ctx_for([mbps(2)] * 4, [ms(20)] * 4, 6, prior=0)
    ctx = ctx_for([mbps(2)] * 4, [ms(20)] * 4, 6, prior=prior)
    assert expected_round(ctx).expected_T == pytest.approx(expected_round(base).expected_T, rel=1e-15)


def test_report_csv_round_trip(tmp_path, two_link):
    rep = run_model(two_link)
    path = tmp_path / "r.csv"
    write_report_csv(rep, path)
    rows, summary = read_report_csv(path)
    assert len(rows) == rep.n_rounds
    for row, rec in zip(rows, rep.rounds):
        assert row["round"] == rec.context.round_index
        assert row["w"] == rec.context.window
        assert row["C"] == rec.context.batch_size_real
        assert row["E_T_s"] == rec.outcome.expected_T
        assert row["E_A_next"] == rec.outcome.expected_A_next
        assert row["cum_time_s"] == rec.cum_time_s
    assert summary["total_time_s"] == rep.total_time_s
    assert summary["throughput_bps"] == rep.throughput_bps
