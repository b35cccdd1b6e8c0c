"""Acceptance checks, one line each in the terminal summary.

Run alone with ``pytest tests/test_acceptance.py -v -rA``; every check
prints PASS or FAIL with the measured numbers.
"""

import random
import time

import numpy as np
import pytest

from hetpath.core import ModelConfig, Scenario, kbps, mbps, ms
from hetpath.evaluation import (
    FIELD_BANDWIDTHS_BPS,
    REFERENCE_ACCURACY,
    REFERENCE_MEAN_ACCURACY,
    accuracy_experiment,
    crossover_threshold,
    link_vectors,
    sweep_lines,
    sweep_surface,
    synthetic_delay_dataset,
)
from hetpath.metrics import avg_delay_asymmetry, avg_bandwidth_asymmetry, synth_delays
from hetpath.model import (
    PathSet,
    RoundContext,
    delay_gap,
    expected_round,
    expected_T_rearranged,
    model_throughput,
    segment_delay,
)
from hetpath.reorder_prob import (
    brute_force_m_distribution,
    brute_force_q_distribution,
    m_distribution,
    q_distribution,
    q_distribution_three_branch,
)
from hetpath.simulator import run_sim

pytestmark = pytest.mark.acceptance


def test_probability_oracles(record_criterion):
    start = time.perf_counter()
    worst = 0.0
    for c in range(2, 9):
        for m_ack in range(1, 5):
            a, b = m_distribution(c, m_ack), brute_force_m_distribution(c, m_ack)
            worst = max(worst, *(abs(x - y) for x, y in zip(a.below + (a.top,), b.below + (b.top,))))
        qa, qb = q_distribution(c), brute_force_q_distribution(c)
        worst = max(worst, *(abs(x - y) for x, y in zip(qa.probs, qb.probs)))
    elapsed = time.perf_counter() - start
    oracle_ok = worst <= 1e-12 and elapsed < 10

    mass3 = q_distribution_three_branch(3).total
    deficits = {c: 1 - q_distribution_three_branch(c).total for c in range(3, 9)}
    expected = {c: q_distribution(c)[c - 1] for c in range(3, 9)}
    bad = [c for c in deficits if abs(deficits[c] - expected[c]) > 1e-12]
    three_branch_ok = abs(mass3 - 0.75) <= 1e-12 and not bad

    detail = (
        f"max_err={worst:.1e} t={elapsed:.2f}s mass(C=3)={mass3:.4f} "
        + " ".join(f"C{c}:deficit={deficits[c]:.4f}/p(q=C-1)={expected[c]:.4f}" for c in range(3, 9))
    )
    assert record_criterion("1 probability oracles", oracle_ok and three_branch_ok, detail)


def _random_ctx(rng):
    n = rng.randint(1, 8)
    c = rng.randint(2, 50)
    paths = PathSet.from_lists([10 ** rng.uniform(4, 8) for _ in range(n)], [10 ** rng.uniform(-3, -0.5) for _ in range(n)])
    cfg = ModelConfig(m_ack=rng.randint(1, 4))
    return RoundContext(1, float(c), float(c), float(rng.randrange(1000)), paths, cfg)


def test_algebraic_identities(record_criterion):
    rng = random.Random(7)
    rel = gap = 0.0
    for _ in range(1000):
        ctx = _random_ctx(rng)
        a, b = expected_round(ctx).expected_T, expected_T_rearranged(ctx)
        rel = max(rel, abs(a - b) / a)
        if ctx.n >= 2:
            for k in range(1, ctx.batch_size_int + 1):
                direct = segment_delay(ctx, k) - segment_delay(ctx, 1)
                gap = max(gap, abs(delay_gap(ctx, k).total - direct))
    assert record_criterion("2 algebraic identities", rel <= 1e-9 and gap <= 1e-12, f"rel={rel:.1e} gap={gap:.1e}")


def test_model_vs_simulator_accuracy(record_criterion):
    start = time.perf_counter()
    table = accuracy_experiment(synthetic_delay_dataset(), FIELD_BANDWIDTHS_BPS, range(2, 9), ModelConfig())
    elapsed = time.perf_counter() - start
    per_m = table.per_m()
    ok = all(v >= 0.65 for v in per_m.values()) and elapsed < 300 and not table.failures
    detail = (
        " ".join(f"m{m}={v:.3f}(ref {REFERENCE_ACCURACY[m]:.4f})" for m, v in per_m.items())
        + f" mean={table.grand_mean:.3f}(ref {REFERENCE_MEAN_ACCURACY:.4f}) t={elapsed:.0f}s"
    )
    assert record_criterion("3 model vs simulator accuracy >= 0.65", ok, detail)


def test_crossover(record_criterion):
    grid = sweep_lines(link_counts=(1, 4), d_mins=(ms(5), ms(50)))
    x5 = crossover_threshold(grid, 4, 1, ms(5))
    x50 = crossover_threshold(grid, 4, 1, ms(50))
    in_band = x5 is not None and ms(25) <= x5 <= ms(46)
    shrinks = x5 is not None and x50 is not None and x50 < x5

    def show(x):
        return "none" if x is None else f"{x * 1e3:.1f}ms"

    ratio5 = grid.curve(4, ms(5))[-1] / grid.curve(1, ms(5))[-1]
    detail = f"d_min=5ms:{show(x5)} d_min=50ms:{show(x50)} (4-link/1-link at 90ms={ratio5:.2f})"
    assert record_criterion("4 crossover in [25,46] ms and shrinking", in_band and shrinks, detail)


def test_delay_axis_dominates(record_criterion):
    grid = sweep_surface(link_counts=(4,))
    d0, d1 = grid.delay_asyms[0], grid.delay_asyms[-1]
    b0, b1 = grid.bw_asyms[0], grid.bw_asyms[-1]
    key = lambda a, b: (4, ms(5), a, kbps(100), b)  # noqa: E731
    delay_drop = grid.model[key(d0, b1)] / grid.model[key(d1, b1)]
    bw_drop = grid.model[key(d1, b0)] / grid.model[key(d1, b1)]
    detail = f"delay-axis drop={delay_drop:.2f}x bandwidth-axis drop={bw_drop:.2f}x"
    assert record_criterion("5 delay asymmetry dominates", delay_drop > bw_drop, detail)


def test_two_links_beat_four(record_criterion):
    t = {}
    for m in (1, 2, 3, 4):
        bws, delays = link_vectors(m, ms(20), ms(30), kbps(100), 0.0)
        t[m] = model_throughput(Scenario.build(bws, delays))
    detail = " ".join(f"T{m}={v / 1e3:.1f}kbps" for m, v in t.items())
    assert record_criterion("6 two links beat four", t[2] > t[4], detail)


def test_simulator_sanity(record_criterion):
    rng = random.Random(11)
    problems = []
    for i in range(20):
        n = rng.randint(1, 6)
        sc = Scenario.build(
            [mbps(rng.uniform(0.1, 40)) for _ in range(n)],
            [ms(rng.uniform(1, 150)) for _ in range(n)],
            ModelConfig(m_ack=rng.randint(1, 3), transfer_bytes=rng.randint(1, 300_000)),
        )
        a = run_sim(sc, log_arrivals=True)
        if a != run_sim(sc, log_arrivals=True):
            problems.append(f"{i}:nondeterministic")
        if a.throughput_bps > sc.paths.capacity_bps:
            problems.append(f"{i}:capacity")
        if a.bytes_delivered != sc.config.transfer_bytes:
            problems.append(f"{i}:bytes")
        if a.spurious_retransmissions:
            problems.append(f"{i}:spurious")
    single = run_sim(Scenario.build([mbps(3)], [ms(40)], ModelConfig(transfer_bytes=200_000)), log_arrivals=True)
    order = [x.segment for x in single.arrivals]
    if order != sorted(order):
        problems.append("single-link order")
    assert record_criterion("7 simulator sanity", not problems, ",".join(problems) or "20 scenarios clean")


def test_metrics_round_trip(record_criterion):
    rng = np.random.default_rng(5)
    worst = 0.0
    invariance = 0.0
    for n in range(2, 9):
        for _ in range(100):
            d, a = rng.uniform(0, 0.2), rng.uniform(0, 0.2)
            worst = max(worst, abs(avg_delay_asymmetry(synth_delays(n, d, a)) - a))
            vs = rng.uniform(0, 0.2, size=n)
            base = avg_delay_asymmetry(vs)
            invariance = max(
                invariance,
                abs(avg_delay_asymmetry(rng.permutation(vs)) - base),
                abs(avg_delay_asymmetry(vs + rng.uniform(-1, 1)) - base),
                abs(avg_bandwidth_asymmetry(rng.permutation(vs * 1e6)) - base * 1e6) / 1e6,
            )
    ok = worst <= 1e-12 and invariance <= 1e-12
    assert record_criterion("8 metrics round trip", ok, f"round_trip_err={worst:.1e} invariance_err={invariance:.1e}")
