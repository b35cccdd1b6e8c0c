"""Command line entry point: ``hetpath {model,sim,compare,sweep,validate-prob}``.

Exit status is 0 on success, 1 on invalid input or a failed check, 2 on
I/O errors.  Output files go to ``--out`` (default ``$HETPATH_OUT`` or the
current directory) and are written atomically.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Callable

from . import evaluation as ev
from .core import DatasetError, ValidationError, kbps, load_scenario, mbps, ms, to_ms
from .model import IterationLimitError, run_model, write_report_csv
from .reorder_prob import (
    BRUTE_FORCE_MAX_C,
    brute_force_m_distribution,
    brute_force_q_distribution,
    m_distribution,
    q_distribution,
    q_distribution_three_branch,
)
from .simulator import SimOptions, SimulationDeadlock, run_sim, write_arrival_csv, write_sim_summary_csv
from .svgplot import heatmap, line_chart

log = logging.getLogger("hetpath")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get("HETPATH_OUT") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _atomic(path: Path, writer: Callable[[Path], None]) -> Path:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        writer(Path(tmp))
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def _atomic_text(path: Path, text: str) -> Path:
    return _atomic(path, lambda p: p.write_text(text))


def _parse_range(text: str) -> list[int]:
    """``"2..8"``, ``"2,3,5"`` or ``"4"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad link range {text!r}") from None
    if not values:
        raise UsageError(f"empty link range {text!r}")
    return values


def _load(args):
    scenario = load_scenario(args.scenario)
    overrides = {}
    if getattr(args, "transfer_bytes", None):
        overrides["transfer_bytes"] = args.transfer_bytes
    if getattr(args, "m_ack", None):
        overrides["m_ack"] = args.m_ack
    if overrides:
        config = dataclasses.replace(scenario.config, **overrides)
        scenario = dataclasses.replace(scenario, config=config)
    return scenario


# --------------------------------------------------------------------------
# subcommands


def cmd_model(args) -> int:
    scenario = _load(args)
    report = run_model(scenario)
    path = _atomic(_out_dir(args) / "model_report.csv", lambda p: write_report_csv(report, p))
    log.info("wrote %s (%d rounds)", path, report.n_rounds)
    print(f"throughput_bps={report.throughput_bps!r}")
    return EXIT_OK


def cmd_sim(args) -> int:
    scenario = _load(args)
    options = SimOptions(
        fast_retransmit=args.fast_retransmit,
        ack_path_delay_s=ms(args.ack_delay_ms),
        log_arrivals=args.log_arrivals,
    )
    report = run_sim(scenario, options)
    out = _out_dir(args)
    _atomic(out / "sim_summary.csv", lambda p: write_sim_summary_csv(report, p))
    if args.log_arrivals:
        _atomic(out / "arrivals.csv", lambda p: write_arrival_csv(report, p))
    print(f"throughput_bps={report.throughput_bps!r}")
    print(f"out_of_order_arrivals={report.out_of_order_arrivals}")
    print(f"spurious_retransmissions={report.spurious_retransmissions}")
    return EXIT_OK


def cmd_compare(args) -> int:
    dataset = ev.ingest_delay_csv(args.dataset)
    bandwidths = (
        tuple(mbps(float(v)) for v in args.bandwidths_mbps.split(","))
        if args.bandwidths_mbps
        else ev.FIELD_BANDWIDTHS_BPS
    )
    if args.links:
        links = _parse_range(args.links)
    else:
        links = list(range(2, min(len(dataset), len(bandwidths)) + 1))
    available = min(len(dataset), len(bandwidths))
    if not links or min(links) < 1 or max(links) > available:
        raise UsageError(f"link counts {links} outside 1..{available} supported by dataset/bandwidths")

    options = SimOptions(fast_retransmit=args.fast_retransmit)
    table = ev.accuracy_experiment(
        dataset, bandwidths, links, count=args.count, sim_options=options, jobs=args.jobs
    )
    if not table.rows:
        print("no combinations selected", file=sys.stderr)
        return EXIT_INVALID
    _atomic(_out_dir(args) / "accuracy_table.csv", lambda p: ev.write_accuracy_csv(table, p))
    for m, acc in table.per_m().items():
        ref = ev.REFERENCE_ACCURACY.get(m)
        ref_txt = f" (reference {ref:.4f})" if ref is not None else ""
        print(f"m={m} mean_accuracy={acc:.6f}{ref_txt}")
    for row in table.failures:
        print(f"failed cell m={row.m} combo={row.combo_id}: {row.error}", file=sys.stderr)
    print(f"grand_mean_accuracy={table.grand_mean!r}")
    return EXIT_OK


def _check_range(lo: float, hi: float, steps: int, name: str) -> None:
    if steps < 1 or hi < lo or (steps == 1 and hi != lo):
        raise UsageError(f"inconsistent {name} range: {lo}..{hi} in {steps} steps")


def cmd_sweep(args) -> int:
    out = _out_dir(args)
    links = _parse_range(args.links)
    if args.mode == "surface":
        d_lo, d_hi = args.delay_asym_ms or (0.0, 35.0)
        b_lo, b_hi = args.bw_asym_kbps or (0.0, 700.0)
        steps = args.steps or 8
        _check_range(d_lo, d_hi, steps, "delay asymmetry")
        _check_range(b_lo, b_hi, steps, "bandwidth asymmetry")
        grid = ev.sweep_surface(
            links,
            d_min=ms(args.d_min_ms[0] if args.d_min_ms else 5.0),
            b_min=kbps(args.b_min_kbps),
            delay_asym=(ms(d_lo), ms(d_hi)),
            bw_asym=(kbps(b_lo), kbps(b_hi)),
            steps=steps,
            jobs=args.jobs,
        )
        _atomic(out / "surface.csv", lambda p: ev.write_surface_csv(grid, p))
        if args.svg:
            for m in links:
                values = [list(grid.bw_curve(m, a)) for a in grid.delay_asyms]
                _atomic_text(out / f"surface_m{m}.svg", heatmap(
                    [to_ms(a) for a in grid.delay_asyms],
                    [b / 1e3 for b in grid.bw_asyms],
                    values,
                    title=f"{m} link(s): throughput (bit/s)",
                    xlabel="average delay asymmetry (ms)",
                    ylabel="average bandwidth asymmetry (kbit/s)",
                ))
        print(f"cells={len(grid.model)}")
        return EXIT_OK

    d_lo, d_hi = args.delay_asym_ms or (10.0, 90.0)
    steps = args.steps or 33
    _check_range(d_lo, d_hi, steps, "delay asymmetry")
    d_mins = [ms(v) for v in (args.d_min_ms or (5.0, 20.0, 35.0, 50.0))]
    grid = ev.sweep_lines(
        links,
        d_mins=d_mins,
        delay_asym=(ms(d_lo), ms(d_hi)),
        bandwidth=kbps(args.bandwidth_kbps),
        steps=steps,
        jobs=args.jobs,
    )
    _atomic(out / "lines.csv", lambda p: ev.write_lines_csv(grid, p))
    baseline = 1 if 1 in links else min(links)
    for d in grid.d_mins:
        for m in links:
            if m == baseline:
                continue
            x = ev.crossover_threshold(grid, m, baseline, d)
            text = "none" if x is None else f"{to_ms(x):.3f}ms"
            print(f"crossover m={m} baseline={baseline} d_min={to_ms(d):g}ms threshold={text}")
        if args.svg:
            series = {
                f"{m} link(s)": ([to_ms(a) for a in grid.delay_asyms], list(grid.curve(m, d)))
                for m in links
            }
            _atomic_text(out / f"lines_dmin{to_ms(d):g}ms.svg", line_chart(
                series,
                title=f"minimum delay {to_ms(d):g} ms",
                xlabel="average delay asymmetry (ms)",
                ylabel="throughput (bit/s)",
            ))
    print(f"cells={len(grid.model)}")
    return EXIT_OK


def cmd_validate_prob(args) -> int:
    max_c = args.max_c
    if max_c > BRUTE_FORCE_MAX_C or max_c < 2:
        raise UsageError(f"--max-c must be in 2..{BRUTE_FORCE_MAX_C}, got {max_c}")
    tol = 1e-12
    all_ok = True
    print("C  max_err_m  max_err_q  status")
    for c in range(2, max_c + 1):
        err_m = 0.0
        for m_ack in range(1, 5):
            a, b = m_distribution(c, m_ack), brute_force_m_distribution(c, m_ack)
            err_m = max(err_m, max(abs(x - y) for x, y in zip(a.below + (a.top,), b.below + (b.top,))))
        qa, qb = q_distribution(c), brute_force_q_distribution(c)
        err_q = max(abs(x - y) for x, y in zip(qa.probs, qb.probs))
        ok = err_m <= tol and err_q <= tol
        all_ok &= ok
        print(f"{c:<2} {err_m:.3e}  {err_q:.3e}  {'OK' if ok else 'FAIL'}")
    print()
    print("three-branch q formula (comparison only)")
    print("C  total_mass  deficit  p(q=C-1)")
    for c in range(3, max_c + 1):
        lit = q_distribution_three_branch(c)
        deficit = 1.0 - lit.total
        print(f"{c:<2} {lit.total:.6f}    {deficit:.6f} {q_distribution(c)[c - 1]:.6f}")
    return EXIT_OK if all_ok else EXIT_INVALID


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default $HETPATH_OUT or .)")
    common.add_argument("--seed", type=int, default=0, help="reserved; all pipelines are deterministic")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for grids and tables")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hetpath", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model", parents=[common], help="run the analytical model on a scenario file")
    p.add_argument("scenario")
    p.add_argument("--transfer-bytes", type=int)
    p.add_argument("--m-ack", type=int)
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("sim", parents=[common], help="simulate a scenario file")
    p.add_argument("scenario")
    p.add_argument("--transfer-bytes", type=int)
    p.add_argument("--m-ack", type=int)
    p.add_argument("--fast-retransmit", action="store_true")
    p.add_argument("--log-arrivals", action="store_true")
    p.add_argument("--ack-delay-ms", type=float, default=0.0)
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("compare", parents=[common], help="model vs simulator accuracy table")
    p.add_argument("dataset", help="CSV with header link,delay_ms")
    p.add_argument("--links", help="link counts, e.g. 2..8 (default 2..links in dataset)")
    p.add_argument("--bandwidths-mbps", help="comma-separated per-link bandwidths")
    p.add_argument("--count", type=int, default=36, help="combinations per link count")
    p.add_argument("--fast-retransmit", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", parents=[common], help="asymmetry sweeps and crossover thresholds")
    p.add_argument("--mode", choices=("surface", "lines"), default="lines")
    p.add_argument("--links", default="1..4")
    p.add_argument("--delay-asym-ms", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--bw-asym-kbps", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--d-min-ms", type=float, nargs="+")
    p.add_argument("--b-min-kbps", type=float, default=100.0)
    p.add_argument("--bandwidth-kbps", type=float, default=100.0)
    p.add_argument("--steps", type=int)
    p.add_argument("--svg", action="store_true", help="also render SVG charts")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate-prob", parents=[common], help="check closed forms against enumeration")
    p.add_argument("--max-c", type=int, default=8)
    p.set_defaults(func=cmd_validate_prob)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.jobs < 1:
        print("error: --jobs must be ≥ 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ValidationError, DatasetError, UsageError, IterationLimitError, SimulationDeadlock, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
