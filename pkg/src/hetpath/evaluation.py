"""Experiment harness: delay-combination selection, model-vs-simulator accuracy,
asymmetry sweeps and the link-count criterion.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import DelayDataset, ModelConfig, Scenario, fmt, kbps, mbps, ms, read_delay_csv
from .metrics import avg_delay_asymmetry, prediction_accuracy, synth_bandwidths, synth_delays
from .model import model_throughput
from .simulator import SimOptions, run_sim

log = logging.getLogger(__name__)

# maximum measured download rates of links I..VIII
FIELD_BANDWIDTHS_BPS = tuple(mbps(v) for v in (35.9, 18.4, 33.3, 14.7, 14.8, 4.4, 22.5, 12.5))
# published reference accuracies of the model against a packet simulator, by number of links
REFERENCE_ACCURACY = {2: 0.8968, 3: 0.8314, 4: 0.7926, 5: 0.7599, 6: 0.7324, 7: 0.7106, 8: 0.6950}
REFERENCE_MEAN_ACCURACY = 0.7741

DEFAULT_COMBO_CAP = 10_000_000


class CapExceededWarning(UserWarning):
    pass


ingest_delay_csv = read_delay_csv


def synthetic_delay_dataset(
    n_links: int = 8,
    per_link: int = 6,
    lo: float = ms(10),
    hi: float = ms(100),
    seed: int = 0,
) -> DelayDataset:
    """Deterministic stand-in for measured RTT datasets: uniform draws in [lo, hi]."""
    rng = np.random.default_rng(seed)
    labels = [_roman(i) for i in range(1, n_links + 1)]
    values = rng.uniform(lo, hi, size=(n_links, per_link))
    return DelayDataset({label: tuple(float(v) for v in row) for label, row in zip(labels, values)})


def _roman(i: int) -> str:
    numerals = [(10, "X"), (9, "IX"), (5, "V"), (4, "IV"), (1, "I")]
    out = ""
    for value, sym in numerals:
        while i >= value:
            out += sym
            i -= value
    return out


# --------------------------------------------------------------------------
# combination selection


@dataclass(frozen=True)
class Combo:
    combo_id: int
    delays: tuple[float, ...]
    asymmetry: float
    rank: int


@dataclass(frozen=True)
class ComboSelection:
    labels: tuple[str, ...]
    total_combinations: int
    population: int
    selected: tuple[Combo, ...]
    subsampled: bool = False

    def __len__(self):
        return len(self.selected)


def _stratify(values: Sequence[float], keep: int) -> list[float]:
    """Keep ``keep`` values at evenly spaced ranks of the sorted list."""
    ordered = sorted(values)
    if keep >= len(ordered):
        return ordered
    idx = np.floor(np.linspace(0, len(ordered) - 1, keep) + 0.5).astype(int)
    return [ordered[i] for i in idx]


def evenly_spaced_ranks(population: int, count: int) -> list[int]:
    """``count`` distinct ranks in ``0..population-1`` including both ends.

    A single rank is the median.
    """
    if population <= 0 or count <= 0:
        return []
    if count >= population:
        return list(range(population))
    if count == 1:
        return [(population - 1) // 2]
    return np.floor(np.linspace(0, population - 1, count) + 0.5).astype(int).tolist()


def select_combinations(
    dataset: DelayDataset,
    link_count: int,
    count: int = 36,
    cap: int = DEFAULT_COMBO_CAP,
    labels: Optional[Sequence[str]] = None,
) -> ComboSelection:
    """Rank every per-link delay assignment by average delay asymmetry and pick
    ``count`` of them at evenly spaced ranks.

    The first ``link_count`` links of the dataset are used unless ``labels``
    is given.  When the number of combinations exceeds ``cap``, each link's
    list is first thinned to evenly spaced ranks of its sorted values and a
    :class:`CapExceededWarning` is issued.
    """
    if labels is None:
        if link_count > len(dataset):
            raise ValueError(f"dataset has {len(dataset)} links, {link_count} requested")
        labels = dataset.labels[:link_count]
    labels = tuple(labels)
    lists = [list(dataset[label]) for label in labels]
    total = math.prod(len(v) for v in lists)

    subsampled = False
    if total > cap:
        keep = max(1, int(math.floor(cap ** (1.0 / len(lists)) + 1e-9)))
        lists = [_stratify(v, keep) for v in lists]
        subsampled = True
        warnings.warn(
            f"{total} delay combinations exceed the cap of {cap}; "
            f"each link thinned to {keep} stratified values",
            CapExceededWarning,
            stacklevel=2,
        )

    grids = np.meshgrid(*[np.asarray(v) for v in lists], indexing="ij")
    combos = np.stack([g.ravel() for g in grids], axis=1)
    # mean pairwise gap per row, vectorized over the sorted columns
    sorted_rows = np.sort(combos, axis=1)
    m = combos.shape[1]
    if m > 1:
        weights = 2 * np.arange(m) - (m - 1)
        asym = 2.0 * (sorted_rows @ weights) / (m * (m - 1))
    else:
        asym = np.zeros(len(combos))
    order = np.argsort(asym, kind="stable")
    ranks = evenly_spaced_ranks(len(order), count)
    selected = tuple(
        Combo(int(order[r]), tuple(float(x) for x in combos[order[r]]), float(asym[order[r]]), int(r))
        for r in ranks
    )
    return ComboSelection(labels, total, len(combos), selected, subsampled)


# --------------------------------------------------------------------------
# accuracy experiment


@dataclass(frozen=True)
class AccuracyRow:
    m: int
    combo_id: int
    asymmetry_s: float
    sim_bps: float
    model_bps: float
    accuracy: float
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


@dataclass
class AccuracyTable:
    rows: list[AccuracyRow] = field(default_factory=list)

    @property
    def link_counts(self) -> list[int]:
        return sorted({r.m for r in self.rows})

    def mean_accuracy(self, m: int) -> float:
        values = [r.accuracy for r in self.rows if r.m == m and r.ok]
        return float(np.mean(values)) if values else math.nan

    def per_m(self) -> dict[int, float]:
        return {m: self.mean_accuracy(m) for m in self.link_counts}

    @property
    def grand_mean(self) -> float:
        """Mean of the per-link-count means."""
        means = [v for v in self.per_m().values() if not math.isnan(v)]
        return float(np.mean(means)) if means else math.nan

    @property
    def failures(self) -> list[AccuracyRow]:
        return [r for r in self.rows if not r.ok]


def _evaluate_cell(args) -> AccuracyRow:
    m, combo, bandwidths, config, sim_options = args
    scenario = Scenario.build(bandwidths, combo.delays, config, label=f"m{m}-c{combo.combo_id}")
    try:
        t_model = model_throughput(scenario)
        t_sim = run_sim(scenario, sim_options).throughput_bps
        acc = prediction_accuracy(t_sim, t_model)
    except Exception as exc:  # recorded per cell, the table carries on
        return AccuracyRow(m, combo.combo_id, combo.asymmetry, math.nan, math.nan, math.nan, repr(exc))
    return AccuracyRow(m, combo.combo_id, combo.asymmetry, t_sim, t_model, acc)


def accuracy_experiment(
    dataset: DelayDataset,
    bandwidths: Sequence[float] = FIELD_BANDWIDTHS_BPS,
    link_counts: Iterable[int] = range(2, 9),
    config: ModelConfig | None = None,
    count: int = 36,
    sim_options: SimOptions | None = None,
    jobs: int = 1,
    cap: int = DEFAULT_COMBO_CAP,
) -> AccuracyTable:
    """Run model and simulator on the same selected scenarios and score the model."""
    config = config or ModelConfig()
    sim_options = sim_options or SimOptions()
    tasks = []
    for m in link_counts:
        if m > len(bandwidths):
            raise ValueError(f"{m} links requested but only {len(bandwidths)} bandwidths given")
        selection = select_combinations(dataset, m, count=count, cap=cap)
        for combo in selection.selected:
            tasks.append((m, combo, tuple(bandwidths[:m]), config, sim_options))
    if not tasks:
        log.warning("accuracy experiment has no combinations to evaluate")
        return AccuracyTable()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_evaluate_cell, tasks, chunksize=4))
    else:
        rows = [_evaluate_cell(t) for t in tasks]
    return AccuracyTable(rows)


ACCURACY_COLUMNS = ["m", "combo_id", "asym_s", "T_sim_bps", "T_model_bps", "accuracy"]


def write_accuracy_csv(table: AccuracyTable, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ACCURACY_COLUMNS)
        for r in table.rows:
            writer.writerow([r.m, r.combo_id, fmt(r.asymmetry_s), fmt(r.sim_bps), fmt(r.model_bps), fmt(r.accuracy)])


def read_accuracy_csv(path: str | Path) -> AccuracyTable:
    rows = []
    with Path(path).open(newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(AccuracyRow(
                int(rec["m"]),
                int(rec["combo_id"]),
                float(rec["asym_s"]),
                float(rec["T_sim_bps"]),
                float(rec["T_model_bps"]),
                float(rec["accuracy"]),
            ))
    return AccuracyTable(rows)


# --------------------------------------------------------------------------
# sweeps


@dataclass
class SweepGrid:
    """Model (and optionally simulator) throughput keyed by grid coordinates.

    Keys are ``(m, d_min_s, delay_asym_s, b_min_bps, bw_asym_bps)``.
    """

    link_counts: tuple[int, ...]
    d_mins: tuple[float, ...]
    delay_asyms: tuple[float, ...]
    b_mins: tuple[float, ...]
    bw_asyms: tuple[float, ...]
    model: dict[tuple, float] = field(default_factory=dict)
    sim: dict[tuple, float] = field(default_factory=dict)

    @property
    def expected_cells(self) -> int:
        return len(self.link_counts) * len(self.d_mins) * len(self.delay_asyms) * len(self.b_mins) * len(self.bw_asyms)

    @property
    def complete(self) -> bool:
        return len(self.model) == self.expected_cells

    def curve(self, m: int, d_min: float | None = None, b_min: float | None = None,
              bw_asym: float | None = None) -> np.ndarray:
        """Throughput along the delay-asymmetry axis for fixed other coordinates."""
        d_min = self.d_mins[0] if d_min is None else d_min
        b_min = self.b_mins[0] if b_min is None else b_min
        bw_asym = self.bw_asyms[0] if bw_asym is None else bw_asym
        return np.array([self.model[(m, d_min, a, b_min, bw_asym)] for a in self.delay_asyms])

    def bw_curve(self, m: int, delay_asym: float, d_min: float | None = None,
                 b_min: float | None = None) -> np.ndarray:
        d_min = self.d_mins[0] if d_min is None else d_min
        b_min = self.b_mins[0] if b_min is None else b_min
        return np.array([self.model[(m, d_min, delay_asym, b_min, b)] for b in self.bw_asyms])


def link_vectors(m: int, d_min: float, delay_asym: float, b_min: float, bw_asym: float):
    """Per-link delays and bandwidths realizing the requested asymmetries.

    A single link has no asymmetry, so it is evaluated at the minimum delay
    and bandwidth regardless of the requested values.
    """
    if m == 1:
        return [b_min], [d_min]
    return synth_bandwidths(m, b_min, bw_asym), synth_delays(m, d_min, delay_asym)


def _sweep_cell(args):
    key, config, with_sim = args
    m, d_min, a, b_min, b = key
    bws, delays = link_vectors(m, d_min, a, b_min, b)
    scenario = Scenario.build(bws, delays, config)
    t_model = model_throughput(scenario)
    t_sim = run_sim(scenario).throughput_bps if with_sim else None
    return key, t_model, t_sim


def _run_grid(grid: SweepGrid, config: ModelConfig, with_sim: bool, jobs: int) -> SweepGrid:
    keys = [
        (m, d, a, bm, b)
        for m in grid.link_counts
        for d in grid.d_mins
        for a in grid.delay_asyms
        for bm in grid.b_mins
        for b in grid.bw_asyms
    ]
    # m = 1 ignores the asymmetry coordinates, so evaluate it once per (d_min, b_min)
    cache: dict[tuple, tuple] = {}
    tasks = []
    for key in keys:
        canon = (1, key[1], 0.0, key[3], 0.0) if key[0] == 1 else key
        if canon not in cache:
            cache[canon] = None
            tasks.append((canon, config, with_sim))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_cell, tasks, chunksize=8))
    else:
        results = [_sweep_cell(t) for t in tasks]
    for canon, t_model, t_sim in results:
        cache[canon] = (t_model, t_sim)
    for key in keys:
        canon = (1, key[1], 0.0, key[3], 0.0) if key[0] == 1 else key
        t_model, t_sim = cache[canon]
        grid.model[key] = t_model
        if t_sim is not None:
            grid.sim[key] = t_sim
    return grid


def _axis(lo: float, hi: float, steps: int) -> tuple[float, ...]:
    if steps < 1:
        raise ValueError("steps must be ≥ 1")
    if hi < lo:
        raise ValueError(f"inverted range [{lo}, {hi}]")
    if steps == 1:
        if hi != lo:
            raise ValueError("a single step needs lo == hi")
        return (float(lo),)
    return tuple(float(x) for x in np.linspace(lo, hi, steps))


def sweep_surface(
    link_counts: Sequence[int] = (1, 2, 3, 4),
    d_min: float = ms(5),
    b_min: float = kbps(100),
    delay_asym: tuple[float, float] = (0.0, ms(35)),
    bw_asym: tuple[float, float] = (0.0, kbps(700)),
    steps: int | tuple[int, int] = 8,
    config: ModelConfig | None = None,
    with_sim: bool = False,
    jobs: int = 1,
) -> SweepGrid:
    """Throughput over the (delay asymmetry, bandwidth asymmetry) plane."""
    steps_d, steps_b = (steps, steps) if isinstance(steps, int) else steps
    grid = SweepGrid(
        tuple(link_counts),
        (float(d_min),),
        _axis(*delay_asym, steps_d),
        (float(b_min),),
        _axis(*bw_asym, steps_b),
    )
    return _run_grid(grid, config or ModelConfig(), with_sim, jobs)


def sweep_lines(
    link_counts: Sequence[int] = (1, 2, 3, 4),
    d_mins: Sequence[float] = (ms(5), ms(20), ms(35), ms(50)),
    delay_asym: tuple[float, float] = (ms(10), ms(90)),
    bandwidth: float = kbps(100),
    steps: int = 33,
    config: ModelConfig | None = None,
    with_sim: bool = False,
    jobs: int = 1,
) -> SweepGrid:
    """Throughput against delay asymmetry for equal-bandwidth links and several minimum delays."""
    grid = SweepGrid(
        tuple(link_counts),
        tuple(float(d) for d in d_mins),
        _axis(*delay_asym, steps),
        (float(bandwidth),),
        (0.0,),
    )
    return _run_grid(grid, config or ModelConfig(), with_sim, jobs)


def crossover_threshold(
    grid: SweepGrid, m: int, baseline_m: int = 1, d_min: float | None = None
) -> Optional[float]:
    """Smallest delay asymmetry where ``m`` links do no better than ``baseline_m``.

    Linear interpolation between grid points.  Returns ``None`` when the
    ``m``-link curve stays above the baseline over the whole axis.
    """
    x = np.asarray(grid.delay_asyms)
    diff = grid.curve(m, d_min) - grid.curve(baseline_m, d_min)
    return first_root(x, diff)


def first_root(x: np.ndarray, y: np.ndarray) -> Optional[float]:
    """First x where y ≤ 0, interpolated linearly from the previous point."""
    below = np.nonzero(y <= 0)[0]
    if below.size == 0:
        return None
    i = int(below[0])
    if i == 0:
        return float(x[0])
    x0, x1, y0, y1 = x[i - 1], x[i], y[i - 1], y[i]
    return float(x0 + (x1 - x0) * y0 / (y0 - y1))


def optimal_link_count(
    d_min: float,
    target_asym: float,
    bandwidth_per_link: float = kbps(100),
    max_links: int = 4,
    config: ModelConfig | None = None,
) -> int:
    """Link count in ``1..max_links`` with the highest modeled throughput.

    Ties go to the smaller count.
    """
    if max_links < 1:
        raise ValueError("max_links must be ≥ 1")
    config = config or ModelConfig()
    best_m, best = 1, -math.inf
    for m in range(1, max_links + 1):
        bws, delays = link_vectors(m, d_min, target_asym, bandwidth_per_link, 0.0)
        t = model_throughput(Scenario.build(bws, delays, config))
        if t > best:
            best_m, best = m, t
    return best_m


# --------------------------------------------------------------------------
# grid CSV files


SURFACE_COLUMNS = ["m", "delay_asym_s", "bw_asym_bps", "throughput_bps"]
LINES_COLUMNS = ["m", "d_min_s", "delay_asym_s", "throughput_bps"]


def write_surface_csv(grid: SweepGrid, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SURFACE_COLUMNS + (["sim_throughput_bps"] if grid.sim else []))
        for (m, _d, a, _bm, b), t in sorted(grid.model.items()):
            row = [m, fmt(a), fmt(b), fmt(t)]
            if grid.sim:
                row.append(fmt(grid.sim[(m, _d, a, _bm, b)]))
            writer.writerow(row)


def write_lines_csv(grid: SweepGrid, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LINES_COLUMNS + (["sim_throughput_bps"] if grid.sim else []))
        for (m, d, a, _bm, _b), t in sorted(grid.model.items()):
            row = [m, fmt(d), fmt(a), fmt(t)]
            if grid.sim:
                row.append(fmt(grid.sim[(m, d, a, _bm, _b)]))
            writer.writerow(row)


def read_grid_csv(path: str | Path) -> list[dict[str, float]]:
    with Path(path).open(newline="") as fh:
        return [{k: float(v) for k, v in rec.items()} for rec in csv.DictReader(fh)]
