"""Domain types, unit conversion and scenario I/O shared by the whole package.

Units are fixed throughout: delays in seconds, bandwidths in bits/second,
sizes in bytes.  The helpers in this module are the only place where the
factors 8 (bits per byte), 1e3 and 1e6 appear.
"""

from __future__ import annotations

import csv
import math
from decimal import Decimal
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

BITS_PER_BYTE = 8


class ValidationError(ValueError):
    """A domain invariant is violated.  ``field`` names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class DatasetError(ValueError):
    """Malformed delay dataset file."""


# --------------------------------------------------------------------------
# unit helpers


def mbps(value: float) -> float:
    return value * 1e6


def kbps(value: float) -> float:
    return value * 1e3


def ms(value: float) -> float:
    return value * 1e-3


def to_ms(seconds: float) -> float:
    return seconds * 1e3


def to_mbps(bps: float) -> float:
    return bps / 1e6


def fmt(value: float) -> str:
    """Decimal text with 17 significant digits; parses back to the same float."""
    return format(value, ".17g")


def bytes_to_bits(n_bytes: float) -> float:
    return n_bytes * BITS_PER_BYTE


def segments_for_bytes(n_bytes: int, segment_size: int) -> int:
    """Number of segments needed to carry ``n_bytes`` (ceiling division)."""
    if segment_size <= 0:
        raise ValidationError("segment_size_bytes", "segment size must be positive")
    return -(-n_bytes // segment_size)


def window_segments(n_bytes: int, segment_size: int) -> int:
    """Window size in whole segments (floor division).

    Used for byte-valued window parameters such as the slow start threshold,
    where rounding down is the conservative choice.
    """
    if segment_size <= 0:
        raise ValidationError("segment_size_bytes", "segment size must be positive")
    return n_bytes // segment_size


# --------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Link:
    bandwidth_bps: float
    prop_delay_s: float

    def __post_init__(self):
        if not (self.bandwidth_bps > 0) or not math.isfinite(self.bandwidth_bps):
            raise ValidationError("bandwidth_bps", "bandwidth must be positive")
        if not (self.prop_delay_s >= 0) or not math.isfinite(self.prop_delay_s):
            raise ValidationError("prop_delay_s", "delay must be non-negative")

    def serialization_time(self, n_bytes: float) -> float:
        return bytes_to_bits(n_bytes) / self.bandwidth_bps


@dataclass(frozen=True)
class PathSet:
    """Ordered links; position in the tuple is the round-robin dispatch order."""

    links: tuple[Link, ...]

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        if len(self.links) < 1:
            raise ValidationError("links", "at least one link is required")
        for link in self.links:
            if not isinstance(link, Link):
                raise ValidationError("links", f"expected Link, got {type(link).__name__}")

    @classmethod
    def from_lists(cls, bandwidths_bps: Sequence[float], delays_s: Sequence[float]) -> "PathSet":
        if len(bandwidths_bps) != len(delays_s):
            raise ValidationError("links", "bandwidth and delay lists differ in length")
        return cls(tuple(Link(float(b), float(d)) for b, d in zip(bandwidths_bps, delays_s)))

    @property
    def n(self) -> int:
        return len(self.links)

    @property
    def bandwidths(self) -> tuple[float, ...]:
        return tuple(link.bandwidth_bps for link in self.links)

    @property
    def delays(self) -> tuple[float, ...]:
        return tuple(link.prop_delay_s for link in self.links)

    @property
    def capacity_bps(self) -> float:
        return sum(self.bandwidths)

    def __len__(self):
        return len(self.links)

    def __getitem__(self, index: int) -> Link:
        return self.links[index]


@dataclass(frozen=True)
class ModelConfig:
    """Transport parameters.  Windows are in segments, sizes in bytes.

    The defaults are the evaluation parameters: 536-byte segments, an ACK
    every two segments, an initial window of 536 bytes (1 segment) and a
    slow start threshold of 65535 bytes (122 whole segments).
    """

    segment_size_bytes: int = 536
    m_ack: int = 2
    init_window_segments: float = 1.0
    ssthresh_segments: float = 122.0
    transfer_bytes: int = 1_000_000

    def __post_init__(self):
        if not isinstance(self.segment_size_bytes, int) or self.segment_size_bytes <= 0:
            raise ValidationError("segment_size_bytes", "segment size must be a positive integer")
        if not isinstance(self.m_ack, int) or self.m_ack < 1:
            raise ValidationError("m_ack", "m_ack must be ≥ 1")
        if not (self.init_window_segments >= 1):
            raise ValidationError("init_window_segments", "initial window must be ≥ 1 segment")
        if not (self.ssthresh_segments >= self.init_window_segments):
            raise ValidationError("ssthresh_segments", "ssthresh must be ≥ the initial window")
        if not isinstance(self.transfer_bytes, int) or self.transfer_bytes <= 0:
            raise ValidationError("transfer_bytes", "transfer size must be a positive integer")

    @classmethod
    def from_bytes(
        cls,
        segment_size_bytes: int = 536,
        m_ack: int = 2,
        init_window_bytes: int = 536,
        ssthresh_bytes: int = 65535,
        transfer_bytes: int = 1_000_000,
    ) -> "ModelConfig":
        """Build a config from byte-valued windows (initial window and ssthresh)."""
        if segment_size_bytes <= 0:
            raise ValidationError("segment_size_bytes", "segment size must be a positive integer")
        return cls(
            segment_size_bytes=segment_size_bytes,
            m_ack=m_ack,
            init_window_segments=float(max(1, window_segments(init_window_bytes, segment_size_bytes))),
            ssthresh_segments=float(window_segments(ssthresh_bytes, segment_size_bytes)),
            transfer_bytes=transfer_bytes,
        )

    @property
    def segment_bits(self) -> float:
        return bytes_to_bits(self.segment_size_bytes)

    @property
    def transfer_segments(self) -> int:
        return segments_for_bytes(self.transfer_bytes, self.segment_size_bytes)


@dataclass(frozen=True)
class Scenario:
    paths: PathSet
    config: ModelConfig = field(default_factory=ModelConfig)
    label: str = ""

    @classmethod
    def build(
        cls,
        bandwidths_bps: Sequence[float],
        delays_s: Sequence[float],
        config: ModelConfig | None = None,
        label: str = "",
    ) -> "Scenario":
        return cls(PathSet.from_lists(bandwidths_bps, delays_s), config or ModelConfig(), label)


@dataclass(frozen=True)
class DelayDataset:
    """Measured delays per link label, in seconds, in file order."""

    delays: dict[str, tuple[float, ...]]

    def __post_init__(self):
        if not self.delays:
            raise DatasetError("dataset is empty")
        for label, values in self.delays.items():
            if len(values) == 0:
                raise DatasetError(f"link {label!r} has no measurements")
            if any(not (v > 0) for v in values):
                raise DatasetError(f"link {label!r} has a non-positive delay")

    @property
    def labels(self) -> list[str]:
        return list(self.delays)

    def __getitem__(self, label: str) -> tuple[float, ...]:
        return self.delays[label]

    def __len__(self):
        return len(self.delays)


def validate_scenario(scenario: Scenario) -> Scenario:
    """Re-check every invariant of ``scenario`` and return it unchanged.

    Construction already validates, so this mainly guards objects built with
    ``object.__setattr__`` or deserialized by other means.  Raises
    :class:`ValidationError` naming the first offending field.
    """
    if not isinstance(scenario.paths, PathSet):
        raise ValidationError("paths", "expected a PathSet")
    PathSet.__post_init__(scenario.paths)
    for link in scenario.paths.links:
        Link.__post_init__(link)
    ModelConfig.__post_init__(scenario.config)
    return scenario


# --------------------------------------------------------------------------
# scenario files: flat "key = value" lines


def parse_scenario_text(text: str, label: str = "") -> Scenario:
    """Parse a scenario from ``key = value`` lines.

    Recognised keys are ``link.<i>.bandwidth_mbps``, ``link.<i>.delay_ms``
    (``i`` starting at 1), ``segment_size_bytes``, ``m_ack``,
    ``init_window_bytes``, ``ssthresh_bytes`` and ``transfer_bytes``.
    Blank lines and ``#`` comments are ignored.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value

    links: dict[int, dict[str, float]] = {}
    config_kwargs: dict[str, int] = {}
    int_keys = {"segment_size_bytes", "m_ack", "init_window_bytes", "ssthresh_bytes", "transfer_bytes"}
    for key, value in values.items():
        if key.startswith("link."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in ("bandwidth_mbps", "delay_ms"):
                raise ValidationError(key, "unknown link key")
            try:
                index = int(parts[1])
                links.setdefault(index, {})[parts[2]] = float(value)
            except ValueError:
                raise ValidationError(key, f"not a number: {value!r}") from None
        elif key in int_keys:
            try:
                config_kwargs[key] = int(value)
            except ValueError:
                raise ValidationError(key, f"not an integer: {value!r}") from None
        else:
            raise ValidationError(key, "unknown key")

    if not links:
        raise ValidationError("links", "at least one link is required")
    indices = sorted(links)
    if indices != list(range(1, len(indices) + 1)):
        raise ValidationError("links", f"link indices must be 1..n, got {indices}")
    bandwidths, delays = [], []
    for i in indices:
        entry = links[i]
        for name in ("bandwidth_mbps", "delay_ms"):
            if name not in entry:
                raise ValidationError(f"link.{i}.{name}", "missing")
        bandwidths.append(mbps(entry["bandwidth_mbps"]))
        delays.append(ms(entry["delay_ms"]))
    # Link() reports the field by attribute name; map it back to the file key
    for i, (b, d) in enumerate(zip(bandwidths, delays), start=1):
        if not b > 0:
            raise ValidationError(f"link.{i}.bandwidth_mbps", "bandwidth must be positive")
        if not d >= 0:
            raise ValidationError(f"link.{i}.delay_ms", "delay must be non-negative")
    config = ModelConfig.from_bytes(**config_kwargs)
    return Scenario.build(bandwidths, delays, config, label)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    return parse_scenario_text(path.read_text(), label=path.stem)


def format_scenario(scenario: Scenario) -> str:
    cfg = scenario.config
    lines = []
    for i, link in enumerate(scenario.paths.links, start=1):
        lines.append(f"link.{i}.bandwidth_mbps = {link.bandwidth_bps / 1e6!r}")
        lines.append(f"link.{i}.delay_ms = {link.prop_delay_s * 1e3!r}")
    lines += [
        f"segment_size_bytes = {cfg.segment_size_bytes}",
        f"m_ack = {cfg.m_ack}",
        f"init_window_bytes = {int(cfg.init_window_segments * cfg.segment_size_bytes)}",
        f"ssthresh_bytes = {int(cfg.ssthresh_segments * cfg.segment_size_bytes)}",
        f"transfer_bytes = {cfg.transfer_bytes}",
    ]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# delay datasets: CSV "link,delay_ms"


def read_delay_csv(path: str | Path) -> DelayDataset:
    """Read a ``link,delay_ms`` CSV into a :class:`DelayDataset` (seconds)."""
    path = Path(path)
    with path.open(newline="") as fh:
        return parse_delay_rows(csv.reader(fh))


def parse_delay_rows(rows: Iterable[Sequence[str]]) -> DelayDataset:
    rows = iter(rows)
    header = next(rows, None)
    if header is None:
        raise DatasetError("dataset is empty")
    if [h.strip().lower() for h in header] != ["link", "delay_ms"]:
        raise DatasetError(f"line 1: expected header 'link,delay_ms', got {','.join(header)!r}")
    delays: dict[str, list[float]] = {}
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise DatasetError(f"line {lineno}: expected 2 fields, got {row!r}")
        label, raw = row[0].strip(), row[1].strip()
        try:
            value = float(raw)
        except ValueError:
            raise DatasetError(f"line {lineno}: delay is not a number: {raw!r}") from None
        if not label:
            raise DatasetError(f"line {lineno}: empty link label")
        if not (value > 0) or not math.isfinite(value):
            raise DatasetError(f"line {lineno}: delay must be positive, got {raw!r}")
        # decimal shift so a written file reads back to the identical float
        delays.setdefault(label, []).append(float(Decimal(raw).scaleb(-3)))
    if not delays:
        raise DatasetError("dataset has a header but no measurements")
    return DelayDataset({k: tuple(v) for k, v in delays.items()})


def write_delay_csv(dataset: DelayDataset, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["link", "delay_ms"])
        for label, values in dataset.delays.items():
            for v in values:
                writer.writerow([label, _ms_text(v)])


def _ms_text(seconds: float) -> str:
    # shifting the shortest round-trip decimal by three places is exact, and so is the reader's shift back
    return format(Decimal(repr(seconds)).scaleb(3), "f")
