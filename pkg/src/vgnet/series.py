"""Price series ingestion, windowing and descriptive statistics."""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, NamedTuple

import numpy as np

from .exceptions import (
    DuplicateTimestamp,
    EmptyWindow,
    MalformedCsv,
    NonFinitePrice,
    TooShort,
    UnparseableTimestamp,
)

__all__ = [
    "FREQUENCIES",
    "PAPER_DAILY",
    "PAPER_MONTHLY",
    "CsvSchema",
    "DescriptiveStats",
    "PriceSeries",
    "WindowSlice",
    "WindowSpec",
    "day_partition",
    "describe",
    "monthly_partition",
    "parse_csv",
    "serialize_csv",
    "slice_series",
    "to_datetime64",
]

FREQUENCIES = ("daily", "5min", "15min", "30min", "other")
SPARSE_THRESHOLD = 30

_TIMESTAMP_RE = re.compile(r"^\d{4}-\d{2}-\d{2}(?:[ T]\d{2}:\d{2}(?::\d{2})?)?$")
_ONE_DAY = np.timedelta64(1, "D")


def to_datetime64(value) -> np.datetime64:
    """Coerce a date string, ``datetime`` or ``datetime64`` to second resolution."""
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[s]")
    if isinstance(value, str):
        value = value.strip()
        if not _TIMESTAMP_RE.match(value):
            raise UnparseableTimestamp(f"unsupported timestamp format {value!r}")
        value = datetime.fromisoformat(value)
    if isinstance(value, datetime) and value.tzinfo is not None:
        value = (value - value.utcoffset()).replace(tzinfo=None)
    return np.datetime64(value, "s")


def infer_frequency(timestamps: np.ndarray) -> str:
    """Guess a frequency label from the median sampling interval."""
    if len(timestamps) < 2:
        return "other"
    step = int(np.median(np.diff(timestamps.astype("int64"))))
    if step >= 86400:
        return "daily"
    for seconds, label in ((300, "5min"), (900, "15min"), (1800, "30min")):
        if step == seconds:
            return label
    return "other"


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Ordered ``(timestamp, price)`` observations of one instrument.

    Timestamps are stored as ``datetime64[s]`` with naive-UTC semantics and must
    be strictly increasing. Prices must be finite; negative values are allowed.
    Both arrays are read-only after construction.
    """

    timestamps: np.ndarray
    prices: np.ndarray
    frequency_label: str = "other"
    instrument_label: str = ""

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[s]").copy()
        px = np.asarray(self.prices, dtype=np.float64).copy()
        if ts.ndim != 1 or px.ndim != 1 or ts.shape != px.shape:
            raise ValueError("timestamps and prices must be 1-D arrays of equal length")
        if len(px) < 2:
            raise TooShort(f"a price series needs at least 2 observations, got {len(px)}")
        if not np.all(np.isfinite(px)):
            bad = int(np.flatnonzero(~np.isfinite(px))[0])
            raise NonFinitePrice(f"non-finite price at position {bad}")
        if np.any(np.diff(ts.astype("int64")) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if self.frequency_label not in FREQUENCIES:
            raise ValueError(f"frequency_label must be one of {FREQUENCIES}")
        ts.flags.writeable = False
        px.flags.writeable = False
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "prices", px)

    def __len__(self):
        return len(self.prices)

    def __eq__(self, other):
        if not isinstance(other, PriceSeries):
            return NotImplemented
        return (
            self.frequency_label == other.frequency_label
            and self.instrument_label == other.instrument_label
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.prices.view(np.int64), other.prices.view(np.int64))
        )

    __hash__ = None

    @property
    def observations(self) -> list[tuple[np.datetime64, float]]:
        return list(zip(self.timestamps, self.prices.tolist()))

    @property
    def start(self) -> np.datetime64:
        return self.timestamps[0]

    @property
    def end(self) -> np.datetime64:
        return self.timestamps[-1]

    def seconds(self) -> np.ndarray:
        """Timestamps as float seconds since the epoch."""
        return self.timestamps.astype("int64").astype(np.float64)

    def _subset(self, lo: int, hi: int) -> "PriceSeries":
        return PriceSeries(
            self.timestamps[lo:hi],
            self.prices[lo:hi],
            frequency_label=self.frequency_label,
            instrument_label=self.instrument_label,
        )


@dataclass(frozen=True)
class WindowSpec:
    """Half-open calendar interval ``[start, end)`` with a name."""

    name: str
    start: np.datetime64
    end: np.datetime64

    def __post_init__(self):
        object.__setattr__(self, "start", to_datetime64(self.start))
        object.__setattr__(self, "end", to_datetime64(self.end))
        if not self.start < self.end:
            raise ValueError(f"window {self.name!r}: start must precede end")

    @classmethod
    def from_dates(cls, name: str, first_day: str, last_day: str) -> "WindowSpec":
        """Build a window from inclusive calendar days, e.g. ``2018-03-26`` .. ``2019-12-30``."""
        start = to_datetime64(first_day).astype("datetime64[D]")
        end = to_datetime64(last_day).astype("datetime64[D]") + _ONE_DAY
        return cls(name, start, end)

    def to_dict(self) -> dict:
        return {"name": self.name, "start": str(self.start), "end": str(self.end)}

    @classmethod
    def from_dict(cls, item: dict) -> "WindowSpec":
        return cls(item["name"], item["start"], item["end"])


def _check_unique(windows: Iterable[WindowSpec]) -> tuple[WindowSpec, ...]:
    windows = tuple(windows)
    names = [w.name for w in windows]
    if len(set(names)) != len(names):
        raise ValueError("window names must be unique within a partition set")
    return windows


PAPER_DAILY = _check_unique([
    WindowSpec.from_dates("Sub1", "2018-03-26", "2019-12-30"),
    WindowSpec.from_dates("Sub2", "2019-12-31", "2022-02-23"),
    WindowSpec.from_dates("Sub3", "2022-02-24", "2022-12-31"),
    WindowSpec.from_dates("Sub4", "2023-01-01", "2023-07-20"),
])

PAPER_MONTHLY = _check_unique([
    WindowSpec.from_dates("M1", "2019-12-01", "2019-12-30"),
    WindowSpec.from_dates("M2", "2019-12-31", "2020-01-30"),
    WindowSpec.from_dates("M3", "2022-01-25", "2022-02-23"),
    WindowSpec.from_dates("M4", "2022-02-24", "2022-03-25"),
    WindowSpec.from_dates("M5", "2023-01-01", "2023-01-31"),
])


@dataclass(frozen=True)
class CsvSchema:
    time_col: str = "timestamp"
    price_col: str = "price"
    frequency_label: str | None = None
    instrument_label: str = ""


def parse_csv(data: bytes | str, schema: CsvSchema = CsvSchema()) -> PriceSeries:
    """Parse a UTF-8 CSV with a header row into a :class:`PriceSeries`.

    Rows may arrive in any order and are sorted by timestamp. Row numbers in
    error messages are file line numbers (the header is line 1). When
    ``schema.frequency_label`` is None it is inferred from the median spacing.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise MalformedCsv(f"input is not valid UTF-8: {exc}") from None
    reader = csv.reader(io.StringIO(data))
    header = next(reader, None)
    if header is None:
        raise TooShort("empty input: no header row and no observations")
    header = [h.strip() for h in header]
    for col in (schema.time_col, schema.price_col):
        if col not in header:
            raise MalformedCsv(f"missing column {col!r} (header has {header})")
    t_idx, p_idx = header.index(schema.time_col), header.index(schema.price_col)

    stamps, prices, rows = [], [], []
    for fields in reader:
        row = reader.line_num
        if not fields or all(not f.strip() for f in fields):
            continue
        if len(fields) != len(header):
            raise MalformedCsv(f"expected {len(header)} fields, found {len(fields)}", row)
        raw_t, raw_p = fields[t_idx].strip(), fields[p_idx].strip()
        if not _TIMESTAMP_RE.match(raw_t):
            raise UnparseableTimestamp(f"cannot parse timestamp {raw_t!r}", row)
        try:
            stamps.append(datetime.fromisoformat(raw_t))
        except ValueError:
            raise UnparseableTimestamp(f"invalid calendar value {raw_t!r}", row) from None
        try:
            value = float(raw_p)
        except ValueError:
            raise MalformedCsv(f"cannot parse price {raw_p!r}", row) from None
        if not math.isfinite(value):
            raise NonFinitePrice(f"non-finite price {raw_p!r}", row)
        prices.append(value)
        rows.append(row)

    if len(prices) < 2:
        raise TooShort(f"need at least 2 observations, found {len(prices)}")
    ts = np.array(stamps, dtype="datetime64[s]")
    order = np.argsort(ts, kind="stable")
    ts = ts[order]
    dup = np.flatnonzero(np.diff(ts.astype("int64")) == 0)
    if dup.size:
        row = rows[order[dup[0] + 1]]
        raise DuplicateTimestamp(f"duplicate timestamp {ts[dup[0]]}", row)
    return PriceSeries(
        ts,
        np.asarray(prices, dtype=np.float64)[order],
        frequency_label=schema.frequency_label or infer_frequency(ts),
        instrument_label=schema.instrument_label,
    )


def serialize_csv(series: PriceSeries, schema: CsvSchema = CsvSchema()) -> bytes:
    """Write ``series`` as CSV; ``repr`` of each float keeps the round trip bit-exact."""
    out = io.StringIO()
    out.write(f"{schema.time_col},{schema.price_col}\n")
    daily = not np.any(series.timestamps.astype("int64") % 86400)
    for t, p in zip(series.timestamps, series.prices.tolist()):
        stamp = str(t.astype("datetime64[D]")) if daily else str(t).replace("T", " ")
        out.write(f"{stamp},{p!r}\n")
    return out.getvalue().encode("utf-8")


def slice_series(series: PriceSeries, window: WindowSpec) -> PriceSeries:
    """Return the observations with ``window.start <= t < window.end``."""
    lo = int(np.searchsorted(series.timestamps, window.start, side="left"))
    hi = int(np.searchsorted(series.timestamps, window.end, side="left"))
    if hi - lo < 2:
        raise EmptyWindow(
            f"window {window.name!r} holds {hi - lo} observation(s), need at least 2"
        )
    if lo == 0 and hi == len(series):
        return series
    return series._subset(lo, hi)


class WindowSlice(NamedTuple):
    """One partition cell. ``series`` is None when only one observation fell inside."""

    window: WindowSpec
    series: PriceSeries | None
    n_obs: int
    sparse: bool


def _partition(series: PriceSeries, edges: np.ndarray, names: list[str]) -> list[WindowSlice]:
    bounds = np.searchsorted(series.timestamps, edges, side="left")
    cells = []
    for name, a, b, lo, hi in zip(names, edges[:-1], edges[1:], bounds[:-1], bounds[1:]):
        count = int(hi - lo)
        if count == 0:
            continue
        sub = None
        if count >= 2:
            sub = series if count == len(series) else series._subset(int(lo), int(hi))
        cells.append(WindowSlice(WindowSpec(name, a, b), sub, count, count < SPARSE_THRESHOLD))
    return cells


def monthly_partition(series: PriceSeries) -> list[WindowSlice]:
    """Split ``series`` into calendar months (UTC); months without data are skipped."""
    first = series.start.astype("datetime64[M]")
    last = series.end.astype("datetime64[M]")
    months = np.arange(first, last + np.timedelta64(2, "M"), dtype="datetime64[M]")
    names = [str(m) for m in months[:-1]]
    return _partition(series, months.astype("datetime64[s]"), names)


def day_partition(series: PriceSeries, days: int) -> list[WindowSlice]:
    """Split into consecutive ``days``-long windows anchored at the first observation's day."""
    if days < 1:
        raise ValueError("days must be positive")
    first = series.start.astype("datetime64[D]")
    span = int((series.end.astype("datetime64[D]") - first) // np.timedelta64(1, "D"))
    count = span // days + 1
    edges = first + np.arange(count + 1) * np.timedelta64(days, "D")
    names = [str(e) for e in edges[:-1]]
    return _partition(series, edges.astype("datetime64[s]"), names)


@dataclass(frozen=True)
class DescriptiveStats:
    n_obs: int
    mean: float
    max: float
    min: float
    std_dev: float
    skewness: float | None
    kurtosis: float | None
    jb_statistic: float | None
    jb_p_value: float | None
    flags: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "n_obs": self.n_obs,
            "mean": self.mean,
            "max": self.max,
            "min": self.min,
            "std_dev": self.std_dev,
            "skewness": self.skewness,
            "kurtosis": self.kurtosis,
            "jb_statistic": self.jb_statistic,
            "jb_p_value": self.jb_p_value,
            "flags": list(self.flags),
        }


def describe(series: PriceSeries | np.ndarray) -> DescriptiveStats:
    """Sample moments and the asymptotic Jarque-Bera test.

    Skewness is ``m3 / m2**1.5`` and kurtosis ``m4 / m2**2`` (non-excess) from
    biased central moments; the standard deviation uses the ``n - 1`` divisor.
    A zero-variance sample yields ``None`` for the moment-based fields and the
    ``"DegenerateMoments"`` flag.
    """
    x = series.prices if isinstance(series, PriceSeries) else np.asarray(series, float)
    n = len(x)
    if n < 4:
        raise TooShort(f"descriptive statistics need at least 4 observations, got {n}")
    mean = float(np.mean(x))
    dev = x - mean
    m2 = float(np.mean(dev**2))
    base = dict(
        n_obs=n,
        mean=mean,
        max=float(np.max(x)),
        min=float(np.min(x)),
        std_dev=float(np.std(x, ddof=1)),
    )
    if np.ptp(x) == 0.0 or m2 == 0.0:
        return DescriptiveStats(
            **base, skewness=None, kurtosis=None, jb_statistic=None, jb_p_value=None,
            flags=("DegenerateMoments",),
        )
    # The ratios are scale-free; normalising first avoids underflow of m2**1.5.
    z = dev / np.max(np.abs(dev))
    z2 = float(np.mean(z**2))
    skew = float(np.mean(z**3)) / z2**1.5
    kurt = float(np.mean(z**4)) / z2**2
    jb = n / 6.0 * (skew**2 + (kurt - 3.0) ** 2 / 4.0)
    return DescriptiveStats(
        **base, skewness=skew, kurtosis=kurt, jb_statistic=jb, jb_p_value=math.exp(-jb / 2.0)
    )
