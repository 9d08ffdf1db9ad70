"""Reading charging-pile session logs and hourly electricity prices.

Sessions file
    One row per charging session. Default column names are ``start``,
    ``duration_min`` (or ``end``), ``energy_kwh`` and an optional ``region``.
    Timestamps are ISO-8601 (``2022-06-19T08:00``, ``2022-06-19 08:00:00``) or
    bare clock times (``08:00``); they are read as naive local time and any UTC
    offset is dropped without conversion.

Prices file
    Columns ``hour`` and ``price``. In daily mode the file must carry exactly
    the 24 hours of a day; otherwise it is a contiguous horizon from hour 0.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta

import numpy as np

from ._validation import DataValidationError

logger = logging.getLogger(__name__)

DEFAULT_SCHEMA = {
    "start": "start",
    "duration": "duration_min",
    "end": "end",
    "energy": "energy_kwh",
    "region": "region",
}

# Bare clock times are anchored to this date so parsing never depends on "today".
_CLOCK_ONLY_DATE = date(1970, 1, 1)


@dataclass(frozen=True)
class ChargingSession:
    start_time: datetime
    duration_minutes: float
    energy_kwh: float
    region_id: str = ""

    def __post_init__(self):
        if not (self.duration_minutes >= 0 and math.isfinite(self.duration_minutes)):
            raise DataValidationError(f"duration must be >= 0, got {self.duration_minutes!r}")
        if not (self.energy_kwh >= 0 and math.isfinite(self.energy_kwh)):
            raise DataValidationError(f"energy must be >= 0, got {self.energy_kwh!r}")


@dataclass(frozen=True)
class ArrivalSeries:
    """Sessions started per clock hour; index 0 is the hour at `origin`."""

    hourly_counts: np.ndarray
    origin: datetime

    def __len__(self):
        return len(self.hourly_counts)


@dataclass(frozen=True)
class PriceSeries:
    hourly_price: np.ndarray
    daily: bool = True

    def __post_init__(self):
        prices = np.asarray(self.hourly_price, dtype=float)
        if prices.ndim != 1 or prices.size == 0:
            raise DataValidationError("price series must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(prices)) or np.any(prices < 0):
            raise DataValidationError("prices must be finite and >= 0")
        if self.daily and prices.size != 24:
            raise DataValidationError(f"a daily price profile needs 24 hours, got {prices.size}")
        object.__setattr__(self, "hourly_price", prices)

    @classmethod
    def flat(cls, value=1.0):
        return cls(np.full(24, float(value)), daily=True)

    def window(self, start, length):
        """Prices for horizon hours ``start .. start+length-1``.

        Daily profiles wrap by hour of day; full-horizon series must cover the
        requested window.
        """
        hours = np.arange(start, start + length)
        if self.daily:
            return self.hourly_price[hours % 24]
        if start < 0 or start + length > self.hourly_price.size:
            raise DataValidationError(
                f"price horizon has {self.hourly_price.size} hours, "
                f"window {start}..{start + length - 1} requested"
            )
        return self.hourly_price[hours]


@dataclass
class RejectedRow:
    line: int
    reason: str


class SessionParseError(DataValidationError):
    def __init__(self, message, rejected=()):
        super().__init__(message)
        self.rejected = list(rejected)


@dataclass
class ParseReport:
    sessions: list = field(default_factory=list)
    rejected: list = field(default_factory=list)

    @property
    def n_rows(self):
        return len(self.sessions) + len(self.rejected)


def parse_timestamp(text, time_format=None):
    text = text.strip()
    if not text:
        raise ValueError("empty timestamp")
    if time_format:
        stamp = datetime.strptime(text, time_format)
    else:
        try:
            stamp = datetime.fromisoformat(text)
        except ValueError:
            stamp = datetime.combine(_CLOCK_ONLY_DATE, time.fromisoformat(text))
    return stamp.replace(tzinfo=None)


def _parse_number(text, what):
    try:
        value = float(text.strip())
    except ValueError:
        raise ValueError(f"non-numeric {what} {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"non-finite {what} {text!r}")
    if value < 0:
        raise ValueError(f"negative {what} {text!r}")
    return value


def _resolve_columns(header, schema):
    names = {**DEFAULT_SCHEMA, **(schema or {})}
    explicit = schema or {}
    have = set(header)
    for key in ("start", "energy"):
        if names[key] not in have:
            raise DataValidationError(f"missing mapped column {names[key]!r} ({key})")
    # An explicit mapping wins; otherwise prefer a duration column over an end column.
    if "duration" in explicit or ("end" not in explicit and names["duration"] in have):
        if names["duration"] not in have:
            raise DataValidationError(f"missing mapped column {names['duration']!r} (duration)")
        length_col, length_kind = names["duration"], "duration"
    elif names["end"] in have:
        length_col, length_kind = names["end"], "end"
    else:
        raise DataValidationError(
            f"need a duration column {names['duration']!r} or an end column {names['end']!r}"
        )
    region_col = names["region"] if names["region"] in have else None
    return names["start"], length_col, length_kind, names["energy"], region_col


def parse_sessions_report(path, schema=None, *, time_format=None, region=None,
                          max_reject_fraction=0.1):
    """Parse a sessions CSV, returning accepted sessions and per-row rejections.

    Rows that fail validation are skipped and recorded with their 1-based file
    line number. If more than `max_reject_fraction` of the data rows are
    rejected the whole call fails with :class:`SessionParseError`.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(f"sessions file not found: {path}")
    report = ParseReport()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataValidationError(f"{path}: empty file")
        start_col, length_col, length_kind, energy_col, region_col = _resolve_columns(
            [c.strip() for c in reader.fieldnames], schema
        )
        reader.fieldnames = [c.strip() for c in reader.fieldnames]
        for row in reader:
            line = reader.line_num
            try:
                start = parse_timestamp(row[start_col] or "", time_format)
                if length_kind == "duration":
                    minutes = _parse_number(row[length_col] or "", "duration")
                else:
                    end = parse_timestamp(row[length_col] or "", time_format)
                    if end < start and start.date() == _CLOCK_ONLY_DATE:
                        end += timedelta(days=1)
                    minutes = (end - start).total_seconds() / 60.0
                    if minutes < 0:
                        raise ValueError("end before start")
                energy = _parse_number(row[energy_col] or "", "energy")
            except (ValueError, TypeError) as exc:
                report.rejected.append(RejectedRow(line, str(exc)))
                continue
            label = (row.get(region_col) or "").strip() if region_col else ""
            if region is not None and label != region:
                continue
            report.sessions.append(ChargingSession(start, minutes, energy, label))

    n = report.n_rows
    if n and len(report.rejected) > max_reject_fraction * n:
        first = "; ".join(f"line {r.line}: {r.reason}" for r in report.rejected[:5])
        raise SessionParseError(
            f"{path}: rejected {len(report.rejected)} of {n} rows "
            f"(limit {max_reject_fraction:.0%}); first: {first}",
            report.rejected,
        )
    return report


def parse_sessions(path, schema=None, *, time_format=None, region=None,
                   max_reject_fraction=0.1):
    """Parse a sessions CSV into a list of :class:`ChargingSession`.

    When only an end-time column is mapped, the duration is end minus start
    in minutes. Row order is preserved.
    """
    report = parse_sessions_report(
        path, schema, time_format=time_format, region=region,
        max_reject_fraction=max_reject_fraction,
    )
    if report.rejected:
        logger.warning("%s: rejected %d of %d rows", path, len(report.rejected), report.n_rows)
        for rej in report.rejected:
            logger.info("%s line %d: %s", path, rej.line, rej.reason)
    return report.sessions


def write_sessions(sessions, path):
    """Write sessions in the default schema; floats keep full precision."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["start", "duration_min", "energy_kwh", "region"])
        for s in sessions:
            writer.writerow([
                s.start_time.isoformat(),
                repr(float(s.duration_minutes)),
                repr(float(s.energy_kwh)),
                s.region_id,
            ])


def _floor_hour(stamp):
    return stamp.replace(minute=0, second=0, microsecond=0)


def hour_index(sessions, origin):
    """Whole hours between `origin` and each session's start hour."""
    return np.array(
        [int((_floor_hour(s.start_time) - origin) // timedelta(hours=1)) for s in sessions],
        dtype=np.int64,
    )


def hourly_arrivals(sessions):
    """Count session starts per clock hour, with explicit zeros for silent hours."""
    sessions = list(sessions)
    if not sessions:
        raise DataValidationError("no sessions to aggregate")
    origin = _floor_hour(min(s.start_time for s in sessions))
    idx = hour_index(sessions, origin)
    counts = np.bincount(idx, minlength=int(idx.max()) + 1).astype(np.int64)
    return ArrivalSeries(counts, origin)


def load_prices(path, daily=True):
    """Read an ``hour,price`` CSV into a :class:`PriceSeries`.

    Hours may be numbered 0..23 or 1..24 in daily mode; a horizon file must be
    contiguous from its first hour.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(f"prices file not found: {path}")
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = [c.strip() for c in (reader.fieldnames or [])]
        if "hour" not in fields or "price" not in fields:
            raise DataValidationError(f"{path}: need columns 'hour' and 'price', got {fields}")
        reader.fieldnames = fields
        for row in reader:
            try:
                hour = int(float(row["hour"]))
                price = float(row["price"])
            except (TypeError, ValueError):
                raise DataValidationError(
                    f"{path} line {reader.line_num}: bad hour/price {row!r}"
                ) from None
            if not math.isfinite(price) or price < 0:
                raise DataValidationError(
                    f"{path} line {reader.line_num}: price must be >= 0, got {row['price']!r}"
                )
            rows.append((hour, price))
    if not rows:
        raise DataValidationError(f"{path}: no price rows")
    rows.sort()
    hours = np.array([h for h, _ in rows])
    prices = np.array([p for _, p in rows], dtype=float)
    if daily and len(rows) < 24:
        raise DataValidationError(f"{path}: daily prices need 24 hours, got {len(rows)}")
    if not np.array_equal(hours, np.arange(hours[0], hours[0] + len(hours))):
        raise DataValidationError(f"{path}: hours must be contiguous and unique")
    if daily and (len(rows) != 24 or hours[0] not in (0, 1)):
        raise DataValidationError(f"{path}: daily prices must cover hours 0-23 (or 1-24)")
    return PriceSeries(prices, daily=daily)
