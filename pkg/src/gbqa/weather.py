"""Time-period selection and statistical aggregation for weather series.

The period grammar here is a public contract shared with the chat tool
schemas: a period spec is either the literal ``YEAR`` or
``DATE:<M>/<D>-<M>/<D>``, an inclusive calendar range within one year.
"""

from __future__ import annotations

import calendar
import re
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .epw import (
    FIELDS,
    EmptyData,
    MonthDay,
    WeatherSeries,
    days_in_month,
)

__all__ = [
    "AggPoint",
    "AggregatedSeries",
    "BadPeriodSyntax",
    "DayStat",
    "EmptyPeriod",
    "FieldStats",
    "InvalidDate",
    "PeriodError",
    "PeriodRange",
    "ReversedRange",
    "STEPS",
    "WeatherSummary",
    "aggregate",
    "parse_period",
    "period_slice",
    "summarize",
]

STEPS = ("hourly", "daily", "monthly")

FIELD_UNITS = {f.name: (f.units or "") for f in FIELDS}


class PeriodError(ValueError):
    """Base for period-spec rejections."""


class BadPeriodSyntax(PeriodError):
    pass


class InvalidDate(PeriodError):
    pass


class ReversedRange(PeriodError):
    pass


class EmptyPeriod(ValueError):
    """The period selects no hours of the given series."""


class PeriodRange(NamedTuple):
    start: MonthDay
    end: MonthDay

    def days(self, leap: bool = False) -> Iterator[MonthDay]:
        """Every (month, day) in the range, in calendar order."""
        m, d = self.start
        while (m, d) <= tuple(self.end):
            yield MonthDay(m, d)
            d += 1
            if d > days_in_month(m, leap):
                m, d = m + 1, 1
                if m > 12:
                    break

    def hour_count(self, leap: bool = False) -> int:
        return 24 * sum(1 for _ in self.days(leap))

    def months_inside(self, leap: bool = False) -> list[int]:
        """Calendar months every day of which lies inside the range."""
        out = []
        for m in range(1, 13):
            first = (m, 1)
            last = (m, days_in_month(m, leap))
            if tuple(self.start) <= first and last <= tuple(self.end):
                out.append(m)
        return out


_PERIOD_RE = re.compile(r"DATE:(\d{1,2})/(\d{1,2})-(\d{1,2})/(\d{1,2})\Z")

# grammar is non-leap: 2/29 is not a valid endpoint, but a range spanning
# it still selects leap-day rows from a leap-year series
def parse_period(spec: str) -> PeriodRange:
    text = spec.strip()
    if text == "YEAR":
        return PeriodRange(MonthDay(1, 1), MonthDay(12, 31))
    m = _PERIOD_RE.fullmatch(text)
    if m is None:
        raise BadPeriodSyntax(
            f"period must be 'YEAR' or 'DATE:M/D-M/D', got {spec!r}"
        )
    sm, sd, em, ed = map(int, m.groups())
    for month, day in ((sm, sd), (em, ed)):
        if not 1 <= month <= 12:
            raise InvalidDate(f"month out of range: {month}")
        if not 1 <= day <= days_in_month(month):
            raise InvalidDate(f"no such day: {month}/{day}")
    if (sm, sd) > (em, ed):
        raise ReversedRange(f"start {sm}/{sd} is after end {em}/{ed}")
    return PeriodRange(MonthDay(sm, sd), MonthDay(em, ed))


class AggPoint(NamedTuple):
    label: str
    mean: float | None
    minimum: float | None
    maximum: float | None
    count_present: int
    count_missing: int


@dataclass(frozen=True)
class AggregatedSeries:
    field: str
    units: str
    step: str
    points: tuple[AggPoint, ...]

    def __len__(self) -> int:
        return len(self.points)


def period_slice(series: WeatherSeries, period: PeriodRange) -> slice:
    """Contiguous row range of `series` falling inside `period`.

    Rows are sorted by (month, day, hour), so a calendar range is always
    one contiguous block. Raises EmptyPeriod when no row falls inside.
    """
    key = series.months * 100 + series.days
    lo = int(np.searchsorted(key, period.start.month * 100 + period.start.day, "left"))
    hi = int(np.searchsorted(key, period.end.month * 100 + period.end.day, "right"))
    if hi <= lo:
        raise EmptyPeriod(f"no data between {period.start} and {period.end}")
    return slice(lo, hi)


def _bucket(label: str, seg: np.ndarray) -> AggPoint:
    total = int(seg.size)
    present = int(np.count_nonzero(~np.isnan(seg)))
    if present == 0:
        return AggPoint(label, None, None, None, 0, total)
    return AggPoint(
        label,
        float(np.nanmean(seg)),
        float(np.nanmin(seg)),
        float(np.nanmax(seg)),
        present,
        total - present,
    )


def aggregate(
    series: WeatherSeries, field: str, step: str, period: PeriodRange
) -> AggregatedSeries:
    """Bucket one field's hours over `period` at the given granularity.

    daily buckets cover every calendar day of the period; monthly buckets
    cover only months lying entirely inside it; hourly returns the raw
    hours. Statistics ignore missing values, and buckets with no present
    value carry None statistics so chart axes stay continuous.
    """
    if step not in STEPS:
        raise ValueError(f"step must be one of {STEPS}, got {step!r}")
    col = series.column(field)
    rows = period_slice(series, period)
    months = series.months[rows]
    days = series.days[rows]
    hours = series.hours[rows]
    col = col[rows]
    leap = series.is_leap
    points: list[AggPoint] = []

    if step == "hourly":
        for m, d, h, v in zip(months, days, hours, col):
            if np.isnan(v):
                points.append(AggPoint(f"{m}/{d} {h:02d}:00", None, None, None, 0, 1))
            else:
                fv = float(v)
                points.append(AggPoint(f"{m}/{d} {h:02d}:00", fv, fv, fv, 1, 0))
    elif step == "daily":
        key = months * 100 + days
        for md in period.days(leap):
            code = md.month * 100 + md.day
            a = np.searchsorted(key, code, "left")
            b = np.searchsorted(key, code, "right")
            points.append(_bucket(f"{md.month}/{md.day}", col[a:b]))
    else:
        for m in period.months_inside(leap):
            a = np.searchsorted(months, m, "left")
            b = np.searchsorted(months, m, "right")
            points.append(_bucket(calendar.month_abbr[m], col[a:b]))

    return AggregatedSeries(field, FIELD_UNITS[field], step, tuple(points))


class FieldStats(NamedTuple):
    mean: float | None
    minimum: float | None
    maximum: float | None
    count_present: int
    count_missing: int


class DayStat(NamedTuple):
    month: int
    day: int
    mean: float


@dataclass(frozen=True)
class WeatherSummary:
    station_name: str
    country: str
    latitude: float
    longitude: float
    record_count: int
    fields: dict[str, FieldStats]
    hottest_day: DayStat | None
    coldest_day: DayStat | None
    monthly_dry_bulb: tuple[tuple[int, float | None], ...]


def _field_stats(col: np.ndarray) -> FieldStats:
    present = int(np.count_nonzero(~np.isnan(col)))
    missing = int(col.size) - present
    if present == 0:
        return FieldStats(None, None, None, 0, missing)
    return FieldStats(
        float(np.nanmean(col)),
        float(np.nanmin(col)),
        float(np.nanmax(col)),
        present,
        missing,
    )


def summarize(series: WeatherSeries) -> WeatherSummary:
    """Whole-series statistics: per-field annual figures, the hottest and
    coldest days by daily mean dry-bulb (earliest date wins ties), and
    monthly dry-bulb means for the months the series covers.
    """
    if len(series) == 0:
        raise EmptyData("cannot summarize an empty series")
    stats = {
        spec.name: _field_stats(series.data[:, spec.slot]) for spec in FIELDS
    }

    dry = series.column("dry_bulb_temperature")
    key = series.months * 100 + series.days
    codes, starts = np.unique(key, return_index=True)
    bounds = np.append(starts, len(key))
    hottest: DayStat | None = None
    coldest: DayStat | None = None
    for i, code in enumerate(codes):
        seg = dry[bounds[i] : bounds[i + 1]]
        present = np.count_nonzero(~np.isnan(seg))
        if present == 0:
            continue
        day_mean = float(np.nanmean(seg))
        month, day = int(code) // 100, int(code) % 100
        if hottest is None or day_mean > hottest.mean:
            hottest = DayStat(month, day, day_mean)
        if coldest is None or day_mean < coldest.mean:
            coldest = DayStat(month, day, day_mean)

    monthly: list[tuple[int, float | None]] = []
    for m in np.unique(series.months):
        seg = dry[series.months == m]
        if np.count_nonzero(~np.isnan(seg)) == 0:
            monthly.append((int(m), None))
        else:
            monthly.append((int(m), float(np.nanmean(seg))))

    h = series.header
    return WeatherSummary(
        station_name=h.station_name,
        country=h.country,
        latitude=h.latitude,
        longitude=h.longitude,
        record_count=len(series),
        fields=stats,
        hottest_day=hottest,
        coldest_day=coldest,
        monthly_dry_bulb=tuple(monthly),
    )
