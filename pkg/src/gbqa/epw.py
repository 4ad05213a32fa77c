"""EnergyPlus Weather (EPW) file parsing, access, and serialization.

An EPW file is 8 header lines (LOCATION, DESIGN CONDITIONS,
TYPICAL/EXTREME PERIODS, GROUND TEMPERATURES, HOLIDAYS/DAYLIGHT SAVINGS,
COMMENTS 1, COMMENTS 2, DATA PERIODS) followed by comma-separated hourly
rows with 35 columns: year, month, day, hour, minute, data-source flags,
then 29 meteorological fields. Missing data is encoded per column with
documented sentinel values (99.9 for temperatures, 9999 for radiation,
and so on); this module masks those out so sentinel values never leak
into analysis as real data.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "EpwError",
    "MalformedHeader",
    "BadRow",
    "EmptyData",
    "UnknownField",
    "PeriodMismatch",
    "MonthDay",
    "DataPeriod",
    "EpwHeader",
    "Timestamp",
    "HourlyRecord",
    "WeatherSeries",
    "FieldSpec",
    "FIELDS",
    "FIELD_NAMES",
    "field_units",
    "parse_epw",
    "serialize_epw",
    "field_series",
    "series_equal",
    "days_in_month",
]

HEADER_KEYWORDS = (
    "LOCATION",
    "DESIGN CONDITIONS",
    "TYPICAL/EXTREME PERIODS",
    "GROUND TEMPERATURES",
    "HOLIDAYS/DAYLIGHT SAVINGS",
    "COMMENTS 1",
    "COMMENTS 2",
    "DATA PERIODS",
)

#: days per month, index 1..12; non-leap. Feb 29 is additionally accepted
#: in data rows so that leap-year files (8784 rows) parse.
_MDAYS = (0, 31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)


class EpwError(Exception):
    """Base class for EPW parsing and serialization failures."""


class MalformedHeader(EpwError):
    """The first 8 lines are not the standard EPW header sequence."""


class BadRow(EpwError):
    """A data row is unusable: wrong column count, unparseable numerics,
    an invalid calendar timestamp, or a timestamp out of order."""

    def __init__(self, line_no: int, reason: str = "bad row"):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class EmptyData(EpwError):
    """The file or series holds zero data rows."""


class UnknownField(EpwError):
    """A field name is not in the canonical EPW field map."""


class PeriodMismatch(EpwError):
    """Record count does not match the DATA PERIODS header declaration."""


class MonthDay(NamedTuple):
    month: int
    day: int


class DataPeriod(NamedTuple):
    start: MonthDay
    end: MonthDay
    records_per_hour: int


class FieldSpec(NamedTuple):
    name: str
    units: str
    missing: float | None  # sentinel from the EPW spec; None = no sentinel
    slot: int  # index into WeatherSeries.data columns


#: The 29 meteorological columns of an EPW data row, in file order.
#: Sentinels are the published EPW missing-value codes.
FIELDS: tuple[FieldSpec, ...] = tuple(
    FieldSpec(name, units, missing, slot)
    for slot, (name, units, missing) in enumerate(
        [
            ("dry_bulb_temperature", "°C", 99.9),
            ("dew_point_temperature", "°C", 99.9),
            ("relative_humidity", "%", 999.0),
            ("atmospheric_pressure", "Pa", 999999.0),
            ("extraterrestrial_horizontal_radiation", "Wh/m²", 9999.0),
            ("extraterrestrial_direct_normal_radiation", "Wh/m²", 9999.0),
            ("horizontal_infrared_radiation_intensity", "Wh/m²", 9999.0),
            ("global_horizontal_radiation", "Wh/m²", 9999.0),
            ("direct_normal_radiation", "Wh/m²", 9999.0),
            ("diffuse_horizontal_radiation", "Wh/m²", 9999.0),
            ("global_horizontal_illuminance", "lux", 999999.0),
            ("direct_normal_illuminance", "lux", 999999.0),
            ("diffuse_horizontal_illuminance", "lux", 999999.0),
            ("zenith_luminance", "cd/m²", 9999.0),
            ("wind_direction", "°", 999.0),
            ("wind_speed", "m/s", 999.0),
            ("total_sky_cover", "tenths", 99.0),
            ("opaque_sky_cover", "tenths", 99.0),
            ("visibility", "km", 9999.0),
            ("ceiling_height", "m", 99999.0),
            ("present_weather_observation", "code", None),
            ("present_weather_codes", "code", None),
            ("precipitable_water", "mm", 999.0),
            ("aerosol_optical_depth", "thousandths", 0.999),
            ("snow_depth", "cm", 999.0),
            ("days_since_last_snowfall", "days", 99.0),
            ("albedo", "ratio", 999.0),
            ("liquid_precipitation_depth", "mm", 999.0),
            ("liquid_precipitation_quantity", "hr", 99.0),
        ]
    )
)

FIELD_NAMES: tuple[str, ...] = tuple(f.name for f in FIELDS)
_FIELD_BY_NAME: dict[str, FieldSpec] = {f.name: f for f in FIELDS}

N_FIELDS = len(FIELDS)
N_COLUMNS = 6 + N_FIELDS  # year, month, day, hour, minute, source flags + data


def field_spec(name: str) -> FieldSpec:
    """Look up a canonical field by name, raising UnknownField otherwise."""
    try:
        return _FIELD_BY_NAME[name]
    except KeyError:
        raise UnknownField(
            f"unknown field {name!r}; expected one of the canonical EPW names"
        ) from None


def field_units(name: str) -> str:
    return field_spec(name).units


def days_in_month(month: int, leap: bool = False) -> int:
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range: {month}")
    if month == 2 and leap:
        return 29
    return _MDAYS[month]


@dataclass(frozen=True)
class EpwHeader:
    """Site metadata and data-period declarations from the 8 header lines."""

    station_name: str
    country: str
    latitude: float
    longitude: float
    timezone: float
    elevation: float
    data_periods: tuple[DataPeriod, ...]

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise MalformedHeader(f"latitude out of range: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise MalformedHeader(f"longitude out of range: {self.longitude}")
        if not -12.0 <= self.timezone <= 14.0:
            raise MalformedHeader(f"timezone out of range: {self.timezone}")
        if not self.data_periods:
            raise MalformedHeader("at least one data period is required")
        for period in self.data_periods:
            if period.records_per_hour < 1:
                raise MalformedHeader(
                    f"records_per_hour must be >= 1, got {period.records_per_hour}"
                )
            _validate_monthday(period.start)
            _validate_monthday(period.end)
            if (period.start.month, period.start.day) > (period.end.month, period.end.day):
                raise MalformedHeader(
                    f"data period start {period.start} after end {period.end}"
                )

    def expected_record_counts(self) -> tuple[int, int]:
        """(non-leap, leap) record counts implied by the data periods."""
        base = 0
        leap_extra = 0
        for period in self.data_periods:
            days = _day_span(period.start, period.end)
            base += days * 24 * period.records_per_hour
            # Feb 29 can never be named as an endpoint, so the leap day is
            # inside the period exactly when start <= (2,29) <= end.
            if tuple(period.start) <= (2, 29) <= tuple(period.end):
                leap_extra += 24 * period.records_per_hour
        return base, base + leap_extra


def _validate_monthday(md: MonthDay) -> None:
    if not 1 <= md.month <= 12:
        raise MalformedHeader(f"month out of range in data period: {md.month}")
    if not 1 <= md.day <= days_in_month(md.month):
        raise MalformedHeader(f"day out of range in data period: {md.month}/{md.day}")


def _day_span(start: MonthDay, end: MonthDay) -> int:
    """Inclusive day count between two month/day points, non-leap calendar."""
    cum = [0]
    for m in range(1, 13):
        cum.append(cum[-1] + _MDAYS[m])
    a = cum[start.month - 1] + start.day
    b = cum[end.month - 1] + end.day
    return b - a + 1


class Timestamp(NamedTuple):
    """Record time; hours are normalized to 0-23 (EPW source uses 1-24)."""

    month: int
    day: int
    hour: int
    minute: int


class FieldSample(NamedTuple):
    timestamp: Timestamp
    value: float | None
    is_missing: bool


@dataclass(frozen=True, slots=True)
class HourlyRecord:
    """One parsed EPW data row.

    ``values`` holds the 29 meteorological fields in file order with
    ``None`` where the source carried the column's missing sentinel.
    """

    year: int
    month: int
    day: int
    hour: int  # 0-23
    minute: int
    data_source_flags: str
    values: tuple[float | None, ...]

    @property
    def timestamp(self) -> Timestamp:
        return Timestamp(self.month, self.day, self.hour, self.minute)

    def get(self, name: str) -> float | None:
        return self.values[field_spec(name).slot]

    def is_missing(self, name: str) -> bool:
        return self.values[field_spec(name).slot] is None

    @property
    def dry_bulb_temperature(self) -> float | None:
        return self.values[0]

    @property
    def dew_point_temperature(self) -> float | None:
        return self.values[1]

    @property
    def relative_humidity(self) -> float | None:
        return self.values[2]

    @property
    def atmospheric_pressure(self) -> float | None:
        return self.values[3]

    @property
    def global_horizontal_radiation(self) -> float | None:
        return self.values[7]

    @property
    def direct_normal_radiation(self) -> float | None:
        return self.values[8]

    @property
    def diffuse_horizontal_radiation(self) -> float | None:
        return self.values[9]

    @property
    def wind_direction(self) -> float | None:
        return self.values[14]

    @property
    def wind_speed(self) -> float | None:
        return self.values[15]

    @property
    def total_sky_cover(self) -> float | None:
        return self.values[16]

    @property
    def snow_depth(self) -> float | None:
        return self.values[24]


class WeatherSeries:
    """A parsed EPW file: header plus hourly records in columnar form.

    Storage is column-oriented (integer timestamp arrays plus an
    (n, 29) float matrix with NaN marking missing entries) so that
    aggregation and serialization stay vectorized; ``records`` offers the
    row view. Instances are immutable by convention once built and safe
    to share across threads.
    """

    def __init__(
        self,
        header: EpwHeader,
        years: np.ndarray,
        months: np.ndarray,
        days: np.ndarray,
        hours: np.ndarray,
        minutes: np.ndarray,
        data_source_flags: Sequence[str],
        data: np.ndarray,
        _line_offset: int = 0,
    ):
        n = len(months)
        for arr, label in (
            (years, "years"),
            (days, "days"),
            (hours, "hours"),
            (minutes, "minutes"),
        ):
            if len(arr) != n:
                raise ValueError(f"{label} length {len(arr)} != {n}")
        if len(data_source_flags) != n:
            raise ValueError("data_source_flags length mismatch")
        if data.shape != (n, N_FIELDS):
            raise ValueError(f"data shape {data.shape} != ({n}, {N_FIELDS})")
        _validate_calendar(months, days, hours, _line_offset)
        _validate_ordering(months, days, hours, _line_offset)
        if n > 0:
            lo, hi = header.expected_record_counts()
            if n not in (lo, hi):
                raise PeriodMismatch(
                    f"{n} records but DATA PERIODS declares {lo}"
                    + (f" (or {hi} with a leap day)" if hi != lo else "")
                )
        self.header = header
        self.years = years
        self.months = months
        self.days = days
        self.hours = hours
        self.minutes = minutes
        self.data_source_flags = tuple(data_source_flags)
        self.data = data
        self._records: tuple[HourlyRecord, ...] | None = None

    def __len__(self) -> int:
        return len(self.months)

    @property
    def records(self) -> tuple[HourlyRecord, ...]:
        if self._records is None:
            values = self.data.tolist()
            self._records = tuple(
                HourlyRecord(
                    int(y),
                    int(m),
                    int(d),
                    int(h),
                    int(mi),
                    ds,
                    tuple(None if v != v else v for v in row),  # NaN -> None
                )
                for y, m, d, h, mi, ds, row in zip(
                    self.years,
                    self.months,
                    self.days,
                    self.hours,
                    self.minutes,
                    self.data_source_flags,
                    values,
                )
            )
        return self._records

    @property
    def is_leap(self) -> bool:
        feb = self.months == 2
        return bool(np.any(self.days[feb] == 29)) if feb.any() else False

    def column(self, name: str) -> np.ndarray:
        """The named field as a float column, NaN where missing."""
        return self.data[:, field_spec(name).slot]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeatherSeries):
            return NotImplemented
        return (
            self.header == other.header
            and np.array_equal(self.months, other.months)
            and np.array_equal(self.days, other.days)
            and np.array_equal(self.hours, other.hours)
            and np.array_equal(self.minutes, other.minutes)
            and np.array_equal(self.years, other.years)
            and self.data_source_flags == other.data_source_flags
            and np.array_equal(self.data, other.data, equal_nan=True)
        )

    __hash__ = None  # type: ignore[assignment]


def _validate_calendar(months, days, hours, line_offset: int) -> None:
    n = len(months)
    if n == 0:
        return
    mdays = np.asarray(_MDAYS + (0,))
    month_ok = (months >= 1) & (months <= 12)
    if not month_ok.all():
        _raise_first(~month_ok, line_offset, "month out of range")
    limit = mdays[months]
    limit = np.where(months == 2, 29, limit)  # tolerate leap day
    day_ok = (days >= 1) & (days <= limit)
    if not day_ok.all():
        _raise_first(~day_ok, line_offset, "day out of range for month")
    hour_ok = (hours >= 0) & (hours <= 23)
    if not hour_ok.all():
        _raise_first(~hour_ok, line_offset, "hour out of range")


def _validate_ordering(months, days, hours, line_offset: int) -> None:
    if len(months) < 2:
        return
    key = months.astype(np.int64) * 10000 + days.astype(np.int64) * 100 + hours
    bad = np.nonzero(np.diff(key) <= 0)[0]
    if bad.size:
        i = int(bad[0]) + 1
        raise BadRow(line_offset + i + 1, "timestamp not strictly increasing")


def _raise_first(bad_mask: np.ndarray, line_offset: int, reason: str) -> None:
    i = int(np.nonzero(bad_mask)[0][0])
    raise BadRow(line_offset + i + 1, reason)


# sentinel vector aligned with FIELDS; NaN where a column has no sentinel
_SENTINELS = np.array(
    [f.missing if f.missing is not None else np.nan for f in FIELDS]
)


def parse_epw(raw: bytes | str) -> WeatherSeries:
    """Parse EPW text into a WeatherSeries.

    Raises MalformedHeader, BadRow (with the 1-based file line number),
    EmptyData, or PeriodMismatch.
    """
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8", errors="strict")
        except UnicodeDecodeError:
            text = raw.decode("latin-1")
    else:
        text = raw
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines or not lines[0].startswith("LOCATION"):
        raise MalformedHeader("first line must begin with LOCATION")
    if len(lines) < 8:
        raise MalformedHeader("fewer than 8 header lines")
    header = _parse_header(lines[:8])
    data_lines = lines[8:]
    if not data_lines:
        raise EmptyData("no data rows after the 8 header lines")

    expected_commas = N_COLUMNS - 1
    for i, line in enumerate(data_lines):
        if line.count(",") != expected_commas:
            raise BadRow(
                8 + i + 1, f"expected {N_COLUMNS} columns, got {line.count(',') + 1}"
            )

    numeric_cols = [0, 1, 2, 3, 4] + list(range(6, N_COLUMNS))
    try:
        grid = np.loadtxt(
            data_lines,
            delimiter=",",
            usecols=numeric_cols,
            dtype=np.float64,
            comments=None,
            ndmin=2,
        )
    except ValueError:
        _locate_bad_numeric(data_lines)
        raise  # unreachable; _locate_bad_numeric always raises
    if np.isnan(grid).any():
        _locate_bad_numeric(data_lines)

    meta = grid[:, :5]
    if not (meta == np.floor(meta)).all():
        bad = np.nonzero((meta != np.floor(meta)).any(axis=1))[0]
        raise BadRow(8 + int(bad[0]) + 1, "timestamp columns must be integers")
    years = meta[:, 0].astype(np.int64)
    months = meta[:, 1].astype(np.int64)
    days = meta[:, 2].astype(np.int64)
    hours_raw = meta[:, 3].astype(np.int64)
    minutes = meta[:, 4].astype(np.int64)
    if not ((hours_raw >= 1) & (hours_raw <= 24)).all():
        _raise_first(~((hours_raw >= 1) & (hours_raw <= 24)), 8, "hour out of range")
    hours = hours_raw - 1  # EPW hours are 1-24; normalize to 0-23

    flags = [line.split(",", 6)[5] for line in data_lines]
    data = grid[:, 5:].copy()
    data[data == _SENTINELS] = np.nan

    return WeatherSeries(
        header, years, months, days, hours, minutes, flags, data, _line_offset=8
    )


def _locate_bad_numeric(data_lines: list[str]) -> None:
    """Slow path: pinpoint the first unparseable numeric cell."""
    numeric_cols = [0, 1, 2, 3, 4] + list(range(6, N_COLUMNS))
    for i, line in enumerate(data_lines):
        cells = line.split(",")
        for c in numeric_cols:
            try:
                v = float(cells[c])
            except ValueError:
                raise BadRow(
                    8 + i + 1, f"column {c + 1}: cannot parse {cells[c]!r} as a number"
                ) from None
            if v != v:
                raise BadRow(8 + i + 1, f"column {c + 1}: NaN is not valid EPW data")
    raise BadRow(9, "unparseable numeric data")


def _parse_header(lines: Sequence[str]) -> EpwHeader:
    for line, keyword in zip(lines, HEADER_KEYWORDS):
        if not line.upper().startswith(keyword):
            raise MalformedHeader(f"expected header line starting with {keyword!r}")
    loc = lines[0].split(",")
    if len(loc) < 10:
        raise MalformedHeader("LOCATION line needs 10 comma-separated fields")
    try:
        latitude = float(loc[6])
        longitude = float(loc[7])
        timezone = float(loc[8])
        elevation = float(loc[9])
    except ValueError as exc:
        raise MalformedHeader(f"LOCATION numeric fields unparseable: {exc}") from None

    dp = lines[7].split(",")
    if len(dp) < 7:
        raise MalformedHeader("DATA PERIODS line needs at least 7 fields")
    try:
        n_periods = int(dp[1])
        records_per_hour = int(dp[2])
    except ValueError:
        raise MalformedHeader("DATA PERIODS counts must be integers") from None
    if n_periods < 1:
        raise MalformedHeader("DATA PERIODS must declare at least one period")
    if len(dp) < 4 + 3 * n_periods:
        raise MalformedHeader(f"DATA PERIODS declares {n_periods} periods but is short")
    periods = []
    for p in range(n_periods):
        start = _parse_monthday(dp[5 + 3 * p])
        end = _parse_monthday(dp[6 + 3 * p])
        periods.append(DataPeriod(start, end, records_per_hour))

    return EpwHeader(
        station_name=loc[1].strip(),
        country=loc[3].strip(),
        latitude=latitude,
        longitude=longitude,
        timezone=timezone,
        elevation=elevation,
        data_periods=tuple(periods),
    )


def _parse_monthday(text: str) -> MonthDay:
    parts = text.strip().split("/")
    if len(parts) == 3:  # some files write M/D/YYYY
        parts = parts[:2]
    if len(parts) != 2:
        raise MalformedHeader(f"cannot parse data period date {text!r}")
    try:
        md = MonthDay(int(parts[0]), int(parts[1]))
    except ValueError:
        raise MalformedHeader(f"cannot parse data period date {text!r}") from None
    _validate_monthday(md)
    return md


def serialize_epw(series: WeatherSeries) -> bytes:
    """Render a WeatherSeries back to EPW text.

    Numeric formatting is canonical (shortest exact float repr), so
    parse_epw(serialize_epw(s)) reproduces s field for field. Refuses an
    empty series with EmptyData.
    """
    if len(series) == 0:
        raise EmptyData("refusing to serialize a series with no records")
    h = series.header
    rph = h.data_periods[0].records_per_hour
    periods = ",".join(
        f"Data,Sunday,{p.start.month}/{p.start.day},{p.end.month}/{p.end.day}"
        for p in h.data_periods
    )
    header_lines = [
        f"LOCATION,{h.station_name},-,{h.country},Custom,000000,"
        f"{_fmt(h.latitude)},{_fmt(h.longitude)},{_fmt(h.timezone)},{_fmt(h.elevation)}",
        "DESIGN CONDITIONS,0",
        "TYPICAL/EXTREME PERIODS,0",
        "GROUND TEMPERATURES,0",
        "HOLIDAYS/DAYLIGHT SAVINGS,No,0,0,0",
        "COMMENTS 1,",
        "COMMENTS 2,",
        f"DATA PERIODS,{len(h.data_periods)},{rph},{periods}",
    ]
    data = series.data
    missing = np.isnan(data)
    if missing.any():
        data = np.where(missing, _SENTINELS, data)
    rows = data.tolist()
    prefixes = [
        f"{y},{m},{d},{hh + 1},{mi},{ds},"
        for y, m, d, hh, mi, ds in zip(
            series.years.tolist(),
            series.months.tolist(),
            series.days.tolist(),
            series.hours.tolist(),
            series.minutes.tolist(),
            series.data_source_flags,
        )
    ]
    body = "\n".join(
        prefix + ",".join(map(repr, row)) for prefix, row in zip(prefixes, rows)
    )
    return ("\n".join(header_lines) + "\n" + body + "\n").encode("utf-8")


def _fmt(x: float) -> str:
    return repr(float(x))


def field_series(
    series: WeatherSeries, data_type: str
) -> list[FieldSample]:
    """All samples of one canonical field in file order.

    Missing entries come back flagged with value None; sentinel values are
    never substituted in.
    """
    spec = field_spec(data_type)
    col = series.data[:, spec.slot].tolist()
    return [
        FieldSample(
            Timestamp(int(m), int(d), int(h), int(mi)),
            None if v != v else v,
            v != v,
        )
        for m, d, h, mi, v in zip(
            series.months, series.days, series.hours, series.minutes, col
        )
    ]


def series_equal(a: WeatherSeries, b: WeatherSeries, tol: float = 1e-9) -> bool:
    """Field-for-field equality with tolerance on the real-valued columns."""
    if len(a) != len(b):
        return False
    ha, hb = a.header, b.header
    if (
        ha.station_name != hb.station_name
        or ha.country != hb.country
        or ha.data_periods != hb.data_periods
        or abs(ha.latitude - hb.latitude) > tol
        or abs(ha.longitude - hb.longitude) > tol
        or abs(ha.timezone - hb.timezone) > tol
        or abs(ha.elevation - hb.elevation) > tol
    ):
        return False
    if not (
        np.array_equal(a.years, b.years)
        and np.array_equal(a.months, b.months)
        and np.array_equal(a.days, b.days)
        and np.array_equal(a.hours, b.hours)
        and np.array_equal(a.minutes, b.minutes)
        and a.data_source_flags == b.data_source_flags
    ):
        return False
    if not np.array_equal(np.isnan(a.data), np.isnan(b.data)):
        return False
    diff = np.abs(np.nan_to_num(a.data) - np.nan_to_num(b.data))
    return bool((diff <= tol).all())
