"""Shared builders for synthetic EPW content and WeatherSeries objects.

Everything here writes EPW text directly with its own formatting and
calendar arithmetic, independent of the parser/serializer under test.
"""

from __future__ import annotations

import numpy as np

from gbqa.epw import DataPeriod, EpwHeader, MonthDay, WeatherSeries

# month lengths, 1-indexed, non-leap (kept local: oracle independence)
MDAYS_TABLE = (0, 31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)

# mirrors the EPW column order; values are benign defaults for a mild day
DEFAULT_ROW = {
    "dry_bulb_temperature": 20.0,
    "dew_point_temperature": 12.0,
    "relative_humidity": 60.0,
    "atmospheric_pressure": 101325.0,
    "extraterrestrial_horizontal_radiation": 0.0,
    "extraterrestrial_direct_normal_radiation": 0.0,
    "horizontal_infrared_radiation_intensity": 330.0,
    "global_horizontal_radiation": 0.0,
    "direct_normal_radiation": 0.0,
    "diffuse_horizontal_radiation": 0.0,
    "global_horizontal_illuminance": 0.0,
    "direct_normal_illuminance": 0.0,
    "diffuse_horizontal_illuminance": 0.0,
    "zenith_luminance": 0.0,
    "wind_direction": 180.0,
    "wind_speed": 3.5,
    "total_sky_cover": 5.0,
    "opaque_sky_cover": 3.0,
    "visibility": 20.0,
    "ceiling_height": 2000.0,
    "present_weather_observation": 9.0,
    "present_weather_codes": 999999999.0,
    "precipitable_water": 15.0,
    "aerosol_optical_depth": 0.05,
    "snow_depth": 0.0,
    "days_since_last_snowfall": 88.0,
    "albedo": 0.2,
    "liquid_precipitation_depth": 0.0,
    "liquid_precipitation_quantity": 1.0,
}

FIELD_ORDER = tuple(DEFAULT_ROW)


def header_lines(
    station="Testville",
    country="USA",
    lat=40.0,
    lon=-74.0,
    tz=-5.0,
    elev=10.0,
    start=(1, 1),
    end=(12, 31),
    rph=1,
):
    return [
        f"LOCATION,{station},NY,{country},Synthetic,000000,{lat},{lon},{tz},{elev}",
        "DESIGN CONDITIONS,0",
        "TYPICAL/EXTREME PERIODS,0",
        "GROUND TEMPERATURES,0",
        "HOLIDAYS/DAYLIGHT SAVINGS,No,0,0,0",
        "COMMENTS 1,synthetic test data",
        "COMMENTS 2,",
        f"DATA PERIODS,1,{rph},Data,Sunday,{start[0]}/{start[1]},{end[0]}/{end[1]}",
    ]


def iter_days(start=(1, 1), end=(12, 31), leap=False):
    """Calendar days from start to end inclusive (independent oracle)."""
    mdays = list(MDAYS_TABLE)
    if leap:
        mdays[2] = 29
    m, d = start
    while (m, d) <= tuple(end):
        yield m, d
        d += 1
        if d > mdays[m]:
            d = 1
            m += 1
            if m > 12:
                break


def make_epw_text(
    start=(1, 1),
    end=(1, 1),
    overrides: dict | None = None,
    leap=False,
    year=2009,
    flags="?9?9?9",
    **header_kw,
) -> str:
    """Build EPW text; overrides maps field name -> constant or fn(m,d,h).

    Hours in the emitted text are EPW-style 1-24.
    """
    overrides = overrides or {}
    lines = header_lines(start=start, end=end, **header_kw)
    for m, d in iter_days(start, end, leap=leap):
        for h in range(1, 25):
            row = []
            for name in FIELD_ORDER:
                v = overrides.get(name, DEFAULT_ROW[name])
                if callable(v):
                    v = v(m, d, h)
                row.append(v)
            vals = ",".join(_fmt(v) for v in row)
            lines.append(f"{year},{m},{d},{h},0,{flags},{vals}")
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return repr(float(v))


def make_series(
    start=(1, 1),
    end=(1, 1),
    overrides: dict | None = None,
    leap=False,
    year=2009,
    station="Testville",
) -> WeatherSeries:
    """Build a WeatherSeries directly (no text round-trip)."""
    overrides = overrides or {}
    months, days, hours = [], [], []
    for m, d in iter_days(start, end, leap=leap):
        for h in range(24):
            months.append(m)
            days.append(d)
            hours.append(h)
    n = len(months)
    data = np.empty((n, len(FIELD_ORDER)))
    for j, name in enumerate(FIELD_ORDER):
        v = overrides.get(name, DEFAULT_ROW[name])
        if callable(v):
            data[:, j] = [v(m, d, h) for m, d, h in zip(months, days, hours)]
        else:
            data[:, j] = v
    header = EpwHeader(
        station_name=station,
        country="USA",
        latitude=40.0,
        longitude=-74.0,
        timezone=-5.0,
        elevation=10.0,
        data_periods=(DataPeriod(MonthDay(*start), MonthDay(*end), 1),),
    )
    return WeatherSeries(
        header,
        np.full(n, year, dtype=np.int64),
        np.array(months, dtype=np.int64),
        np.array(days, dtype=np.int64),
        np.array(hours, dtype=np.int64),
        np.zeros(n, dtype=np.int64),
        ["?9?9?9"] * n,
        data,
    )
