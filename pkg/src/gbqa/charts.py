"""Deterministic vector charts and the artifact store they write into.

Charts are hand-assembled SVG on a fixed 900 by 450 canvas so that
identical inputs always produce byte-identical files. The store is a flat
directory; each artifact is one file named ``<artifact_id><ext>``.
"""

from __future__ import annotations

import math
import os
import uuid
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .epw import WeatherSeries
from .weather import AggregatedSeries, PeriodRange, period_slice

__all__ = [
    "ArtifactStore",
    "ChartArtifact",
    "EmptySeries",
    "StoreWriteFailed",
    "render_heatmap",
    "render_line",
]

WIDTH, HEIGHT = 900, 450
_ML, _MR, _MT, _MB = 70, 24, 46, 58
_PLOT_W = WIDTH - _ML - _MR
_PLOT_H = HEIGHT - _MT - _MB

_MEDIA_TYPES = {".svg": "image/svg+xml"}


class EmptySeries(ValueError):
    """Nothing to draw."""


class StoreWriteFailed(OSError):
    pass


@dataclass(frozen=True)
class ChartArtifact:
    artifact_id: str
    media_type: str
    path: Path
    title: str
    point_count: int


class ArtifactStore:
    """Flat directory of tool-produced files, addressed by opaque id."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def put(self, data: bytes, ext: str) -> tuple[str, Path]:
        """Write atomically (temp file, then rename) and return (id, path)."""
        artifact_id = uuid.uuid4().hex
        final = self.root / (artifact_id + ext)
        tmp = self.root / (artifact_id + ext + ".part")
        try:
            tmp.write_bytes(data)
            os.replace(tmp, final)
        except OSError as err:
            raise StoreWriteFailed(f"cannot write artifact: {err}") from err
        return artifact_id, final

    def path(self, artifact_id: str) -> Path | None:
        for p in sorted(self.root.glob(artifact_id + ".*")):
            if not p.name.endswith(".part"):
                return p
        return None

    @staticmethod
    def media_type(path: Path) -> str:
        return _MEDIA_TYPES.get(path.suffix, "application/octet-stream")


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def _xy(v: float) -> str:
    return f"{v:.2f}"


def nice_ticks(lo: float, hi: float, target: int = 10) -> list[float]:
    """Round tick positions covering [lo, hi], step from the 1-2-5 series."""
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = 10 * mag
    for mult in (1, 2, 5, 10):
        if span / (mult * mag) <= target - 1:
            step = mult * mag
            break
    t = math.floor(lo / step) * step
    ticks = [round(t, 10)]
    while t < hi - step * 1e-9:
        t += step
        ticks.append(round(t, 10))
    return ticks


def _svg_open(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="Helvetica, Arial, sans-serif">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.0f}" y="26" font-size="15" text-anchor="middle" '
        f'fill="#222222">{escape(title)}</text>',
    ]


def _axis_label_step(n: int, most: int = 12) -> int:
    return max(1, math.ceil(n / most))


def render_line(
    agg: AggregatedSeries, title: str, store: ArtifactStore
) -> ChartArtifact:
    """Line chart of bucket means; daily/monthly steps get a min-max band."""
    n = len(agg.points)
    if n == 0:
        raise EmptySeries("aggregated series has no buckets")

    known: list[float] = []
    for p in agg.points:
        if p.count_present:
            known.extend((p.mean, p.minimum, p.maximum))
    ticks = nice_ticks(min(known), max(known)) if known else [0.0, 1.0]
    ylo, yhi = ticks[0], ticks[-1]

    def x_at(i: int) -> float:
        return _ML + _PLOT_W * (i + 0.5) / n

    def y_at(v: float) -> float:
        return _MT + _PLOT_H * (1.0 - (v - ylo) / (yhi - ylo))

    parts = _svg_open(title)
    for t in ticks:
        y = y_at(t)
        parts.append(
            f'<line x1="{_ML}" y1="{_xy(y)}" x2="{WIDTH - _MR}" y2="{_xy(y)}" '
            f'stroke="#e3e3e3" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_ML - 8}" y="{_xy(y + 4)}" font-size="11" '
            f'text-anchor="end" fill="#555555">{_fmt(t)}</text>'
        )

    lbl_step = _axis_label_step(n)
    for i in range(0, n, lbl_step):
        parts.append(
            f'<text x="{_xy(x_at(i))}" y="{HEIGHT - _MB + 18}" font-size="11" '
            f'text-anchor="middle" fill="#555555">{escape(agg.points[i].label)}</text>'
        )

    # runs of consecutive buckets that actually have data
    runs: list[list[int]] = []
    for i, p in enumerate(agg.points):
        if p.count_present:
            if runs and runs[-1][-1] == i - 1:
                runs[-1].append(i)
            else:
                runs.append([i])

    if agg.step != "hourly":
        for run in runs:
            if len(run) < 2:
                continue
            fwd = " L ".join(
                f"{_xy(x_at(i))},{_xy(y_at(agg.points[i].maximum))}" for i in run
            )
            back = " L ".join(
                f"{_xy(x_at(i))},{_xy(y_at(agg.points[i].minimum))}"
                for i in reversed(run)
            )
            parts.append(
                f'<path class="band" d="M {fwd} L {back} Z" fill="#bfd8f0" '
                f'stroke="none" fill-opacity="0.55"/>'
            )

    for run in runs:
        pts = " ".join(f"{_xy(x_at(i))},{_xy(y_at(agg.points[i].mean))}" for i in run)
        if len(run) == 1:
            i = run[0]
            parts.append(
                f'<circle class="mean" cx="{_xy(x_at(i))}" '
                f'cy="{_xy(y_at(agg.points[i].mean))}" r="3" fill="#1f5fa8"/>'
            )
        else:
            parts.append(
                f'<polyline class="mean" points="{pts}" fill="none" '
                f'stroke="#1f5fa8" stroke-width="1.8"/>'
            )
    if n <= 62:
        for run in runs:
            for i in run:
                parts.append(
                    f'<circle cx="{_xy(x_at(i))}" cy="{_xy(y_at(agg.points[i].mean))}" '
                    f'r="2.2" fill="#1f5fa8"/>'
                )

    axis_name = agg.field if not agg.units else f"{agg.field} ({agg.units})"
    parts.append(
        f'<text x="16" y="{_MT - 10}" font-size="11" fill="#555555">'
        f"{escape(axis_name)}</text>"
    )
    parts.append(
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{HEIGHT - _MB}" '
        f'stroke="#888888" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_ML}" y1="{HEIGHT - _MB}" x2="{WIDTH - _MR}" '
        f'y2="{HEIGHT - _MB}" stroke="#888888" stroke-width="1"/>'
    )
    parts.append("</svg>")

    data = "\n".join(parts).encode("utf-8")
    artifact_id, path = store.put(data, ".svg")
    return ChartArtifact(artifact_id, "image/svg+xml", path, title, n)


_RAMP = ((49, 54, 149), (255, 255, 191), (165, 0, 38))
_MISSING_FILL = "#d9d9d9"


def _ramp_color(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    if t <= 0.5:
        a, b, u = _RAMP[0], _RAMP[1], t * 2.0
    else:
        a, b, u = _RAMP[1], _RAMP[2], (t - 0.5) * 2.0
    r, g, bl = (round(p + (q - p) * u) for p, q in zip(a, b))
    return f"#{r:02x}{g:02x}{bl:02x}"


def render_heatmap(
    series: WeatherSeries,
    field: str,
    period: PeriodRange,
    store: ArtifactStore,
    title: str | None = None,
) -> ChartArtifact:
    """Hour-of-day (rows) by day (columns) grid; missing cells drawn grey."""
    col = series.column(field)
    rows = period_slice(series, period)
    values: dict[tuple[int, int, int], float] = {}
    for m, d, h, v in zip(
        series.months[rows], series.days[rows], series.hours[rows], col[rows]
    ):
        if not np.isnan(v):
            values[(int(m), int(d), int(h))] = float(v)

    days = list(period.days(series.is_leap))
    n_days = len(days)
    if title is None:
        title = f"{field} by hour and day"

    if values:
        vmin = min(values.values())
        vmax = max(values.values())
    else:
        vmin, vmax = 0.0, 1.0
    span = (vmax - vmin) or 1.0

    cell_w = _PLOT_W / n_days
    cell_h = _PLOT_H / 24

    parts = _svg_open(title)
    for ci, (m, d) in enumerate(days):
        x = _ML + ci * cell_w
        for h in range(24):
            y = _MT + h * cell_h
            v = values.get((m, d, h))
            if v is None:
                fill = _MISSING_FILL
                cls = "cell miss"
            else:
                fill = _ramp_color((v - vmin) / span)
                cls = "cell"
            parts.append(
                f'<rect class="{cls}" x="{_xy(x)}" y="{_xy(y)}" '
                f'width="{_xy(cell_w)}" height="{_xy(cell_h)}" fill="{fill}"/>'
            )

    for h in range(0, 24, 4):
        y = _MT + (h + 0.5) * cell_h
        parts.append(
            f'<text x="{_ML - 8}" y="{_xy(y + 4)}" font-size="11" '
            f'text-anchor="end" fill="#555555">{h:02d}:00</text>'
        )
    lbl_step = _axis_label_step(n_days)
    for ci in range(0, n_days, lbl_step):
        m, d = days[ci]
        x = _ML + (ci + 0.5) * cell_w
        parts.append(
            f'<text x="{_xy(x)}" y="{HEIGHT - _MB + 18}" font-size="11" '
            f'text-anchor="middle" fill="#555555">{m}/{d}</text>'
        )

    # compact legend: ten swatches from low to high
    sw = 18
    lx = WIDTH - _MR - 10 * sw
    for i in range(10):
        parts.append(
            f'<rect x="{lx + i * sw}" y="{HEIGHT - 24}" width="{sw}" height="10" '
            f'fill="{_ramp_color(i / 9.0)}"/>'
        )
    parts.append(
        f'<text x="{lx - 6}" y="{HEIGHT - 15}" font-size="11" text-anchor="end" '
        f'fill="#555555">{_fmt(vmin)}</text>'
    )
    parts.append(
        f'<text x="{lx + 10 * sw + 6}" y="{HEIGHT - 15}" font-size="11" '
        f'text-anchor="start" fill="#555555">{_fmt(vmax)}</text>'
    )
    parts.append("</svg>")

    data = "\n".join(parts).encode("utf-8")
    artifact_id, path = store.put(data, ".svg")
    return ChartArtifact(artifact_id, "image/svg+xml", path, title, 24 * n_days)
