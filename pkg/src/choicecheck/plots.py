"""Render check results as standalone SVG figures and portable data files.

Visual conventions: one dark observed series per figure (tagged with
class="observed"), light simulated curves forming the reference band, a
second light band for expected curves where a check defines them, and a
dashed identity reference on reliability plots. Rendering is a pure
function of (result, style): identical inputs give identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagnostics import ScalarCheck, _gaussian_kde_curve, _scott_bandwidth, check_to_dict
from .exceptions import ConfigError
from .svg import SvgCanvas

__all__ = [
    "PlotStyle",
    "export_plot_data",
    "import_plot_data",
    "load_plot_style",
    "render_check",
    "render_market_share_panel",
]


@dataclass(frozen=True)
class PlotStyle:
    """Figure geometry and colors; axis limits override the data-driven ones."""

    width: float = 640.0
    height: float = 420.0
    observed_color: str = "#1f1f1f"
    observed_width: float = 2.0
    simulated_color: str = "#74a9cf"
    simulated_alpha: float = 0.45
    expected_color: str = "#ef8a62"
    expected_alpha: float = 0.45
    reference_color: str = "#777777"
    reference_dash: str = "6,4"
    font_size: float = 12.0
    title_size: float = 14.0
    x_limits: tuple | None = None
    y_limits: tuple | None = None

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("plot dimensions must be positive")
        for alpha in (self.simulated_alpha, self.expected_alpha):
            if not 0.0 <= alpha <= 1.0:
                raise ConfigError("alpha must lie in [0, 1]")


def load_plot_style(path) -> PlotStyle:
    from .data import load_config

    raw = load_config(path)
    for key in ("x_limits", "y_limits"):
        if raw.get(key) is not None:
            raw[key] = tuple(raw[key])
    try:
        return PlotStyle(**raw)
    except TypeError as exc:
        raise ConfigError(f"bad plot style {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Axes
# ---------------------------------------------------------------------------

def _padded(lo, hi, frac=0.05):
    lo, hi = float(lo), float(hi)
    if hi <= lo:
        return lo - 0.5, lo + 0.5
    pad = frac * (hi - lo)
    return lo - pad, hi + pad


def _ticks(lo, hi, target=5):
    span = hi - lo
    if span <= 0:
        return [lo]
    mag = 10.0 ** math.floor(math.log10(span / target))
    step = mag
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if span / step <= target + 1:
            break
    out = []
    t = math.ceil(lo / step) * step
    while t <= hi + 1e-9 * span:
        out.append(round(t, 10))
        t += step
    return out


class _Frame:
    """Maps data coordinates onto the pixel canvas and draws the axes."""

    def __init__(self, canvas: SvgCanvas, style: PlotStyle, x_range, y_range):
        self.canvas = canvas
        self.style = style
        self.xlo, self.xhi = style.x_limits or x_range
        self.ylo, self.yhi = style.y_limits or y_range
        self.left = 60.0
        self.right = style.width - 16.0
        self.top = 34.0
        self.bottom = style.height - 48.0

    def px(self, x):
        return self.left + (x - self.xlo) / (self.xhi - self.xlo) * (self.right - self.left)

    def py(self, y):
        return self.bottom - (y - self.ylo) / (self.yhi - self.ylo) * (self.bottom - self.top)

    def draw_axes(self, x_label: str, y_label: str, title: str):
        c, s = self.canvas, self.style
        axis = c.group(stroke="#000000", stroke_width="1")
        c.line(self.left, self.bottom, self.right, self.bottom, parent=axis)
        c.line(self.left, self.top, self.left, self.bottom, parent=axis)
        labels = c.group(
            fill="#000000", font_family="monospace", font_size=f"{s.font_size:g}"
        )
        for t in _ticks(self.xlo, self.xhi):
            xp = self.px(t)
            c.line(xp, self.bottom, xp, self.bottom + 4, parent=axis)
            c.text(xp, self.bottom + 16, f"{t:g}", parent=labels, text_anchor="middle")
        for t in _ticks(self.ylo, self.yhi):
            yp = self.py(t)
            c.line(self.left - 4, yp, self.left, yp, parent=axis)
            c.text(self.left - 7, yp + 4, f"{t:g}", parent=labels, text_anchor="end")
        c.text(
            (self.left + self.right) / 2,
            s.height - 10,
            x_label,
            parent=labels,
            text_anchor="middle",
        )
        c.text(
            14,
            (self.top + self.bottom) / 2,
            y_label,
            parent=labels,
            text_anchor="middle",
            transform=f"rotate(-90 14,{(self.top + self.bottom) / 2:.2f})",
        )
        c.text(
            (self.left + self.right) / 2,
            20,
            title,
            parent=labels,
            text_anchor="middle",
            font_size=f"{s.title_size:g}",
        )

    def annotate(self, text: str):
        self.canvas.text(
            self.right - 4,
            self.top + 14,
            text,
            fill="#000000",
            font_family="monospace",
            font_size=f"{self.style.font_size:g}",
            text_anchor="end",
        )


def _title(result) -> str:
    parts = [result.check_type, result.label]
    if result.variable:
        parts.append(result.variable)
    value = getattr(result, "value", None)
    if value is not None:
        parts.append(f"= {value}")
    return " ".join(str(p) for p in parts)


def _curve_points(frame, x, y):
    return [(frame.px(a), frame.py(b)) for a, b in zip(x, y)]


# ---------------------------------------------------------------------------
# Per-type renderers
# ---------------------------------------------------------------------------

def _render_scalar_density(result, style) -> SvgCanvas:
    sim = np.asarray(result.simulated, dtype=np.float64)
    h = _scott_bandwidth(sim)
    grid = np.linspace(sim.min() - 3 * h, sim.max() + 3 * h, 256)
    dens = _gaussian_kde_curve(sim, grid)
    canvas = SvgCanvas(style.width, style.height)
    xr = _padded(min(grid[0], result.observed), max(grid[-1], result.observed))
    frame = _Frame(canvas, style, xr, _padded(0.0, dens.max()))
    frame.draw_axes("statistic value", "density", _title(result))
    band = canvas.group(
        stroke=style.simulated_color,
        stroke_opacity=f"{style.simulated_alpha:g}",
        stroke_width="1.5",
        class_="simulated",
    )
    canvas.polyline(_curve_points(frame, grid, dens), parent=band)
    obs = canvas.group(
        stroke=style.observed_color,
        stroke_width=f"{style.observed_width:g}",
        class_="observed",
    )
    canvas.line(
        frame.px(result.observed),
        frame.py(frame.ylo),
        frame.px(result.observed),
        frame.py(frame.yhi),
        parent=obs,
    )
    frame.annotate(f"p = {result.p_value:.3f}")
    return canvas


def _render_histogram(result, style) -> SvgCanvas:
    sim = np.asarray(result.simulated, dtype=np.float64)
    n_bins = int(min(25, max(1, np.unique(sim).size)))
    counts, edges = np.histogram(sim, bins=n_bins)
    canvas = SvgCanvas(style.width, style.height)
    xr = _padded(min(edges[0], result.observed), max(edges[-1], result.observed))
    frame = _Frame(canvas, style, xr, _padded(0.0, counts.max()))
    frame.draw_axes(
        f"count of choosers with {result.variable} = {result.value}",
        "simulated datasets",
        _title(result),
    )
    bars = canvas.group(
        fill=style.simulated_color,
        fill_opacity=f"{style.simulated_alpha:g}",
        stroke="none",
        class_="simulated",
    )
    for count, lo, hi in zip(counts, edges[:-1], edges[1:]):
        if count == 0:
            continue
        canvas.rect(
            frame.px(lo),
            frame.py(count),
            frame.px(hi) - frame.px(lo),
            frame.py(0) - frame.py(count),
            parent=bars,
        )
    obs = canvas.group(
        stroke=style.observed_color,
        stroke_width=f"{style.observed_width:g}",
        class_="observed",
    )
    canvas.line(
        frame.px(result.observed),
        frame.py(frame.ylo),
        frame.px(result.observed),
        frame.py(frame.yhi),
        parent=obs,
    )
    frame.annotate(f"observed = {result.observed:g}  p = {result.p_value:.3f}")
    return canvas


def _boxplot(canvas, frame, style, center_x, values, half_width):
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    lo, hi = float(np.min(values)), float(np.max(values))
    xl, xr = frame.px(center_x - half_width), frame.px(center_x + half_width)
    box = canvas.group(
        stroke=style.simulated_color,
        fill=style.simulated_color,
        fill_opacity=f"{style.simulated_alpha:g}",
        class_="simulated",
    )
    canvas.rect(xl, frame.py(q3), xr - xl, frame.py(q1) - frame.py(q3), parent=box)
    canvas.line(xl, frame.py(med), xr, frame.py(med), parent=box, stroke_width="2")
    cx = frame.px(center_x)
    canvas.line(cx, frame.py(q3), cx, frame.py(hi), parent=box)
    canvas.line(cx, frame.py(q1), cx, frame.py(lo), parent=box)
    canvas.line(xl, frame.py(hi), xr, frame.py(hi), parent=box)
    canvas.line(xl, frame.py(lo), xr, frame.py(lo), parent=box)


def _render_market_share(result, style) -> SvgCanvas:
    return _market_share_canvas([result], style)


def _market_share_canvas(results, style) -> SvgCanvas:
    canvas = SvgCanvas(style.width, style.height)
    values = np.concatenate(
        [np.asarray(r.simulated + [r.observed], dtype=np.float64) for r in results]
    )
    frame = _Frame(
        canvas,
        style,
        (0.5, len(results) + 0.5),
        _padded(values.min(), values.max()),
    )
    title = results[0].check_type if len(results) > 1 else _title(results[0])
    frame.draw_axes("group", "chosen count", title)
    for i, result in enumerate(results, start=1):
        _boxplot(canvas, frame, style, i, np.asarray(result.simulated), 0.28)
        canvas.text(
            frame.px(i),
            frame.bottom + 30,
            result.label,
            fill="#000000",
            font_family="monospace",
            font_size=f"{style.font_size:g}",
            text_anchor="middle",
        )
    obs = canvas.group(
        stroke=style.observed_color,
        stroke_width=f"{style.observed_width:g}",
        fill=style.observed_color,
        class_="observed",
    )
    for i, result in enumerate(results, start=1):
        canvas.circle(frame.px(i), frame.py(result.observed), 4, parent=obs)
        canvas.line(
            frame.px(i - 0.34),
            frame.py(result.observed),
            frame.px(i + 0.34),
            frame.py(result.observed),
            parent=obs,
        )
    if len(results) == 1:
        frame.annotate(f"p = {results[0].p_value:.3f}")
    return canvas


def _curves_canvas(result, style, x_label, y_label, identity_reference=False) -> SvgCanvas:
    canvas = SvgCanvas(style.width, style.height)
    all_y = [result.observed_curve] + [np.asarray(c) for c in result.simulated_curves]
    all_y += [np.asarray(c) for c in result.expected_curves or ()]
    ymin = min(float(np.min(c)) for c in all_y)
    ymax = max(float(np.max(c)) for c in all_y)
    xr = _padded(result.x.min(), result.x.max())
    yr = _padded(ymin, ymax)
    if identity_reference:
        lo = min(xr[0], yr[0])
        hi = max(xr[1], yr[1])
        xr = yr = (lo, hi)
    frame = _Frame(canvas, style, xr, yr)
    frame.draw_axes(x_label, y_label, _title(result))
    band = canvas.group(
        stroke=style.simulated_color,
        stroke_opacity=f"{style.simulated_alpha:g}",
        stroke_width="1",
        class_="simulated",
    )
    for curve in result.simulated_curves:
        canvas.polyline(_curve_points(frame, result.x, curve), parent=band)
    if result.expected_curves is not None:
        expected = canvas.group(
            stroke=style.expected_color,
            stroke_opacity=f"{style.expected_alpha:g}",
            stroke_width="1",
            class_="expected",
        )
        for curve in result.expected_curves:
            canvas.polyline(_curve_points(frame, result.x, curve), parent=expected)
    if identity_reference:
        canvas.line(
            frame.px(frame.xlo),
            frame.py(frame.xlo),
            frame.px(frame.xhi),
            frame.py(frame.xhi),
            stroke=style.reference_color,
            stroke_dasharray=style.reference_dash,
            stroke_width="1",
            class_="reference",
        )
    obs = canvas.group(
        stroke=style.observed_color,
        stroke_width=f"{style.observed_width:g}",
        fill=style.observed_color,
        class_="observed",
    )
    canvas.polyline(_curve_points(frame, result.x, result.observed_curve), parent=obs)
    if result.check_type in ("reliability", "marginal_model"):
        for xv, yv in zip(result.x, result.observed_curve):
            canvas.circle(frame.px(xv), frame.py(yv), 3, parent=obs)
    if result.skipped_draws:
        frame.annotate(f"skipped draws: {len(result.skipped_draws)}")
    return canvas


def render_check(result, style: PlotStyle | None = None, out_path=None):
    """Write the figure for one check result; returns the path."""
    style = style or PlotStyle()
    if result.check_type == "log_predictive":
        canvas = _render_scalar_density(result, style)
    elif result.check_type == "market_share":
        canvas = _render_market_share(result, style)
    elif result.check_type == "simulated_histogram":
        canvas = _render_histogram(result, style)
    elif result.check_type == "reliability":
        canvas = _curves_canvas(
            result,
            style,
            "mean predicted probability",
            "observed share",
            identity_reference=True,
        )
    elif result.check_type == "marginal_model":
        canvas = _curves_canvas(result, style, result.variable, "choice share")
    elif result.check_type == "simulated_kde":
        canvas = _curves_canvas(result, style, result.variable, "density")
    elif result.check_type == "simulated_cdf":
        canvas = _curves_canvas(result, style, result.variable, "cumulative share")
    elif isinstance(result, ScalarCheck):
        canvas = _render_scalar_density(result, style)
    else:
        raise ConfigError(f"no renderer for check type {result.check_type!r}")
    if out_path is None:
        raise ConfigError("render_check needs an output path")
    canvas.write(out_path)
    return Path(out_path)


def render_market_share_panel(results, style: PlotStyle | None = None, out_path=None):
    """All market-share groups side by side as boxplots with observed markers."""
    style = style or PlotStyle()
    canvas = _market_share_canvas(list(results), style)
    canvas.write(out_path)
    return Path(out_path)


# ---------------------------------------------------------------------------
# Plot data files
# ---------------------------------------------------------------------------

_SERIES_KEYS = ("observed", "simulated", "x", "expected_curve")


def _result_dict(result) -> dict:
    return dict(result) if isinstance(result, dict) else check_to_dict(result)


def _csv_number(v) -> str:
    return repr(float(v))


def export_plot_data(result, out_path) -> Path:
    """Lossless dump of a check's numeric content as .json or .csv.

    The CSV holds one row per point with columns series,draw,index,x,value
    and a #meta first line carrying the non-numeric fields; exporting an
    imported file reproduces it byte for byte.
    """
    out_path = Path(out_path)
    d = _result_dict(result)
    if out_path.suffix == ".json":
        out_path.write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")
        return out_path
    if out_path.suffix != ".csv":
        raise ConfigError(f"plot data format {out_path.suffix!r} not supported")
    meta = {k: v for k, v in d.items() if k not in _SERIES_KEYS}
    lines = ["#meta " + json.dumps(meta, sort_keys=True), "series,draw,index,x,value"]
    if "x" not in d:
        lines.append(f"observed,,0,,{_csv_number(d['observed'])}")
        for r, v in enumerate(d["simulated"]):
            lines.append(f"simulated,{r},0,,{_csv_number(v)}")
    else:
        xs = d["x"]
        for i, (xv, yv) in enumerate(zip(xs, d["observed"])):
            lines.append(f"observed,,{i},{_csv_number(xv)},{_csv_number(yv)}")
        for r, curve in enumerate(d["simulated"]):
            for i, yv in enumerate(curve):
                lines.append(f"simulated,{r},{i},{_csv_number(xs[i])},{_csv_number(yv)}")
        for r, curve in enumerate(d.get("expected_curve", ())):
            for i, yv in enumerate(curve):
                lines.append(f"expected,{r},{i},{_csv_number(xs[i])},{_csv_number(yv)}")
    out_path.write_text("\n".join(lines) + "\n")
    return out_path


def import_plot_data(path) -> dict:
    """Read a plot-data file back into the check's dictionary form."""
    path = Path(path)
    if path.suffix == ".json":
        return json.loads(path.read_text())
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("#meta "):
        raise ConfigError(f"{path} is not a plot-data CSV")
    d = json.loads(lines[0][len("#meta "):])
    rows = [line.split(",") for line in lines[2:] if line]
    scalar = all(r[3] == "" for r in rows)
    observed = [r for r in rows if r[0] == "observed"]
    simulated: dict[int, list] = {}
    expected: dict[int, list] = {}
    for series, draw, _idx, _x, value in rows:
        if series == "simulated":
            simulated.setdefault(int(draw), []).append(float(value))
        elif series == "expected":
            expected.setdefault(int(draw), []).append(float(value))
    if scalar:
        d["observed"] = float(observed[0][4])
        d["simulated"] = [simulated[r][0] for r in sorted(simulated)]
    else:
        d["x"] = [float(r[3]) for r in observed]
        d["observed"] = [float(r[4]) for r in observed]
        d["simulated"] = [simulated[r] for r in sorted(simulated)]
        if expected:
            d["expected_curve"] = [expected[r] for r in sorted(expected)]
    return d
