"""Result persistence and plotting: line-delimited records with sorted keys
and byte-stable output (infinity serialized as the token 'inf'), a small
SVG 1.1 band/curve emitter, and matplotlib figure rendering to files.

Plottable records carry an ``x`` field plus either ``y0``/``y1`` (a band,
drawn as a filled rectangle) or ``y`` (a curve point, joined into polylines
per ``series``).  Infinite values split curves and are drawn as markers
clipped to the frame edge.
"""

from __future__ import annotations

import json
import math

from .numerics import DomainError, is_inf

INF_TOKEN = "inf"


def _sanitize(value):
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return value
    if value is None:
        return None
    if isinstance(value, dict):
        return {str(k): _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    if is_inf(value):
        return INF_TOKEN
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    if hasattr(value, "item"):        # numpy scalars
        return _sanitize(value.item())
    if isinstance(value, (int, float)):
        return value
    return str(value)


def record_lines(records):
    """Serialize records as one JSON object per line, keys sorted, UTF-8
    safe; identical records always produce identical bytes."""
    return [
        json.dumps(_sanitize(r), sort_keys=True, separators=(",", ":"))
        for r in records
    ]


def write_records(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for line in record_lines(records):
            fh.write(line + "\n")


# ---------------------------------------------------------------------------
# Plot-data extraction
# ---------------------------------------------------------------------------

def _numeric(v):
    if v == INF_TOKEN or is_inf(v):
        return math.inf
    if isinstance(v, (int, float)):
        return float(v)
    return None


def _collect_plot_data(records):
    bands = []          # (x, y0, y1)
    curves = {}         # series -> list of (x, y) with possible inf
    for r in records:
        x = _numeric(r.get("x"))
        if x is None:
            continue
        if "y0" in r and "y1" in r:
            y0, y1 = _numeric(r["y0"]), _numeric(r["y1"])
            if y0 is not None and y1 is not None:
                bands.append((x, y0, y1))
        elif "y" in r:
            y = _numeric(r["y"])
            if y is not None:
                curves.setdefault(str(r.get("series", "0")), []).append((x, y))
    if not bands and not curves:
        raise DomainError("no plottable fields (need x with y or y0/y1)")
    return bands, curves


def _data_ranges(bands, curves):
    xs, ys = [], []
    for x, y0, y1 in bands:
        if math.isfinite(x):
            xs.append(x)
        ys.extend(v for v in (y0, y1) if math.isfinite(v))
    for pts in curves.values():
        for x, y in pts:
            if math.isfinite(x):
                xs.append(x)
            if math.isfinite(y):
                ys.append(y)
    if not xs:
        xs = [0.0, 1.0]
    if not ys:
        ys = [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5
    return (x0, x1), (y0, y1)


# ---------------------------------------------------------------------------
# SVG emitter
# ---------------------------------------------------------------------------

def emit_svg(records, width=720, height=480, band_fill="#4878a8",
             curve_stroke="#b0413e"):
    """Render records as an SVG 1.1 document: bands as filled rectangles,
    curves as polylines, infinite values as triangular markers clipped to
    the frame edge."""
    bands, curves = _collect_plot_data(records)
    (x0, x1), (y0, y1) = _data_ranges(bands, curves)
    pad = 40.0

    def sx(x):
        x = min(max(x, x0), x1) if math.isfinite(x) else (x1 if x > 0 else x0)
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        y = min(max(y, y0), y1) if math.isfinite(y) else (y1 if y > 0 else y0)
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    xs_seen = sorted({x for x, _, _ in bands if math.isfinite(x)})
    spacing = min(
        (b - a for a, b in zip(xs_seen, xs_seen[1:]) if b > a),
        default=(x1 - x0) / 10.0,
    )
    half_w = 0.4 * spacing / (x1 - x0) * (width - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" '
        f'height="{height - 2 * pad}" fill="none" stroke="#333"/>',
    ]
    for x, b0, b1 in bands:
        top, bot = sy(max(b0, b1)), sy(min(b0, b1))
        parts.append(
            f'<rect x="{sx(x) - half_w:.2f}" y="{top:.2f}" '
            f'width="{2 * half_w:.2f}" height="{max(bot - top, 0.5):.2f}" '
            f'fill="{band_fill}"/>'
        )
    for series in sorted(curves):
        run = []
        for x, y in curves[series]:
            if math.isinf(x) or math.isinf(y):
                if len(run) > 1:
                    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in run)
                    parts.append(
                        f'<polyline points="{pts}" fill="none" '
                        f'stroke="{curve_stroke}" stroke-width="1.5"/>'
                    )
                run = []
                mx, my = sx(x), sy(y)
                parts.append(
                    f'<path d="M {mx:.2f} {my:.2f} l -5 9 l 10 0 z" '
                    f'fill="{curve_stroke}"/>'
                )
            else:
                run.append((sx(x), sy(y)))
        if len(run) > 1:
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in run)
            parts.append(
                f'<polyline points="{pts}" fill="none" '
                f'stroke="{curve_stroke}" stroke-width="1.5"/>'
            )
        elif len(run) == 1:
            parts.append(
                f'<circle cx="{run[0][0]:.2f}" cy="{run[0][1]:.2f}" r="2.5" '
                f'fill="{curve_stroke}"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# Matplotlib rendering
# ---------------------------------------------------------------------------

def render_figure(records, path, title=None):
    """Render the same plot data to an image file via matplotlib (Agg)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    bands, curves = _collect_plot_data(records)
    (x0, x1), (y0, y1) = _data_ranges(bands, curves)
    fig, ax = plt.subplots(figsize=(8, 5.5))
    xs_seen = sorted({x for x, _, _ in bands if math.isfinite(x)})
    spacing = min(
        (b - a for a, b in zip(xs_seen, xs_seen[1:]) if b > a),
        default=(x1 - x0) / 10.0,
    )
    for x, b0, b1 in bands:
        ax.fill_between(
            [x - 0.4 * spacing, x + 0.4 * spacing], min(b0, b1), max(b0, b1),
            color="#4878a8", linewidth=0,
        )
    for series in sorted(curves):
        run_x, run_y = [], []
        for x, y in curves[series]:
            if math.isinf(x) or math.isinf(y):
                if run_x:
                    ax.plot(run_x, run_y, color="#b0413e", linewidth=1.5)
                    run_x, run_y = [], []
                mx = min(max(x, x0), x1) if math.isfinite(x) else (x1 if x > 0 else x0)
                my = min(max(y, y0), y1) if math.isfinite(y) else (y1 if y > 0 else y0)
                ax.plot([mx], [my], marker="v", color="#b0413e")
            else:
                run_x.append(x)
                run_y.append(y)
        if run_x:
            ax.plot(run_x, run_y, color="#b0413e", linewidth=1.5)
    ax.set_xlim(x0 - 0.02 * (x1 - x0), x1 + 0.02 * (x1 - x0))
    ax.set_ylim(y0 - 0.02 * (y1 - y0), y1 + 0.02 * (y1 - y0))
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
