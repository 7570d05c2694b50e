"""Minimal self-contained SVG line plots.

Hand-rolled rather than delegated to a plotting package so the output is a
single deterministic file: no timestamps, no font subsetting, and the raw
data embedded as an XML comment for diffing.
"""

import math

__all__ = ["line_plot"]

WIDTH, HEIGHT = 640, 420
MARGIN = 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _ticks(lo, hi, count=6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1, 2, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * step:
        out.append(round(v, 12))
        v += step
    return out


def line_plot(path, series, x_label, y_label, title="", vlines=()):
    """Write an SVG with one polyline per named series.

    ``series`` maps a label to (xs, ys); ``vlines`` is a list of
    (x, label) markers (e.g. an admissibility threshold).
    """
    finite = [
        (x, y)
        for xs, ys in series.values()
        for x, y in zip(xs, ys)
        if math.isfinite(x) and math.isfinite(y)
    ]
    if not finite:
        raise ValueError("nothing to plot")
    xs_all = [p[0] for p in finite] + [v for v, _ in vlines]
    ys_all = [p[1] for p in finite]
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(x):
        return MARGIN + (x - x_lo) / (x_hi - x_lo) * (WIDTH - 2 * MARGIN)

    def sy(y):
        return HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2 * MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        "<!-- data:",
    ]
    for label, (xs, ys) in series.items():
        rows = " ".join(f"{x:.12g},{y:.12g}" for x, y in zip(xs, ys))
        parts.append(f"  {label}: {rows}")
    parts.append("-->")
    parts.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')

    for tx in _ticks(x_lo, x_hi):
        px = sx(tx)
        parts.append(
            f'<line x1="{px:.1f}" y1="{MARGIN}" x2="{px:.1f}" '
            f'y2="{HEIGHT - MARGIN}" stroke="#eeeeee"/>'
        )
        parts.append(
            f'<text x="{px:.1f}" y="{HEIGHT - MARGIN + 18}" font-size="11" '
            f'text-anchor="middle">{tx:g}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        py = sy(ty)
        parts.append(
            f'<line x1="{MARGIN}" y1="{py:.1f}" x2="{WIDTH - MARGIN}" '
            f'y2="{py:.1f}" stroke="#eeeeee"/>'
        )
        parts.append(
            f'<text x="{MARGIN - 6}" y="{py + 4:.1f}" font-size="11" '
            f'text-anchor="end">{ty:g}</text>'
        )
    parts.append(
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
        f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="black"/>'
    )

    for x, label in vlines:
        px = sx(x)
        parts.append(
            f'<line x1="{px:.1f}" y1="{MARGIN}" x2="{px:.1f}" '
            f'y2="{HEIGHT - MARGIN}" stroke="#888888" stroke-dasharray="4 3"/>'
        )
        parts.append(
            f'<text x="{px + 4:.1f}" y="{MARGIN + 14}" font-size="11">{label}</text>'
        )

    for i, (label, (xs, ys)) in enumerate(series.items()):
        pts = " ".join(
            f"{sx(x):.2f},{sy(y):.2f}"
            for x, y in zip(xs, ys)
            if math.isfinite(x) and math.isfinite(y)
        )
        color = COLORS[i % len(COLORS)]
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{WIDTH - MARGIN - 4}" y="{MARGIN + 16 + 14 * i}" '
            f'font-size="12" text-anchor="end" fill="{color}">{label}</text>'
        )

    parts.append(
        f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 14}" font-size="12" '
        f'text-anchor="middle">{x_label}</text>'
    )
    parts.append(
        f'<text x="16" y="{HEIGHT / 2:.0f}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {HEIGHT / 2:.0f})">{y_label}</text>'
    )
    if title:
        parts.append(
            f'<text x="{WIDTH / 2:.0f}" y="24" font-size="14" '
            f'text-anchor="middle">{title}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
