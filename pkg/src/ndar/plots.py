"""Minimal self-contained SVG renderings (no plotting dependency)."""
from __future__ import annotations

from html import escape

W, H, PAD = 480, 320, 48
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _scale(lo, hi, a, b):
    if hi == lo:
        hi = lo + 1.0
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def _frame(xlabel, ylabel, body):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">'
        f'<rect width="{W}" height="{H}" fill="white"/>'
        f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD // 2}" y2="{H - PAD}" stroke="black"/>'
        f'<line x1="{PAD}" y1="{PAD // 2}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>'
        f'<text x="{W // 2}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>'
        f'<text x="14" y="{H // 2}" transform="rotate(-90 14 {H // 2})" text-anchor="middle">{escape(ylabel)}</text>'
        + body
        + "</svg>\n"
    )


def _ticks(lo, hi, sx, sy, axis):
    out = []
    for k in range(5):
        v = lo + (hi - lo) * k / 4
        if axis == "x":
            out.append(f'<text x="{sx(v):.1f}" y="{H - PAD + 14}" text-anchor="middle">{v:.3g}</text>')
        else:
            out.append(f'<text x="{PAD - 4}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.3g}</text>')
    return "".join(out)


def scatter_svg(x, y, xlabel="x", ylabel="y") -> str:
    x, y = list(map(float, x)), list(map(float, y))
    sx = _scale(min(x), max(x), PAD, W - PAD)
    sy = _scale(min(y), max(y), H - PAD, PAD)
    pts = "".join(f'<circle cx="{sx(a):.1f}" cy="{sy(b):.1f}" r="2.5" fill="{COLORS[0]}" fill-opacity="0.6"/>' for a, b in zip(x, y))
    return _frame(xlabel, ylabel, pts + _ticks(min(x), max(x), sx, sy, "x") + _ticks(min(y), max(y), sx, sy, "y"))


def lines_svg(x, series: dict, xlabel="x", ylabel="y") -> str:
    x = list(map(float, x))
    ys = [float(v) for s in series.values() for v in s]
    sx = _scale(min(x), max(x), PAD, W - PAD)
    sy = _scale(min(ys), max(ys), H - PAD, PAD)
    body = []
    for k, (name, vals) in enumerate(series.items()):
        c = COLORS[k % len(COLORS)]
        pts = " ".join(f"{sx(a):.1f},{sy(float(b)):.1f}" for a, b in zip(x, vals))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="2"/>')
        body.append(f'<text x="{W - PAD - 60}" y="{PAD + 14 * k}" fill="{c}">{escape(str(name))}</text>')
    return _frame(xlabel, ylabel, "".join(body) + _ticks(min(x), max(x), sx, sy, "x") + _ticks(min(ys), max(ys), sx, sy, "y"))


def histogram_svg(hists: dict, xlabel="value", ylabel="fraction") -> str:
    """Side-by-side bars for histograms indexed 0..k-1."""
    k = max(len(v) for v in hists.values())
    top = max(float(f) for v in hists.values() for f in v) or 1.0
    sx = _scale(0, k, PAD, W - PAD)
    sy = _scale(0, top, H - PAD, PAD)
    bw = (W - 2 * PAD) / k / max(1, len(hists))
    body = []
    for s, (name, vals) in enumerate(hists.items()):
        c = COLORS[s % len(COLORS)]
        for i, f in enumerate(vals):
            x0 = sx(i) + s * bw
            body.append(f'<rect x="{x0:.1f}" y="{sy(float(f)):.1f}" width="{bw:.1f}" height="{H - PAD - sy(float(f)):.1f}" fill="{c}"/>')
        body.append(f'<text x="{W - PAD - 150}" y="{PAD + 14 * s}" fill="{c}">{escape(str(name))}</text>')
    return _frame(xlabel, ylabel, "".join(body) + _ticks(0, k, sx, sy, "x") + _ticks(0, top, sx, sy, "y"))
