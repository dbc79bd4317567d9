"""Standalone SVG rendering for prediction scatter plots and error histograms.

Output depends only on the input numbers: coordinates are printed with a
fixed number of decimals and series keep the order they were passed in.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd")
WIDTH, HEIGHT = 480, 360
MARGIN = {"left": 60, "right": 20, "top": 36, "bottom": 48}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def _padded(lo: float, hi: float) -> tuple[float, float]:
    if hi <= lo:
        return lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


class _Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str, xlim, ylim):
        self.xlim, self.ylim = xlim, ylim
        self.x0, self.x1 = MARGIN["left"], WIDTH - MARGIN["right"]
        self.y0, self.y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
            f'<line x1="{self.x0}" y1="{self.y0}" x2="{self.x1}" y2="{self.y0}" stroke="black"/>',
            f'<line x1="{self.x0}" y1="{self.y0}" x2="{self.x0}" y2="{self.y1}" stroke="black"/>',
            f'<text x="{(self.x0 + self.x1) / 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>',
            f'<text x="14" y="{(self.y0 + self.y1) / 2}" text-anchor="middle" '
            f'transform="rotate(-90 14 {(self.y0 + self.y1) / 2})">{escape(ylabel)}</text>',
        ]
        for t in _ticks(*xlim):
            px = self.px(t)
            self.parts.append(f'<line x1="{_fmt(px)}" y1="{self.y0}" x2="{_fmt(px)}" y2="{self.y0 + 4}" stroke="black"/>')
            self.parts.append(f'<text x="{_fmt(px)}" y="{self.y0 + 16}" text-anchor="middle">{t:.3g}</text>')
        for t in _ticks(*ylim):
            py = self.py(t)
            self.parts.append(f'<line x1="{self.x0 - 4}" y1="{_fmt(py)}" x2="{self.x0}" y2="{_fmt(py)}" stroke="black"/>')
            self.parts.append(f'<text x="{self.x0 - 6}" y="{_fmt(py + 4)}" text-anchor="end">{t:.3g}</text>')

    def px(self, v: float) -> float:
        lo, hi = self.xlim
        return self.x0 + (v - lo) / (hi - lo) * (self.x1 - self.x0)

    def py(self, v: float) -> float:
        lo, hi = self.ylim
        return self.y0 - (v - lo) / (hi - lo) * (self.y0 - self.y1)

    def legend(self, names):
        for i, name in enumerate(names):
            y = self.y1 + 4 + 14 * i
            color = PALETTE[i % len(PALETTE)]
            self.parts.append(f'<rect x="{self.x0 + 8}" y="{y}" width="10" height="10" fill="{color}"/>')
            self.parts.append(f'<text x="{self.x0 + 22}" y="{y + 9}">{escape(name)}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def scatter_svg(title: str, series: list[tuple[str, np.ndarray, np.ndarray]], unit: str = "") -> str:
    """True values on x, predictions on y; one colour per (name, y, y_hat) series."""
    values = np.concatenate([np.concatenate([y, p]) for _, y, p in series]) if series else np.zeros(1)
    lim = _padded(float(values.min()), float(values.max()))
    suffix = f" ({unit})" if unit else ""
    canvas = _Canvas(title, "true" + suffix, "predicted" + suffix, lim, lim)
    canvas.parts.append(
        f'<line x1="{_fmt(canvas.px(lim[0]))}" y1="{_fmt(canvas.py(lim[0]))}" '
        f'x2="{_fmt(canvas.px(lim[1]))}" y2="{_fmt(canvas.py(lim[1]))}" stroke="#999" stroke-dasharray="4 3"/>'
    )
    for i, (_, y, p) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        for a, b in zip(y, p):
            canvas.parts.append(
                f'<circle cx="{_fmt(canvas.px(a))}" cy="{_fmt(canvas.py(b))}" r="2.2" '
                f'fill="{color}" fill-opacity="0.6"/>'
            )
    canvas.legend([name for name, _, _ in series])
    return canvas.render()


def histogram_bins(series: list[tuple[str, np.ndarray]], bins: int = 20) -> np.ndarray:
    values = np.concatenate([e for _, e in series]) if series else np.zeros(1)
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, bins + 1)


def histogram_svg(title: str, series: list[tuple[str, np.ndarray]], edges: np.ndarray, unit: str = "") -> str:
    """Step histograms of residuals on shared bin edges, one colour per series."""
    counts = [np.histogram(e, bins=edges)[0] for _, e in series]
    top = max([int(c.max()) for c in counts] + [1])
    suffix = f" ({unit})" if unit else ""
    canvas = _Canvas(title, "residual y - y_hat" + suffix, "count", (float(edges[0]), float(edges[-1])), (0.0, top * 1.1))
    for i, c in enumerate(counts):
        color = PALETTE[i % len(PALETTE)]
        points = [(canvas.px(edges[0]), canvas.py(0))]
        for j, n in enumerate(c):
            points.append((canvas.px(edges[j]), canvas.py(n)))
            points.append((canvas.px(edges[j + 1]), canvas.py(n)))
        points.append((canvas.px(edges[-1]), canvas.py(0)))
        path = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        canvas.parts.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
    canvas.legend([name for name, _ in series])
    return canvas.render()
