"""Minimal SVG 1.1 figures: line plots, trace plots and deviance violins.

Each data series becomes exactly one ``<polyline>`` (line plots) or one
``<polygon>`` (violins), tagged with ``class="series"``.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.stats import gaussian_kde

SVG_NS = "http://www.w3.org/2000/svg"
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=20, top=40, bottom=55)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    return np.linspace(lo, hi, n)


class _Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str, xlim, ylim):
        self.root = ET.Element("svg", {
            "xmlns": SVG_NS, "version": "1.1",
            "width": str(WIDTH), "height": str(HEIGHT),
            "viewBox": f"0 0 {WIDTH} {HEIGHT}",
        })
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x0, self.x1 = self.x0 - 0.5, self.x1 + 0.5
        if self.y1 <= self.y0:
            pad = abs(self.y0) * 0.05 or 0.5
            self.y0, self.y1 = self.y0 - pad, self.y1 + pad
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        ET.SubElement(self.root, "rect", {"width": str(WIDTH), "height": str(HEIGHT), "fill": "white"})
        self.text(WIDTH / 2, 22, title, size=15, anchor="middle")
        self.text(WIDTH / 2, HEIGHT - 12, xlabel, anchor="middle")
        t = self.text(16, MARGIN["top"] + self.ph / 2, ylabel, anchor="middle")
        t.set("transform", f"rotate(-90 16 {_fmt(MARGIN['top'] + self.ph / 2)})")
        ET.SubElement(self.root, "rect", {
            "x": str(MARGIN["left"]), "y": str(MARGIN["top"]),
            "width": str(self.pw), "height": str(self.ph),
            "fill": "none", "stroke": "#333", "class": "frame",
        })

    def sx(self, x):
        return MARGIN["left"] + (np.asarray(x, float) - self.x0) / (self.x1 - self.x0) * self.pw

    def sy(self, y):
        return MARGIN["top"] + self.ph - (np.asarray(y, float) - self.y0) / (self.y1 - self.y0) * self.ph

    def text(self, x, y, s, size=12, anchor="start"):
        el = ET.SubElement(self.root, "text", {
            "x": _fmt(x), "y": _fmt(y), "font-family": "sans-serif",
            "font-size": str(size), "text-anchor": anchor,
        })
        el.text = s
        return el

    def axes(self, xticks=None, xticklabels=None):
        xticks = _ticks(self.x0, self.x1) if xticks is None else xticks
        labels = xticklabels or [f"{v:.4g}" for v in xticks]
        base = MARGIN["top"] + self.ph
        for v, lab in zip(xticks, labels):
            self.text(float(self.sx(v)), base + 16, lab, size=10, anchor="middle")
        for v in _ticks(self.y0, self.y1):
            self.text(MARGIN["left"] - 6, float(self.sy(v)) + 4, f"{v:.4g}", size=10, anchor="end")

    def polyline(self, xs, ys, color, label=None, dash=None):
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(self.sx(xs), self.sy(ys)))
        attrs = {"points": pts, "fill": "none", "stroke": color, "stroke-width": "1.5", "class": "series"}
        if dash:
            attrs["stroke-dasharray"] = dash
        el = ET.SubElement(self.root, "polyline", attrs)
        if label:
            ET.SubElement(el, "title").text = label
        return el

    def polygon(self, xs, ys, color, label=None, cls="series", opacity="0.5"):
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(self.sx(xs), self.sy(ys)))
        el = ET.SubElement(self.root, "polygon", {
            "points": pts, "fill": color, "fill-opacity": opacity, "stroke": color, "class": cls,
        })
        if label:
            ET.SubElement(el, "title").text = label
        return el

    def legend(self, labels: Sequence[str]):
        for i, lab in enumerate(labels):
            y = MARGIN["top"] + 14 + 16 * i
            x = MARGIN["left"] + 10
            ET.SubElement(self.root, "line", {
                "x1": _fmt(x), "x2": _fmt(x + 18), "y1": _fmt(y - 4), "y2": _fmt(y - 4),
                "stroke": PALETTE[i % len(PALETTE)], "stroke-width": "2",
            })
            self.text(x + 24, y, lab, size=11)

    def tostring(self) -> str:
        ET.indent(self.root)
        return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(self.root, encoding="unicode") + "\n"


def line_plot(
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    band: Optional[tuple[Sequence[float], Sequence[float], Sequence[float]]] = None,
    categorical_x: Optional[Sequence[str]] = None,
) -> str:
    """One polyline per entry of ``series`` (label -> (x, y)).

    ``band`` is an optional ``(x, low, high)`` envelope drawn underneath.
    With ``categorical_x`` the x values are positions 0..n-1 labelled by
    the given strings.
    """
    xs_all = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys_all = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    if band is not None:
        ys_all = np.concatenate([ys_all, np.asarray(band[1], float), np.asarray(band[2], float)])
    cv = _Canvas(title, xlabel, ylabel, (xs_all.min(), xs_all.max()), (ys_all.min(), ys_all.max()))
    if categorical_x is not None:
        cv.axes(np.arange(len(categorical_x)), list(categorical_x))
    else:
        cv.axes()
    if band is not None:
        bx = np.asarray(band[0], float)
        cv.polygon(np.concatenate([bx, bx[::-1]]),
                   np.concatenate([np.asarray(band[1], float), np.asarray(band[2], float)[::-1]]),
                   "#999999", cls="band", opacity="0.3")
    for i, (label, (x, y)) in enumerate(series.items()):
        cv.polyline(x, y, PALETTE[i % len(PALETTE)], label)
    if len(series) > 1:
        cv.legend(list(series))
    return cv.tostring()


def trace_plot(iterations, values, param: str) -> str:
    return line_plot({param: (iterations, values)}, title=f"Trace of {param}",
                     xlabel="iteration", ylabel=param)


def silverman_kde(values, n_points: int = 200):
    """Gaussian KDE with Silverman's bandwidth on a grid spanning the data +/- 3 bandwidths."""
    values = np.asarray(values, float)
    if np.ptp(values) == 0:
        y = np.linspace(values[0] - 0.5, values[0] + 0.5, n_points)
        return y, np.exp(-0.5 * ((y - values[0]) / 0.1) ** 2)
    kde = gaussian_kde(values, bw_method="silverman")
    bw = float(np.sqrt(kde.covariance[0, 0]))
    y = np.linspace(values.min() - 3 * bw, values.max() + 3 * bw, n_points)
    return y, kde(y)


def violin_plot(groups: Mapping[str, Sequence[float]], title: str = "Posterior deviance",
                ylabel: str = "deviance") -> str:
    """Mirrored kernel-density polygons, one per group, side by side."""
    dens = {k: silverman_kde(v) for k, v in groups.items()}
    ylo = min(y.min() for y, _ in dens.values())
    yhi = max(y.max() for y, _ in dens.values())
    n = len(groups)
    cv = _Canvas(title, "model", ylabel, (-0.5, n - 0.5), (ylo, yhi))
    cv.axes(np.arange(n), list(groups))
    for i, (label, (y, d)) in enumerate(dens.items()):
        half = 0.4 * d / d.max()
        xs = np.concatenate([i - half, (i + half)[::-1]])
        ys = np.concatenate([y, y[::-1]])
        cv.polygon(xs, ys, PALETTE[i % len(PALETTE)], label)
    cv.root.set("data-bandwidth", "silverman")
    return cv.tostring()
