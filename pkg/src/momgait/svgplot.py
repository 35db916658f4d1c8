"""Minimal SVG emission: scalar-field contours, arrow fields, gait loops.

Everything is direct markup generation; contours come from marching squares
on the sampled grid and gait curves are drawn as polyline segments whose
stroke width scales inversely with the local shape speed, so slow portions
of a cycle read as thick strokes.
"""

from __future__ import annotations

import numpy as np

_SEGMENT_TABLE = {
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)],
    5: [(3, 2), (1, 0)], 6: [(0, 2)], 7: [(3, 2)],
    8: [(2, 3)], 9: [(2, 0)], 10: [(0, 3), (2, 1)],
    11: [(2, 1)], 12: [(1, 3)], 13: [(1, 0)], 14: [(0, 3)],
}


def _edge_point(edge, i, j, x, y, f, level):
    """Linear interpolation of the level crossing on one cell edge."""
    if edge == 0:
        a, b = (i, j), (i + 1, j)
    elif edge == 1:
        a, b = (i + 1, j), (i + 1, j + 1)
    elif edge == 2:
        a, b = (i + 1, j + 1), (i, j + 1)
    else:
        a, b = (i, j + 1), (i, j)
    fa, fb = f[a], f[b]
    t = 0.5 if fb == fa else (level - fa) / (fb - fa)
    ax, ay = x[a[0]], y[a[1]]
    bx, by = x[b[0]], y[b[1]]
    return ax + t * (bx - ax), ay + t * (by - ay)


def contour_segments(x, y, field, level):
    """Marching-squares line segments of field == level.

    field is indexed [i, j] with i along x; returns a list of
    ((x0, y0), (x1, y1)) pairs in data coordinates.
    """
    f = np.asarray(field, dtype=float)
    segs = []
    for i in range(f.shape[0] - 1):
        for j in range(f.shape[1] - 1):
            idx = 0
            if f[i, j] > level:
                idx |= 1
            if f[i + 1, j] > level:
                idx |= 2
            if f[i + 1, j + 1] > level:
                idx |= 4
            if f[i, j + 1] > level:
                idx |= 8
            for ea, eb in _SEGMENT_TABLE.get(idx, ()):
                segs.append(
                    (
                        _edge_point(ea, i, j, x, y, f, level),
                        _edge_point(eb, i, j, x, y, f, level),
                    )
                )
    return segs


class SvgCanvas:
    """Fixed-viewport SVG builder mapping a data window to pixels."""

    def __init__(self, xlim, ylim, width=640, height=640, margin=50):
        self.xlim = xlim
        self.ylim = ylim
        self.width = width
        self.height = height
        self.margin = margin
        self.parts = []

    def _map(self, px, py):
        m, w, h = self.margin, self.width, self.height
        sx = (w - 2 * m) / (self.xlim[1] - self.xlim[0])
        sy = (h - 2 * m) / (self.ylim[1] - self.ylim[0])
        return m + (px - self.xlim[0]) * sx, h - m - (py - self.ylim[0]) * sy

    def line(self, p0, p1, color="#444444", width=1.0, opacity=1.0):
        (x0, y0), (x1, y1) = self._map(*p0), self._map(*p1)
        self.parts.append(
            f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
            f'stroke="{color}" stroke-width="{width:.2f}" '
            f'stroke-opacity="{opacity:.3f}" stroke-linecap="round"/>'
        )

    def polyline(self, pts, color="#000000", width=1.5, close=False):
        mapped = " ".join(f"{x:.2f},{y:.2f}" for x, y in (self._map(*p) for p in pts))
        tag = "polygon" if close else "polyline"
        self.parts.append(
            f'<{tag} points="{mapped}" fill="none" stroke="{color}" '
            f'stroke-width="{width:.2f}" stroke-linejoin="round"/>'
        )

    def circle(self, center, r_px, color="#000000", fill="none"):
        x, y = self._map(*center)
        self.parts.append(
            f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r_px:.2f}" '
            f'stroke="{color}" fill="{fill}"/>'
        )

    def text(self, pos, s, size=13, color="#000000", anchor="middle"):
        x, y = self._map(*pos)
        self.parts.append(
            f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" fill="{color}" '
            f'text-anchor="{anchor}" font-family="sans-serif">{s}</text>'
        )

    def arrow(self, base, vec, scale=1.0, color="#336699", width=1.2):
        """Line glyph with a small triangular head, in data coordinates."""
        tip = (base[0] + scale * vec[0], base[1] + scale * vec[1])
        self.line(base, tip, color=color, width=width)
        bx, by = self._map(*base)
        tx, ty = self._map(*tip)
        dx, dy = tx - bx, ty - by
        n = np.hypot(dx, dy)
        if n < 1e-9:
            return
        ux, uy = dx / n, dy / n
        h = min(6.0, 0.4 * n)
        left = (tx - h * ux + 0.5 * h * uy, ty - h * uy - 0.5 * h * ux)
        right = (tx - h * ux - 0.5 * h * uy, ty - h * uy + 0.5 * h * ux)
        self.parts.append(
            f'<polygon points="{tx:.2f},{ty:.2f} {left[0]:.2f},{left[1]:.2f} '
            f'{right[0]:.2f},{right[1]:.2f}" fill="{color}"/>'
        )

    def frame(self):
        m, w, h = self.margin, self.width, self.height
        self.parts.append(
            f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" '
            f'fill="none" stroke="#000000"/>'
        )

    def render(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">'
        )
        return "\n".join([head, *self.parts, "</svg>"])


_DIVERGING = [
    (0.0, (33, 102, 172)),
    (0.5, (247, 247, 247)),
    (1.0, (178, 24, 43)),
]


def _color(value, vmin, vmax):
    t = 0.5 if vmax == vmin else (value - vmin) / (vmax - vmin)
    t = min(1.0, max(0.0, t))
    for (t0, c0), (t1, c1) in zip(_DIVERGING[:-1], _DIVERGING[1:]):
        if t <= t1:
            u = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            rgb = tuple(int(round(a + u * (b - a))) for a, b in zip(c0, c1))
            return f"#{rgb[0]:02x}{rgb[1]:02x}{rgb[2]:02x}"
    return "#b2182b"


def field_plot(x, y, field, n_levels=15, title=None, canvas=None):
    """Contour plot of a scalar field over the shape grid."""
    f = np.asarray(field, dtype=float)
    if canvas is None:
        canvas = SvgCanvas((x[0], x[-1]), (y[0], y[-1]))
    lim = max(abs(f.min()), abs(f.max()), 1e-300)
    levels = np.linspace(-lim, lim, n_levels + 2)[1:-1]
    for level in levels:
        color = _color(level, -lim, lim)
        for p0, p1 in contour_segments(x, y, f, level):
            canvas.line(p0, p1, color=color, width=1.2)
    canvas.frame()
    if title:
        canvas.text(((x[0] + x[-1]) / 2, y[-1] + 0.06 * (y[-1] - y[0])), title)
    return canvas


def arrow_field(x, y, vx, vy, stride=4, canvas=None, color="#336699"):
    """Sparse arrow glyphs for a grid-sampled planar vector field."""
    if canvas is None:
        canvas = SvgCanvas((x[0], x[-1]), (y[0], y[-1]))
    mags = np.hypot(vx, vy)
    vmax = mags.max() if mags.size else 1.0
    if vmax == 0.0:
        vmax = 1.0
    cell = (x[-1] - x[0]) / max(1, len(x) - 1)
    scale = 0.8 * stride * cell / vmax
    for i in range(0, len(x), stride):
        for j in range(0, len(y), stride):
            canvas.arrow((x[i], y[j]), (vx[i, j], vy[i, j]), scale=scale, color=color)
    canvas.frame()
    return canvas


def gait_plot(canvas, shapes, speeds, color="#000000", max_width=6.0, min_width=0.8):
    """Draw a gait loop with stroke width inversely proportional to speed.

    shapes is (n, 2) sampled around the cycle; speeds is the matching shape
    speed, so slow sections of the cycle appear thick.
    """
    s = np.asarray(speeds, dtype=float)
    floor = max(s.max() * 1e-3, 1e-12)
    inv = 1.0 / np.maximum(s, floor)
    widths = min_width + (max_width - min_width) * (inv / inv.max())
    n = len(shapes)
    for k in range(n):
        a, b = shapes[k], shapes[(k + 1) % n]
        canvas.line(tuple(a), tuple(b), color=color, width=0.5 * (widths[k] + widths[(k + 1) % n]))
    return canvas
