# svg_utils.py
"""Minimal SVG line/marker plots for regression artifacts."""
import math
from xml.sax.saxutils import escape

COLORS = ('#1f77b4', '#d62728', '#2ca02c', '#ff7f0e', '#9467bd', '#8c564b', '#e377c2', '#7f7f7f')


class SvgPlot:
    """Collects polylines and markers in data coordinates, renders on demand."""

    def __init__(self, title='', xlabel='', ylabel='', width=720, height=480, margin=60):
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.width = width
        self.height = height
        self.margin = margin
        self.lines = []    # (xs, ys, color, label, dashed)
        self.markers = []  # (x, y, color, label, shape)
        self.xlim = None
        self.ylim = None

    def polyline(self, xs, ys, color=None, label=None, dashed=False):
        color = color or COLORS[len(self.lines) % len(COLORS)]
        pts = [(float(x), float(y)) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
        if len(pts) >= 2:
            self.lines.append((pts, color, label, dashed))
        return self

    def marker(self, x, y, color='black', label=None, shape='circle'):
        if math.isfinite(x) and math.isfinite(y):
            self.markers.append((float(x), float(y), color, label, shape))
        return self

    def hline(self, y, color='#999999', label=None):
        lo, hi = self._extent()[0]
        return self.polyline([lo, hi], [y, y], color=color, label=label, dashed=True)

    def _extent(self):
        xs = [p[0] for pts, *_ in self.lines for p in pts] + [m[0] for m in self.markers]
        ys = [p[1] for pts, *_ in self.lines for p in pts] + [m[1] for m in self.markers]
        if not xs:
            return (0.0, 1.0), (0.0, 1.0)
        xlim = self.xlim or (min(xs), max(xs))
        ylim = self.ylim or (min(ys), max(ys))
        if xlim[1] - xlim[0] < 1e-12:
            xlim = (xlim[0] - 0.5, xlim[1] + 0.5)
        if ylim[1] - ylim[0] < 1e-12:
            ylim = (ylim[0] - 0.5, ylim[1] + 0.5)
        return xlim, ylim

    def render(self):
        (x0, x1), (y0, y1) = self._extent()
        m, w, h = self.margin, self.width, self.height

        def sx(x):
            return m + (x - x0) / (x1 - x0) * (w - 2 * m)

        def sy(y):
            return h - m - (y - y0) / (y1 - y0) * (h - 2 * m)

        out = [
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" '
            f'viewBox="0 0 {w} {h}">\n',
            f'<rect width="{w}" height="{h}" style="fill:white"/>\n',
            f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" '
            'style="fill:none;stroke:black;stroke-width:1"/>\n',
            f'<text x="{w / 2:.1f}" y="{m / 2:.1f}" text-anchor="middle" '
            f'style="font-size:16px;font-family:arial">{escape(self.title)}</text>\n',
            f'<text x="{w / 2:.1f}" y="{h - m / 4:.1f}" text-anchor="middle" '
            f'style="font-size:14px;font-family:arial">{escape(self.xlabel)}</text>\n',
            f'<text x="{m / 4:.1f}" y="{h / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 {m / 4:.1f} {h / 2:.1f})" '
            f'style="font-size:14px;font-family:arial">{escape(self.ylabel)}</text>\n',
        ]
        for k in range(5):
            xv = x0 + k * (x1 - x0) / 4
            yv = y0 + k * (y1 - y0) / 4
            out.append(f'<text x="{sx(xv):.1f}" y="{h - m + 16:.1f}" text-anchor="middle" '
                       f'style="font-size:11px;font-family:arial">{xv:.4g}</text>\n')
            out.append(f'<text x="{m - 6:.1f}" y="{sy(yv) + 4:.1f}" text-anchor="end" '
                       f'style="font-size:11px;font-family:arial">{yv:.4g}</text>\n')
        out.append(f'<clipPath id="plot"><rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}"/></clipPath>\n')
        for pts, color, label, dashed in self.lines:
            points = ' '.join(f'{sx(x):.2f},{sy(y):.2f}' for x, y in pts)
            dash = ';stroke-dasharray:6,4' if dashed else ''
            title = f'<title>{escape(label)}</title>' if label else ''
            out.append(f'<polyline clip-path="url(#plot)" points="{points}" '
                       f'style="fill:none;stroke:{color};stroke-width:1.5{dash}">{title}</polyline>\n')
        for x, y, color, label, shape in self.markers:
            title = f'<title>{escape(label)}</title>' if label else ''
            if shape == 'square':
                out.append(f'<rect x="{sx(x) - 4:.2f}" y="{sy(y) - 4:.2f}" width="8" height="8" '
                           f'style="fill:{color};stroke:black;stroke-width:1">{title}</rect>\n')
            else:
                out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" '
                           f'style="fill:{color};stroke:black;stroke-width:1">{title}</circle>\n')
        legend = [(color, label) for _, color, label, _ in self.lines if label]
        for i, (color, label) in enumerate(legend):
            ly = m + 14 + 14 * i
            out.append(f'<line x1="{w - m - 150}" y1="{ly}" x2="{w - m - 130}" y2="{ly}" '
                       f'style="stroke:{color};stroke-width:2"/>\n')
            out.append(f'<text x="{w - m - 125}" y="{ly + 4}" '
                       f'style="font-size:11px;font-family:arial">{escape(label)}</text>\n')
        out.append('</svg>\n')
        return ''.join(out)
