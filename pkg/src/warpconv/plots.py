"""Static SVG plots: profile curves, convergence curves, metric balls,
geodesic overlays.

Everything is emitted as a single self-contained SVG string with inline
styles and no scripts, so the files open anywhere and diff cleanly; all
coordinates are formatted at 6 significant digits, which keeps repeated
runs byte-identical.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import InvalidDescriptor
from .families import SequenceFamily
from .geodesy import GridGraph, GridSpec
from .ret import ball_boundary

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
           "#8c564b", "#7f7f7f")

Series = Tuple[str, Sequence[float], Sequence[float]]


def _f(x: float) -> str:
    return f"{float(x):.6g}"


def _nice_step(span: float, target: int) -> float:
    raw = span / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            return mult * mag
    return 10.0 * mag


def _linear_ticks(lo: float, hi: float, target: int = 5) -> List[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = _nice_step(hi - lo, target)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> List[float]:
    ticks = []
    for k in range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1):
        t = 10.0 ** k
        if lo / 1.001 <= t <= hi * 1.001:
            ticks.append(t)
    return ticks or [lo, hi]


class _Frame:
    """Maps data coordinates into a margined pixel viewport."""

    def __init__(self, width, height, x_range, y_range, logy=False):
        self.width, self.height = width, height
        self.left, self.right, self.top, self.bottom = 64.0, 16.0, 34.0, 46.0
        self.x0, self.x1 = x_range
        self.logy = logy
        y0, y1 = y_range
        if logy:
            y0, y1 = math.log10(y0), math.log10(y1)
        self.y0, self.y1 = y0, y1
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0

    def px(self, x: float) -> float:
        span = self.width - self.left - self.right
        return self.left + (x - self.x0) / (self.x1 - self.x0) * span

    def py(self, y: float) -> float:
        if self.logy:
            y = math.log10(max(y, 1e-300))
        span = self.height - self.top - self.bottom
        return self.height - self.bottom - (y - self.y0) / (self.y1 - self.y0) * span


def _polyline(frame: _Frame, xs, ys, color: str, width=1.6, dash="") -> str:
    pts = " ".join(f"{_f(frame.px(x))},{_f(frame.py(y))}"
                   for x, y in zip(xs, ys))
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return (f'<polyline fill="none" stroke="{color}" '
            f'stroke-width="{_f(width)}"{dash_attr} points="{pts}"/>')


def _text(x, y, s, size=12, anchor="middle", color="#222", rotate=None):
    transform = f' transform="rotate(-90 {_f(x)} {_f(y)})"' if rotate else ""
    return (f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" '
            f'font-family="Helvetica, Arial, sans-serif" fill="{color}" '
            f'text-anchor="{anchor}"{transform}>{s}</text>')


def _axes(frame: _Frame, title, xlabel, ylabel, x_ticks, y_ticks,
          y_tick_labels=None) -> List[str]:
    parts = []
    bx0, bx1 = frame.left, frame.width - frame.right
    by0, by1 = frame.top, frame.height - frame.bottom
    parts.append(f'<rect x="{_f(bx0)}" y="{_f(by0)}" width="{_f(bx1 - bx0)}" '
                 f'height="{_f(by1 - by0)}" fill="none" stroke="#888" '
                 f'stroke-width="1"/>')
    for t in x_ticks:
        x = frame.px(t)
        parts.append(f'<line x1="{_f(x)}" y1="{_f(by1)}" x2="{_f(x)}" '
                     f'y2="{_f(by1 + 5)}" stroke="#888" stroke-width="1"/>')
        parts.append(_text(x, by1 + 18, _f(t), size=11))
    labels = y_tick_labels or [_f(t) for t in y_ticks]
    for t, lab in zip(y_ticks, labels):
        y = frame.py(t)
        parts.append(f'<line x1="{_f(bx0 - 5)}" y1="{_f(y)}" x2="{_f(bx0)}" '
                     f'y2="{_f(y)}" stroke="#888" stroke-width="1"/>')
        parts.append(_text(bx0 - 8, y + 4, lab, size=11, anchor="end"))
    parts.append(_text((bx0 + bx1) / 2, frame.height - 10, xlabel, size=12))
    parts.append(_text(16, (by0 + by1) / 2, ylabel, size=12, rotate=True))
    parts.append(_text((bx0 + bx1) / 2, 20, title, size=14))
    return parts


def _legend(frame: _Frame, labels_colors) -> List[str]:
    parts = []
    x = frame.width - frame.right - 10
    y = frame.top + 14
    for label, color in labels_colors:
        parts.append(f'<line x1="{_f(x - 30)}" y1="{_f(y - 4)}" '
                     f'x2="{_f(x - 12)}" y2="{_f(y - 4)}" stroke="{color}" '
                     f'stroke-width="2.5"/>')
        parts.append(_text(x - 34, y, label, size=11, anchor="end"))
        y += 16
    return parts


def _document(width, height, body: List[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">'
            f'<rect width="{width}" height="{height}" fill="#ffffff"/>')
    return head + "".join(body) + "</svg>\n"


def line_chart(series: Sequence[Series], title: str, xlabel: str,
               ylabel: str, logy: bool = False, width: int = 640,
               height: int = 420, legend: bool = True) -> str:
    """Generic multi-series line chart."""
    if not series:
        raise InvalidDescriptor("line chart needs at least one series")
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    if logy:
        ys_pos = [y for y in ys_all if y > 0]
        if not ys_pos:
            raise InvalidDescriptor("log-scale chart needs positive values")
        y_lo, y_hi = min(ys_pos) / 1.5, max(ys_pos) * 1.5
    else:
        span = (max(ys_all) - min(ys_all)) or 1.0
        y_lo, y_hi = min(ys_all) - 0.06 * span, max(ys_all) + 0.06 * span
    frame = _Frame(width, height, (min(xs_all), max(xs_all)), (y_lo, y_hi),
                   logy=logy)
    if logy:
        ticks = _log_ticks(y_lo, y_hi)
        labels = [f"1e{round(math.log10(t))}" for t in ticks]
    else:
        ticks = _linear_ticks(y_lo, y_hi)
        labels = None
    body = _axes(frame, title, xlabel, ylabel,
                 _linear_ticks(min(xs_all), max(xs_all)), ticks, labels)
    entries = []
    for i, (label, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = [(x, y) for x, y in zip(xs, ys) if not logy or y > 0]
        body.append(_polyline(frame, [p[0] for p in pts], [p[1] for p in pts],
                              color))
        entries.append((label, color))
    if legend:
        body.extend(_legend(frame, entries))
    return _document(width, height, body)


# ---------------------------------------------------------------------------
# the four plot kinds
# ---------------------------------------------------------------------------


def profile_curves_svg(family: SequenceFamily, j_list: Sequence[int],
                       samples: int = 600) -> str:
    """Warp profiles f_j over the base interval for several stages."""
    base = family.base
    rs = np.linspace(base.r_min, base.r_max, samples)
    series = []
    for j in j_list:
        prof = family.profile(j)
        series.append((f"j={j}", rs.tolist(),
                       [float(prof(r)) for r in rs]))
    return line_chart(series, f"warp profiles: {family.describe()}",
                      "base coordinate", "f(r)")


def convergence_svg(report) -> str:
    """Uniform discrepancy and grid error per stage, log scale."""
    js = [row.j for row in report.rows]
    series = [
        ("eps raw", js, [row.eps_raw for row in report.rows]),
        ("eps corrected", js, [row.eps_corrected for row in report.rows]),
        ("grid error", js, [row.grid_error for row in report.rows]),
    ]
    return line_chart(series, f"convergence: {report.family}", "stage j",
                      "uniform discrepancy", logy=True)


def ret_balls_svg(stretch: float, radii: Sequence[float],
                  n_angles: int = 181, width: int = 520,
                  height: int = 520) -> str:
    """Metric balls of the stretched mixed metric around the origin."""
    if not radii:
        raise InvalidDescriptor("need at least one radius")
    loops = []
    for radius in radii:
        quad = ball_boundary(stretch, float(radius), n_angles)
        xs, ys = quad[:, 0], quad[:, 1]
        loop_x = np.concatenate([xs, -xs[::-1], -xs, xs[::-1]])
        loop_y = np.concatenate([ys, ys[::-1], -ys, -ys[::-1]])
        loops.append((float(radius), loop_x, loop_y))
    extent = max(float(np.max(np.abs(lx))) for _, lx, _ in loops)
    extent = max(extent, max(float(np.max(np.abs(ly)))
                             for _, _, ly in loops)) * 1.1
    frame = _Frame(width, height, (-extent, extent), (-extent, extent))
    ticks = _linear_ticks(-extent, extent, 5)
    body = _axes(frame, f"metric balls, stretch R={stretch:g}",
                 "length offset", "angular offset", ticks, ticks)
    entries = []
    for i, (radius, lx, ly) in enumerate(loops):
        color = PALETTE[i % len(PALETTE)]
        body.append(_polyline(frame, lx.tolist(), ly.tolist(), color))
        entries.append((f"radius {radius:g}", color))
    body.extend(_legend(frame, entries))
    return _document(width, height, body)


def _unwrapped_path(graph: GridGraph, src_idx: int, dst_idx: int):
    """Grid geodesic as an unwrapped (r, theta) polyline."""
    _, curve = graph.path_between(src_idx, dst_idx)
    pts = curve.points
    circ = graph.space.fiber.circumference
    r_span = graph.space.base.r_max - graph.space.base.r_min
    wraps_t = curve.theta_wraps or [0] * (len(pts) - 1)
    wraps_r = curve.r_wraps or [0] * (len(pts) - 1)
    rs = [pts[0].r]
    ts = [pts[0].theta]
    for i in range(1, len(pts)):
        rs.append(rs[-1] + (pts[i].r - pts[i - 1].r)
                  + r_span * wraps_r[i - 1])
        ts.append(ts[-1] + (pts[i].theta - pts[i - 1].theta)
                  + circ * wraps_t[i - 1])
    return rs, ts


def geodesic_overlay_svg(family: SequenceFamily, j: int,
                         pairs: Optional[Sequence] = None,
                         grid: Optional[GridSpec] = None) -> str:
    """Shortest grid paths of stage j drawn in the (r, theta) rectangle.

    Fiber wraps are unwrapped so each path is a continuous curve; dashed
    horizontal lines mark the fiber seam copies it crossed.
    """
    space = family.space(j)
    graph = GridGraph(space, grid or GridSpec(128, 128, 2))
    use_pairs = list(pairs) if pairs is not None else \
        list(family.special_pairs(j))
    if not use_pairs:
        raise InvalidDescriptor("no pairs to draw")
    series = []
    for p, q in use_pairs:
        sp, _, _ = graph.snap(p)
        dq, _, _ = graph.snap(q)
        rs, ts = _unwrapped_path(graph, sp, dq)
        series.append((pair_tag(p, q), rs, ts))

    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    pad = 0.3
    frame = _Frame(640, 460, (min(xs_all) - pad, max(xs_all) + pad),
                   (min(ys_all) - pad, max(ys_all) + pad))
    body = _axes(frame, f"grid geodesics: {family.describe()}, j={j}",
                 "base coordinate r", "fiber coordinate (unwrapped)",
                 _linear_ticks(min(xs_all) - pad, max(xs_all) + pad),
                 _linear_ticks(min(ys_all) - pad, max(ys_all) + pad))
    circ = space.fiber.circumference
    k_lo = math.floor((min(ys_all) - pad) / circ)
    k_hi = math.ceil((max(ys_all) + pad) / circ)
    for k in range(k_lo, k_hi + 1):
        y = k * circ
        if min(ys_all) - pad <= y <= max(ys_all) + pad:
            body.append(_polyline(frame, [min(xs_all) - pad,
                                          max(xs_all) + pad], [y, y],
                                  "#bbbbbb", width=0.8, dash="4 3"))
    entries = []
    for i, (label, rs, ts) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        body.append(_polyline(frame, rs, ts, color))
        entries.append((label, color))
    body.extend(_legend(frame, entries))
    return _document(640, 460, body)


def pair_tag(p, q) -> str:
    return (f"({p.r:.2g},{p.theta:.2g})-({q.r:.2g},{q.theta:.2g})")
