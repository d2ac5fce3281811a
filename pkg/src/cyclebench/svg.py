"""Minimal deterministic SVG chart emission.

Charts are built by pure string assembly so identical inputs always
produce byte-identical files; no system fonts, clocks, or library
version strings leak into the output.
"""

from __future__ import annotations

from dataclasses import dataclass

PALETTE = (
    "#1f77b4",
    "#d62728",
    "#7f7f7f",
    "#17becf",
    "#2ca02c",
    "#e377c2",
    "#bcbd22",
    "#9467bd",
    "#8c564b",
    "#ff7f0e",
)

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 36, 48


def _num(x: float) -> str:
    """Fixed 2-decimal pixel coordinates keep output stable and compact."""
    return f"{x:.2f}"


def _tick_label(x: float) -> str:
    return f"{x:.4g}"


@dataclass
class Series:
    xs: list
    ys: list
    label: str
    color: str = PALETTE[0]
    dashed: bool = False
    y_err: list | None = None
    markers: bool = True


@dataclass
class Axes:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def px(self, x: float) -> float:
        span = self.x_max - self.x_min
        frac = (x - self.x_min) / span if span else 0.5
        return MARGIN_L + frac * (WIDTH - MARGIN_L - MARGIN_R)

    def py(self, y: float) -> float:
        span = self.y_max - self.y_min
        frac = (y - self.y_min) / span if span else 0.5
        return HEIGHT - MARGIN_B - frac * (HEIGHT - MARGIN_T - MARGIN_B)


def padded_range(values, pad_frac: float = 0.10) -> tuple[float, float]:
    """Data range widened by pad_frac of its span on each side."""
    lo, hi = min(values), max(values)
    span = hi - lo
    if span == 0:
        pad = max(abs(hi), 1.0) * pad_frac
    else:
        pad = span * pad_frac
    return lo - pad, hi + pad


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _axes_svg(ax: Axes, x_label: str, y_label: str, title: str) -> list[str]:
    x0, y0 = MARGIN_L, HEIGHT - MARGIN_B
    x1, y1 = WIDTH - MARGIN_R, MARGIN_T
    parts = [
        f'<text x="{_num(WIDTH / 2)}" y="20" text-anchor="middle" '
        f'font-size="14" font-family="sans-serif">{title}</text>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="#000" stroke-width="1"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="#000" stroke-width="1"/>',
        f'<text x="{_num((x0 + x1) / 2)}" y="{HEIGHT - 10}" text-anchor="middle" '
        f'font-size="12" font-family="sans-serif">{x_label}</text>',
        f'<text x="16" y="{_num((y0 + y1) / 2)}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif" transform="rotate(-90 16 {_num((y0 + y1) / 2)})">'
        f"{y_label}</text>",
    ]
    for tx in _ticks(ax.x_min, ax.x_max):
        px = ax.px(tx)
        parts.append(
            f'<line x1="{_num(px)}" y1="{y0}" x2="{_num(px)}" y2="{y0 + 4}" '
            'stroke="#000" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_num(px)}" y="{y0 + 18}" text-anchor="middle" font-size="11" '
            f'font-family="sans-serif">{_tick_label(tx)}</text>'
        )
    for ty in _ticks(ax.y_min, ax.y_max):
        py = ax.py(ty)
        parts.append(
            f'<line x1="{x0 - 4}" y1="{_num(py)}" x2="{x0}" y2="{_num(py)}" '
            'stroke="#000" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x0 - 8}" y="{_num(py + 4)}" text-anchor="end" font-size="11" '
            f'font-family="sans-serif">{_tick_label(ty)}</text>'
        )
    return parts


def _legend_svg(series: list[Series]) -> list[str]:
    parts = []
    for i, s in enumerate(series):
        y = MARGIN_T + 8 + 16 * i
        x = WIDTH - MARGIN_R - 150
        dash = ' stroke-dasharray="6,4"' if s.dashed else ""
        parts.append(
            f'<line x1="{x}" y1="{y}" x2="{x + 24}" y2="{y}" stroke="{s.color}" '
            f'stroke-width="2"{dash}/>'
        )
        parts.append(
            f'<text x="{x + 30}" y="{y + 4}" font-size="11" '
            f'font-family="sans-serif">{s.label}</text>'
        )
    return parts


def line_chart(
    series: list[Series],
    x_label: str,
    y_label: str,
    title: str,
    x_from_zero: bool = True,
    y_pad_frac: float = 0.10,
) -> str:
    """Render polyline series onto shared axes.

    The y range is the data range padded by ``y_pad_frac`` on each side;
    the x axis starts at zero unless told otherwise.
    """
    if not series or any(len(s.xs) == 0 for s in series):
        raise ValueError("cannot chart an empty series")
    all_x = [x for s in series for x in s.xs]
    all_y = [y for s in series for y in s.ys]
    y_min, y_max = padded_range(all_y, y_pad_frac)
    x_min = 0.0 if x_from_zero else min(all_x)
    x_max = max(all_x)
    if x_max == x_min:
        x_max = x_min + 1.0
    ax = Axes(x_min, x_max, y_min, y_max)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
    ]
    parts += _axes_svg(ax, x_label, y_label, title)
    for s in series:
        pts = " ".join(f"{_num(ax.px(x))},{_num(ax.py(y))}" for x, y in zip(s.xs, s.ys))
        dash = ' stroke-dasharray="6,4"' if s.dashed else ""
        parts.append(
            f'<polyline fill="none" stroke="{s.color}" stroke-width="1.5"{dash} '
            f'points="{pts}"/>'
        )
        if s.y_err is not None:
            for x, y, e in zip(s.xs, s.ys, s.y_err):
                if e > 0:
                    parts.append(
                        f'<line x1="{_num(ax.px(x))}" y1="{_num(ax.py(y - e))}" '
                        f'x2="{_num(ax.px(x))}" y2="{_num(ax.py(y + e))}" '
                        f'stroke="{s.color}" stroke-width="1"/>'
                    )
        if s.markers:
            for x, y in zip(s.xs, s.ys):
                parts.append(
                    f'<circle cx="{_num(ax.px(x))}" cy="{_num(ax.py(y))}" r="2.5" '
                    f'fill="{s.color}"/>'
                )
    parts += _legend_svg(series)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def bar_chart(labels: list[str], groups: dict[str, list[float]], y_label: str, title: str) -> str:
    """Grouped vertical bars; one cluster per label, one bar per group key."""
    if not labels or not groups:
        raise ValueError("cannot chart empty bars")
    values = [v for vs in groups.values() for v in vs]
    y_min, y_max = 0.0, max(values) * 1.10 if max(values) > 0 else 1.0
    ax = Axes(0.0, float(len(labels)), y_min, y_max)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
    ]
    parts += _axes_svg(ax, "", y_label, title)
    n_groups = len(groups)
    slot = (WIDTH - MARGIN_L - MARGIN_R) / len(labels)
    bar_w = slot * 0.7 / n_groups
    y0 = HEIGHT - MARGIN_B
    for gi, (gname, vals) in enumerate(groups.items()):
        color = PALETTE[gi % len(PALETTE)]
        for li, v in enumerate(vals):
            x = MARGIN_L + li * slot + slot * 0.15 + gi * bar_w
            top = ax.py(v)
            parts.append(
                f'<rect x="{_num(x)}" y="{_num(top)}" width="{_num(bar_w)}" '
                f'height="{_num(y0 - top)}" fill="{color}"/>'
            )
    for li, label in enumerate(labels):
        x = MARGIN_L + (li + 0.5) * slot
        parts.append(
            f'<text x="{_num(x)}" y="{y0 + 18}" text-anchor="middle" font-size="11" '
            f'font-family="sans-serif">{label}</text>'
        )
    fake = [
        Series([0], [0], label=g, color=PALETTE[i % len(PALETTE)])
        for i, g in enumerate(groups)
    ]
    parts += _legend_svg(fake)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
