"""Hand-emitted SVG line charts; no plotting dependency, deterministic bytes.

Each figure is a vertical stack of panels sharing a pixel layout.  A panel is
a titled set of series; a series is (label, xs, ys, dashed).  Dashed series
are reference/true curves.  Long series are decimated with a fixed stride so
the output stays compact and byte-stable across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

_PALETTE = ("#1f6fb4", "#d95f02", "#2a9d5c", "#b02ab9", "#a63d40", "#666666")

_MAX_POINTS = 2000

PANEL_W = 640
PANEL_H = 170
MARGIN_L = 62
MARGIN_R = 16
MARGIN_T = 26
MARGIN_B = 34


@dataclass
class Series:
    label: str
    xs: list
    ys: list
    dashed: bool = False


@dataclass
class Panel:
    title: str
    series: list = field(default_factory=list)


def _finite(values):
    return [v for v in values if math.isfinite(v)]


def _nice_ticks(lo: float, hi: float, target: int = 5):
    """Round tick positions covering [lo, hi] on a 1-2-5 ladder."""
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if span / step <= target + 1:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(v) < 1e-12 * span else v)
        v += step
    return ticks


def _fmt_num(v: float) -> str:
    s = f"{v:.6g}"
    return "0" if s == "-0" else s


def _decimate(xs, ys):
    n = len(xs)
    if n <= _MAX_POINTS:
        return xs, ys
    stride = (n - 1) // (_MAX_POINTS - 1) + 1
    idx = list(range(0, n, stride))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return [xs[i] for i in idx], [ys[i] for i in idx]


def render(panels, x_label: str = "t [s]") -> str:
    """SVG document string for a stack of panels."""
    height = len(panels) * PANEL_H
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W}" '
        f'height="{height}" viewBox="0 0 {PANEL_W} {height}">',
        f'<rect width="{PANEL_W}" height="{height}" fill="#ffffff"/>',
    ]
    for i, panel in enumerate(panels):
        out.append(_render_panel(panel, i * PANEL_H, x_label))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _render_panel(panel: Panel, y0: float, x_label: str) -> str:
    px0, px1 = MARGIN_L, PANEL_W - MARGIN_R
    py0, py1 = y0 + MARGIN_T, y0 + PANEL_H - MARGIN_B
    xs_all, ys_all = [], []
    for s in panel.series:
        xs_all += _finite(list(s.xs))
        ys_all += _finite(list(s.ys))
    if xs_all:
        x_lo, x_hi = min(xs_all), max(xs_all)
        y_lo, y_hi = min(ys_all), max(ys_all)
    else:
        x_lo, x_hi, y_lo, y_hi = 0.0, 1.0, 0.0, 1.0
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    pad = 0.05 * (y_hi - y_lo) or max(0.5, abs(y_hi) * 0.1, 0.5)
    y_lo -= pad
    y_hi += pad

    def X(v):
        return px0 + (v - x_lo) / (x_hi - x_lo) * (px1 - px0)

    def Y(v):
        return py1 - (v - y_lo) / (y_hi - y_lo) * (py1 - py0)

    parts = [
        f'<text x="{px0}" y="{y0 + 16}" font-family="sans-serif" '
        f'font-size="12" fill="#000000">{panel.title}</text>',
        f'<rect x="{px0}" y="{py0}" width="{px1 - px0}" height="{py1 - py0}" '
        'fill="none" stroke="#444444" stroke-width="1"/>',
    ]
    for tx in _nice_ticks(x_lo, x_hi):
        x = X(tx)
        parts.append(f'<line x1="{x:.2f}" y1="{py1}" x2="{x:.2f}" '
                     f'y2="{py1 + 4}" stroke="#444444" stroke-width="1"/>')
        parts.append(f'<text x="{x:.2f}" y="{py1 + 16}" font-family="sans-serif" '
                     f'font-size="10" fill="#333333" text-anchor="middle">'
                     f'{_fmt_num(tx)}</text>')
    for ty in _nice_ticks(y_lo, y_hi):
        y = Y(ty)
        parts.append(f'<line x1="{px0 - 4}" y1="{y:.2f}" x2="{px0}" '
                     f'y2="{y:.2f}" stroke="#444444" stroke-width="1"/>')
        parts.append(f'<text x="{px0 - 7}" y="{y + 3:.2f}" font-family="sans-serif" '
                     f'font-size="10" fill="#333333" text-anchor="end">'
                     f'{_fmt_num(ty)}</text>')
    parts.append(f'<text x="{(px0 + px1) / 2:.2f}" y="{py1 + 29}" '
                 'font-family="sans-serif" font-size="11" fill="#333333" '
                 f'text-anchor="middle">{x_label}</text>')

    legend_x = px1 - 8
    for i, s in enumerate(panel.series):
        color = _PALETTE[i % len(_PALETTE)]
        xs, ys = _decimate(list(s.xs), list(s.ys))
        pts = " ".join(
            f"{X(x):.2f},{Y(y):.2f}"
            for x, y in zip(xs, ys)
            if math.isfinite(x) and math.isfinite(y)
        )
        dash = ' stroke-dasharray="6,4"' if s.dashed else ""
        if pts.count(" ") >= 1:  # need at least two points for a polyline
            parts.append(f'<polyline points="{pts}" fill="none" '
                         f'stroke="{color}" stroke-width="1.3"{dash}/>')
        parts.append(f'<text x="{legend_x}" y="{py0 + 12 + 12 * i}" '
                     f'font-family="sans-serif" font-size="10" fill="{color}" '
                     f'text-anchor="end">{s.label}'
                     f'{" (dashed)" if s.dashed else ""}</text>')
    return "\n".join(parts)


def write(path: str, panels, x_label: str = "t [s]") -> None:
    with open(path, "w") as f:
        f.write(render(panels, x_label))


def standard_plots(log, theta_star, out_dir: str, prefix: str) -> list:
    """Emit the standard figure set for one run; returns the written paths.

    Figures: states vs. their references, controls vs. desired controls,
    the safety chain (psi0, psi1, psi), estimate components vs. the true
    parameter, and the error bound vs. the actual estimation error.
    """
    import os

    t = log.t
    paths = []

    ref_map = dict(zip(log.ref_names,
                       zip(*log.refs) if log.refs else [[]] * len(log.ref_names)))
    state_panels = []
    for j, name in enumerate(log.state_names):
        series = [Series(name, t, [row[j] for row in log.x])]
        rname = f"{name}_d"
        if rname in ref_map:
            series.append(Series(rname, t, list(ref_map[rname]), dashed=True))
        state_panels.append(Panel(name, series))
    if log.plant_name == "pendulum":
        # three-panel layout: position, velocity and the applied torque
        u_series = [Series("u", t, [row[0] for row in log.u]),
                    Series("u_d", t, [row[0] for row in log.u_d], dashed=True)]
        state_panels.append(Panel("u", u_series))
    path = os.path.join(out_dir, f"{prefix}_states.svg")
    write(path, state_panels)
    paths.append(path)

    if log.plant_name != "pendulum":
        ctrl_panels = []
        for j, name in enumerate(log.control_names):
            ctrl_panels.append(Panel(name, [
                Series(name, t, [row[j] for row in log.u]),
                Series(f"ud_{name}", t, [row[j] for row in log.u_d], dashed=True),
            ]))
        path = os.path.join(out_dir, f"{prefix}_controls.svg")
        write(path, ctrl_panels)
        paths.append(path)

    path = os.path.join(out_dir, f"{prefix}_safety.svg")
    write(path, [
        Panel("psi0", [Series("psi0", t, log.psi0)]),
        Panel("psi1", [Series("psi1", t, log.psi1)]),
        Panel("psi", [Series("psi", t, log.psi)]),
    ])
    paths.append(path)

    est_series = []
    for j in range(log.p):
        est_series.append(Series(f"theta_{j}", t,
                                 [row[j] for row in log.theta_t]))
    for j in range(log.p):
        est_series.append(Series(f"theta*_{j}", t,
                                 [float(theta_star[j])] * len(t), dashed=True))
    path = os.path.join(out_dir, f"{prefix}_estimates.svg")
    write(path, [Panel("parameter estimate vs true value", est_series)])
    paths.append(path)

    path = os.path.join(out_dir, f"{prefix}_bound.svg")
    write(path, [Panel("error bound nu and actual error", [
        Series("nu", t, log.nu_t),
        Series("|theta_err|", t, log.theta_err, dashed=True),
    ])])
    paths.append(path)
    return paths
