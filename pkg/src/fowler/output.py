"""Snapshot CSV files and small dependency-free SVG charts.

Everything here is deterministic: fixed number formatting, sorted metadata,
no timestamps.
"""

import io
import math

import numpy as np


def _fmt(v):
    return repr(float(v))


def snapshot_csv(x, u, meta=None) -> str:
    """``# key = value`` header lines followed by ``x,u`` rows."""
    out = io.StringIO()
    for key in sorted(meta or {}):
        out.write(f"# {key} = {meta[key]}\n")
    out.write("x,u\n")
    for xi, ui in zip(np.asarray(x, dtype=float), np.asarray(u, dtype=float)):
        out.write(f"{_fmt(xi)},{_fmt(ui)}\n")
    return out.getvalue()


def read_snapshot_csv(path):
    """Inverse of :func:`snapshot_csv`: returns ``(x, u, meta)``."""
    meta, rows = {}, []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
            elif line and line != "x,u":
                rows.append([float(v) for v in line.split(",")])
    arr = np.array(rows).reshape(-1, 2)
    return arr[:, 0], arr[:, 1], meta


def state_csv(state, meta=None) -> str:
    """Snapshot of a :class:`~fowler.fem_space.StateVector`, rows sorted by x."""
    x = state.space.lagrange_points
    order = np.argsort(x, kind="stable")
    meta = dict(meta or {})
    meta.setdefault("time", _fmt(state.time))
    meta.setdefault("r", state.space.r)
    meta.setdefault("elements", state.space.mesh.n_elements)
    return snapshot_csv(x[order], state.coefficients[order], meta)


# -- SVG -----------------------------------------------------------------------

_W, _H = 640, 400
_PAD = 56


class _Frame:
    def __init__(self, xlim, ylim):
        (self.x0, self.x1), (self.y0, self.y1) = xlim, ylim
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0

    def px(self, x):
        return _PAD + (x - self.x0) / (self.x1 - self.x0) * (_W - 2 * _PAD)

    def py(self, y):
        return _H - _PAD - (y - self.y0) / (self.y1 - self.y0) * (_H - 2 * _PAD)

    def points(self, xs, ys):
        return " ".join(f"{self.px(a):.2f},{self.py(b):.2f}" for a, b in zip(xs, ys))


def _header():
    return [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W} {_H}" '
            f'width="{_W}" height="{_H}" font-family="sans-serif" font-size="12">',
            f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>']


def _axes(fr, xlabel, ylabel, xticks, yticks):
    b, l, r, t = _H - _PAD, _PAD, _W - _PAD, _PAD
    parts = [f'<path d="M{l},{t} L{l},{b} L{r},{b}" fill="none" stroke="black"/>']
    for v, label in xticks:
        X = fr.px(v)
        parts.append(f'<line x1="{X:.2f}" y1="{b}" x2="{X:.2f}" y2="{b + 4}" stroke="black"/>')
        parts.append(f'<text x="{X:.2f}" y="{b + 16}" text-anchor="middle">{label}</text>')
    for v, label in yticks:
        Y = fr.py(v)
        parts.append(f'<line x1="{l - 4}" y1="{Y:.2f}" x2="{l}" y2="{Y:.2f}" stroke="black"/>')
        parts.append(f'<text x="{l - 6}" y="{Y + 4:.2f}" text-anchor="end">{label}</text>')
    parts.append(f'<text x="{_W / 2:.0f}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="14" y="{_H / 2:.0f}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {_H / 2:.0f})">{ylabel}</text>')
    return parts


def _ticks(lo, hi, n=5):
    vals = np.linspace(lo, hi, n)
    return [(float(v), f"{v:.3g}") for v in vals]


def profile_svg(x0, u0, x1, u1, title="") -> str:
    """Initial datum (solid) and final state (dotted) on common axes."""
    xs = np.concatenate([x0, x1])
    ys = np.concatenate([u0, u1])
    span = float(ys.max() - ys.min()) or 1.0
    fr = _Frame((float(xs.min()), float(xs.max())),
                (float(ys.min()) - 0.05 * span, float(ys.max()) + 0.05 * span))
    parts = _header()
    parts += _axes(fr, "x", "u", _ticks(fr.x0, fr.x1), _ticks(fr.y0, fr.y1))
    parts.append(f'<polyline fill="none" stroke="black" stroke-width="1.5" points="{fr.points(x0, u0)}"/>')
    parts.append(f'<polyline fill="none" stroke="black" stroke-width="1.5" stroke-dasharray="2,3" '
                 f'points="{fr.points(x1, u1)}"/>')
    if title:
        parts.append(f'<text x="{_W / 2:.0f}" y="24" text-anchor="middle">{title}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def loglog_svg(h, err, slope=None, title="") -> str:
    """``err`` against ``h`` on log-log axes, optionally annotated with a slope."""
    lh, le = np.log10(h), np.log10(err)
    fr = _Frame((math.floor(lh.min()), math.ceil(lh.max())),
                (math.floor(le.min()), math.ceil(le.max())))
    xt = [(float(v), f"1e{int(v)}") for v in range(int(fr.x0), int(fr.x1) + 1)]
    yt = [(float(v), f"1e{int(v)}") for v in range(int(fr.y0), int(fr.y1) + 1)]
    parts = _header()
    parts += _axes(fr, "h", "error", xt, yt)
    parts.append(f'<polyline fill="none" stroke="black" stroke-width="1.5" points="{fr.points(lh, le)}"/>')
    for a, b in zip(lh, le):
        parts.append(f'<circle cx="{fr.px(a):.2f}" cy="{fr.py(b):.2f}" r="3" fill="black"/>')
    if slope is not None:
        parts.append(f'<text x="{_W - _PAD:.0f}" y="{_PAD - 8}" text-anchor="end">fitted slope {slope:.3f}</text>')
    if title:
        parts.append(f'<text x="{_W / 2:.0f}" y="24" text-anchor="middle">{title}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
