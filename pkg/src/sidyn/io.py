"""CSV and SVG output, and the observations CSV reader.

Floats are written with ``repr`` (shortest round-trip form) so identical runs
produce byte-identical files.
"""
from __future__ import annotations

import csv
import io
import math
from html import escape
from pathlib import Path

import numpy as np

from .model import ModelParams

TRAJECTORY_HEADER = ("t", "s", "i", "p", "par")
SWEEP_HEADER = ("axis1", "axis2", "outcome", "endpoint_s", "endpoint_i")
MAX_ROWS = 10_001

OUTCOME_COLORS = {
    "diverged": "#d62728",
    "collapse_to_origin": "#7f7f7f",
    "s_dominant": "#2ca02c",
    "i_dominant": "#ff7f0e",
    "mixed": "#1f77b4",
    "invalid": "#000000",
}


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def thin_indices(n: int, max_rows: int = MAX_ROWS) -> np.ndarray:
    """At most ``max_rows`` uniformly spaced indices into ``range(n)``, ends included."""
    if n <= max_rows:
        return np.arange(n)
    if max_rows < 2:
        return np.array([n - 1])
    return np.unique(np.round(np.linspace(0, n - 1, max_rows)).astype(np.int64))


def trajectory_rows(p: ModelParams, traj, max_rows: int = MAX_ROWS):
    for j in thin_indices(len(traj), max_rows):
        t, s, i = float(traj.t[j]), float(traj.s[j]), float(traj.i[j])
        total = s + i
        par = i / total if total != 0.0 else math.nan
        yield t, s, i, total / p.alpha, par


def _write(path, text):
    Path(path).write_text(text, encoding="utf-8", newline="")


def trajectory_csv(p: ModelParams, traj, max_rows: int = MAX_ROWS) -> str:
    buf = io.StringIO()
    buf.write(",".join(TRAJECTORY_HEADER) + "\n")
    for row in trajectory_rows(p, traj, max_rows):
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_trajectory_csv(path, p, traj, max_rows=MAX_ROWS):
    _write(path, trajectory_csv(p, traj, max_rows))


def sweep_csv(smap) -> str:
    buf = io.StringIO()
    buf.write(",".join(SWEEP_HEADER) + "\n")
    for v1, row in zip(smap.axis1.values, smap.cells):
        for v2, cell in zip(smap.axis2.values, row):
            es, ei = (cell.endpoint if cell.endpoint is not None else (math.nan, math.nan))
            buf.write(f"{fmt(v1)},{fmt(v2)},{cell.tag},{fmt(es)},{fmt(ei)}\n")
    return buf.getvalue()


def write_sweep_csv(path, smap):
    _write(path, sweep_csv(smap))


def read_observations(path):
    """Read a ``t,s,i[,w]`` CSV into a :class:`sidyn.calibration.ObservationSet`."""
    from .calibration import ObservationSet

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty observations file") from None
        if header not in (["t", "s", "i"], ["t", "s", "i", "w"]):
            raise ValueError(f"{path}: header must be t,s,i or t,s,i,w, got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric field") from None
    arr = np.array(rows, dtype=float).reshape(-1, len(header))
    weights = arr[:, 3] if len(header) == 4 else None
    return ObservationSet(arr[:, 0], arr[:, 1], arr[:, 2], weights)


def write_observations(path, obs):
    lines = ["t,s,i,w"]
    for t, s, i, w in zip(obs.t, obs.s, obs.i, obs.w):
        lines.append(",".join(fmt(v) for v in (t, s, i, w)))
    _write(path, "\n".join(lines) + "\n")


# -- SVG ---------------------------------------------------------------------

WIDTH, HEIGHT = 800, 600
MARGIN = 60


def _scale(lo, hi, a, b):
    if hi == lo:
        hi, lo = hi + 0.5, lo - 0.5
    return lambda v: a + (v - lo) / (hi - lo) * (b - a)


def trajectory_svg(traj, title="", max_points: int = 2000) -> str:
    """Two-series polyline chart of s(t) and i(t) on shared linear axes."""
    idx = thin_indices(len(traj), max_points)
    t = traj.t[idx]
    series = {"S": traj.s[idx], "I": traj.i[idx]}
    ys = np.concatenate(list(series.values()))
    x_of = _scale(float(t.min()), float(t.max()), MARGIN, WIDTH - MARGIN)
    y_lo, y_hi = float(ys.min()), float(ys.max())
    y_of = _scale(y_lo, y_hi, HEIGHT - MARGIN, MARGIN)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="30" text-anchor="middle" font-size="16">{escape(title)}</text>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 20}" font-size="12">{fmt(t.min())}</text>',
        f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 20}" font-size="12" text-anchor="end">{fmt(t.max())}</text>',
        f'<text x="{MARGIN - 5}" y="{HEIGHT - MARGIN}" font-size="12" text-anchor="end">{y_lo:.4g}</text>',
        f'<text x="{MARGIN - 5}" y="{MARGIN + 10}" font-size="12" text-anchor="end">{y_hi:.4g}</text>',
    ]
    for (name, y), color, ly in zip(series.items(), ("#2ca02c", "#d62728"), (50, 70)):
        pts = " ".join(f"{x_of(a):.2f},{y_of(b):.2f}" for a, b in zip(t, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{WIDTH - MARGIN}" y="{ly}" font-size="12" fill="{color}" text-anchor="end">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def sweep_svg(smap, title="") -> str:
    """Raster of sweep outcomes; axis1 runs left to right, axis2 bottom to top."""
    n1, n2 = smap.axis1.count, smap.axis2.count
    cw = (WIDTH - 2 * MARGIN - 150) / n1
    ch = (HEIGHT - 2 * MARGIN) / n2
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="30" text-anchor="middle" font-size="16">{escape(title)}</text>',
    ]
    for r, row in enumerate(smap.cells):
        for c, cell in enumerate(row):
            x = MARGIN + r * cw
            y = HEIGHT - MARGIN - (c + 1) * ch
            out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{cw:.2f}" height="{ch:.2f}" '
                       f'fill="{OUTCOME_COLORS[cell.tag]}"><title>{cell.tag}</title></rect>')
    a1, a2 = smap.axis1, smap.axis2
    out.append(f'<text x="{MARGIN + n1 * cw / 2:.2f}" y="{HEIGHT - MARGIN + 35}" text-anchor="middle" '
               f'font-size="14">{escape(a1.name)} [{fmt(a1.lo)}, {fmt(a1.hi)}]</text>')
    out.append(f'<text x="{MARGIN - 20}" y="{HEIGHT / 2}" text-anchor="middle" font-size="14" '
               f'transform="rotate(-90 {MARGIN - 20} {HEIGHT / 2})">{escape(a2.name)} [{fmt(a2.lo)}, {fmt(a2.hi)}]</text>')
    for k, (tag, color) in enumerate(OUTCOME_COLORS.items()):
        y = MARGIN + 25 * k
        out.append(f'<rect x="{WIDTH - MARGIN - 130}" y="{y}" width="15" height="15" fill="{color}"/>')
        out.append(f'<text x="{WIDTH - MARGIN - 110}" y="{y + 12}" font-size="12">{tag}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
