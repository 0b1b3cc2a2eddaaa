"""CSV and SVG artifacts.

Every file carries a ``#`` header with the config digest and seed so a
result can be traced back to its inputs.  Floats are written with
``repr`` (shortest round-trip form), so identical inputs give
byte-identical files.
"""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from .fem import CauchyData
from .probe import IndicatorSamples
from .profiler import Profile, TipEstimate


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else repr(float(x))
    if x is None:
        return ""
    return str(x)


def _write(path, header: dict, columns: list[str], rows) -> None:
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    Path(path).write_text(buf.getvalue())


def read_csv(path):
    """Return ``(header, columns, rows)`` with numeric cells as floats."""
    header, lines = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            header[k] = v
        else:
            lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    rows = []
    for r in reader:
        rows.append([float(x) if x not in ("",) else None for x in r])
    return header, columns, rows


def write_cauchy(path, cauchy: CauchyData, header: dict) -> None:
    mesh = cauchy.mesh
    pts = cauchy.points
    rows = zip(mesh.arclength, pts[:, 0], pts[:, 1], cauchy.g.values, cauchy.u_trace)
    _write(path, header, ["arclength", "x1", "x2", "g", "u"], rows)


def write_indicator(path, samples: IndicatorSamples, header: dict) -> None:
    v = samples.values
    rows = zip(samples.tau, v.real, v.imag, np.abs(v), samples.valid.astype(int))
    h = dict(header, xi1=repr(samples.xi[0]), xi2=repr(samples.xi[1]))
    _write(path, h, ["tau", "re", "im", "abs", "valid"], rows)


def write_profile(path, profile: Profile, header: dict) -> None:
    rows = zip(profile.xi1_grid, profile.phi, profile.fit_quality)
    _write(path, header, ["xi1", "phi", "r2"], rows)


def read_profile(path) -> tuple[dict, Profile]:
    header, _, rows = read_csv(path)
    a = np.array(rows, dtype=float)
    return header, Profile(a[:, 0], a[:, 1], a[:, 2])


def profile_svg(profile: Profile, tips: TipEstimate | None = None, true_tips=(),
                title: str = "", width: int = 640, height: int = 320) -> str:
    """Standalone SVG line plot of a profile with optional tip markers.

    Estimated tips are drawn as dots on the curve, true tip positions as
    vertical lines.
    """
    x = np.asarray(profile.xi1_grid, dtype=float)
    y = np.asarray(profile.phi, dtype=float)
    ok = np.isfinite(y)
    ml, mr, mt, mb = 56, 16, 28, 36
    pw, ph = width - ml - mr, height - mt - mb
    x0, x1 = float(x.min()), float(x.max())
    if ok.any():
        y0, y1 = float(y[ok].min()), float(y[ok].max())
    else:
        y0, y1 = 0.0, 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5

    def sx(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return mt + (y1 - v) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="16" text-anchor="middle">{title}</text>')
    for v in np.linspace(x0, x1, 9):
        out.append(f'<line x1="{sx(v):.2f}" y1="{mt + ph}" x2="{sx(v):.2f}" '
                   f'y2="{mt + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{sx(v):.2f}" y="{mt + ph + 16}" text-anchor="middle">{v:.3g}</text>')
    for v in np.linspace(y0, y1, 5):
        out.append(f'<line x1="{ml - 4}" y1="{sy(v):.2f}" x2="{ml}" y2="{sy(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 6}" y="{sy(v) + 4:.2f}" text-anchor="end">{v:.3g}</text>')
    for t in true_tips:
        out.append(f'<line x1="{sx(t):.2f}" y1="{mt}" x2="{sx(t):.2f}" y2="{mt + ph}" '
                   f'stroke="red" stroke-width="1"/>')
    # break the polyline at missing samples
    seg = []
    for xv, yv, good in zip(x, y, ok):
        if good:
            seg.append(f"{sx(xv):.2f},{sy(yv):.2f}")
        elif seg:
            out.append(f'<polyline fill="none" stroke="blue" stroke-width="1.5" points="{" ".join(seg)}"/>')
            seg = []
    if seg:
        out.append(f'<polyline fill="none" stroke="blue" stroke-width="1.5" points="{" ".join(seg)}"/>')
    if tips is not None:
        for t in (tips.x_left, tips.x_right):
            if t is None:
                continue
            k = int(np.argmin(np.abs(x - t)))
            if ok[k]:
                out.append(f'<circle cx="{sx(x[k]):.2f}" cy="{sy(y[k]):.2f}" r="4" fill="red"/>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 4}" text-anchor="middle">xi1</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
