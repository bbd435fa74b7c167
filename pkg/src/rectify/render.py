"""Minimal SVG emission for curves and classification labels.

Only the chosen two projection axes are drawn; everything else about the
data is ignored.  Output is deterministic text so runs can be diffed.
"""

from __future__ import annotations

import numpy as np

from .curve import CurveState


def _viewbox(points: np.ndarray) -> tuple[float, float, float, float]:
    if points.size == 0:
        return 0.0, 0.0, 1.0, 1.0
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = hi - lo
    if float(span.max()) <= 0.0:
        return float(lo[0]), float(lo[1]), 1.0, 1.0
    margin = 0.05 * float(span.max())
    return (float(lo[0] - margin), float(lo[1] - margin),
            float(span[0] + 2 * margin), float(span[1] + 2 * margin))


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def render_svg(state: CurveState, axes: tuple[int, int] = (0, 1)) -> str:
    """Edges as solid lines, bridges dashed, vertices as circles."""
    h = state.hierarchy
    ax = list(axes)
    pts = []
    for gen in h.generations:
        pts.append(gen[:, ax])
    allpts = np.vstack(pts) if pts else np.zeros((0, 2))
    x0, y0, w, hgt = _viewbox(allpts)
    stroke = 0.004 * max(w, hgt)
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" '
             f'viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(w)} {_fmt(hgt)}">']
    last = state.last_stage
    for a, b in sorted(state.edges.get(last, set())):
        p, q = h.point(a)[ax], h.point(b)[ax]
        lines.append(f'<line x1="{_fmt(p[0])}" y1="{_fmt(p[1])}" '
                     f'x2="{_fmt(q[0])}" y2="{_fmt(q[1])}" '
                     f'stroke="black" stroke-width="{_fmt(stroke)}"/>')
    for br in state.frozen_bridges(last):
        for a, b in br.segments(h):
            p, q = h.point(a)[ax], h.point(b)[ax]
            lines.append(f'<line x1="{_fmt(p[0])}" y1="{_fmt(p[1])}" '
                         f'x2="{_fmt(q[0])}" y2="{_fmt(q[1])}" '
                         f'stroke="crimson" stroke-width="{_fmt(stroke)}" '
                         f'stroke-dasharray="{_fmt(3 * stroke)}"/>')
    r = 1.2 * stroke
    for p in h.generations[last][:, ax]:
        lines.append(f'<circle cx="{_fmt(p[0])}" cy="{_fmt(p[1])}" '
                     f'r="{_fmt(r)}" fill="steelblue"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_labels_svg(atoms: np.ndarray, positive: np.ndarray,
                      axes: tuple[int, int] = (0, 1)) -> str:
    """Atoms as dots, colour-coded by classification label."""
    ax = list(axes)
    pts = atoms[:, ax]
    x0, y0, w, hgt = _viewbox(pts)
    r = 0.004 * max(w, hgt)
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" '
             f'viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(w)} {_fmt(hgt)}">']
    for p, good in zip(pts, positive):
        colour = "seagreen" if good else "firebrick"
        lines.append(f'<circle cx="{_fmt(p[0])}" cy="{_fmt(p[1])}" '
                     f'r="{_fmt(r)}" fill="{colour}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
