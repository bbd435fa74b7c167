"""L2 and sup-type beta numbers over ball windows.

The L2 objective over lines has a closed-form minimizer: the line through the
weighted centroid in the direction of the top eigenvector of the weighted
second-moment matrix.  beta2 therefore never iterates; beta_sup reports a
cheap L2 surrogate (an upper bound for the minimax value) with an optional
exact 2-d computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (Ball, Line, UNIT_TOL, as_points, canonical_direction,
                       dist_points_line)
from .measures import DiscreteMeasure

_E1_FALLBACK = "degenerate"


@dataclass
class BetaResult:
    value: float
    line: Line | None
    window_diam: float
    window_mass: float


def _top_eigvec(M: np.ndarray) -> np.ndarray:
    """Eigenvector of the largest eigenvalue, deterministic under ties.

    Near-equal top eigenvalues (isotropic clouds) are resolved by taking the
    lexicographically largest sign-canonicalized candidate.
    """
    vals, vecs = np.linalg.eigh(M)
    top = vals[-1]
    cand = [canonical_direction(vecs[:, i])
            for i in range(len(vals))
            if vals[i] >= top - 1e-12 * max(1.0, abs(top))]
    return max(cand, key=tuple)


def _weighted_moments(pts: np.ndarray, w: np.ndarray):
    mass = float(w.sum())
    centroid = (w @ pts) / mass
    X = pts - centroid
    M = (X * w[:, None]).T @ X
    return mass, centroid, M


def best_fit_line(mu: DiscreteMeasure, window: Ball) -> Line:
    """Exact minimizer of the integrated squared distance over all lines.

    A single atom (or totally isotropic degeneracy) is canonicalized to the
    e1 direction through the centroid.
    """
    idx = mu.indices_in_ball(window.center, window.radius)
    if idx.size == 0:
        raise ValueError("window contains no atoms")
    pts, w = mu.atoms[idx], mu.weights[idx]
    _, centroid, M = _weighted_moments(pts, w)
    if np.all(np.abs(M) < UNIT_TOL):
        direction = np.zeros(mu.dim)
        direction[0] = 1.0
        return Line(centroid, direction)
    return Line(centroid, _top_eigvec(M))


def line_fit_points(pts, weights=None) -> Line:
    """Best L2 line of a bare point set (unweighted unless weights given)."""
    pts = as_points(pts)
    w = np.ones(len(pts)) if weights is None else np.asarray(weights, float)
    _, centroid, M = _weighted_moments(pts, w)
    if np.all(np.abs(M) < UNIT_TOL):
        direction = np.zeros(pts.shape[1])
        direction[0] = 1.0
        return Line(centroid, direction)
    return Line(centroid, _top_eigvec(M))


def beta2(mu: DiscreteMeasure, window: Ball, dilation: float = 1.0,
          line: Line | None = None) -> BetaResult:
    """Normalized L2 beta number of the (dilated) window.

    The window E is the ball dilated by `dilation`; distances are normalized
    by diam E = 2 * dilation * radius.  Zero mass in E is a defined case and
    returns value 0 with no line.  Passing `line` evaluates that line instead
    of the minimizer.
    """
    if dilation < 1.0:
        raise ValueError("dilation must be >= 1")
    E = window.dilate(dilation)
    diam_e = E.diam
    idx = mu.indices_in_ball(E.center, E.radius)
    if idx.size == 0:
        return BetaResult(0.0, None, diam_e, 0.0)
    pts, w = mu.atoms[idx], mu.weights[idx]
    mass = float(w.sum())
    if diam_e <= 0.0:
        return BetaResult(0.0, line, diam_e, mass)
    if line is None:
        line = best_fit_line(mu, E)
        _, _, M = _weighted_moments(pts, w)
        vals = np.linalg.eigvalsh(M)
        resid = float(max(vals.sum() - vals[-1], 0.0))
    else:
        resid = float(np.sum(w * dist_points_line(pts, line) ** 2))
    value = math.sqrt(resid / mass) / diam_e
    return BetaResult(value, line, diam_e, mass)


def beta_sup(points, window: Ball, exact: bool = False,
             angle_steps: int = 1024) -> BetaResult:
    """Sup-type beta number surrogate for a point set in a window.

    Default value: sup distance to the L2 best-fit line of the windowed
    points over diam Q.  This upper-bounds the true minimax beta.  With
    exact=True (planar data only) the minimax is computed by minimizing the
    directional half-width over an angle grid with golden-section refinement.
    """
    pts = as_points(points)
    inside = window.contains(pts)
    pts = pts[inside]
    if pts.shape[0] == 0:
        return BetaResult(0.0, None, window.diam, 0.0)
    if window.diam <= 0.0:
        return BetaResult(0.0, None, window.diam, float(pts.shape[0]))
    if exact:
        if pts.shape[1] != 2:
            raise ValueError("exact minimax beta is implemented for d=2 only")
        value, line = _minimax_line_2d(pts, angle_steps)
        return BetaResult(value / window.diam, line, window.diam,
                          float(pts.shape[0]))
    line = line_fit_points(pts)
    value = float(dist_points_line(pts, line).max())
    return BetaResult(value / window.diam, line, window.diam,
                      float(pts.shape[0]))


def _halfwidth(pts: np.ndarray, theta: float) -> float:
    normal = np.array([-math.sin(theta), math.cos(theta)])
    s = pts @ normal
    return 0.5 * float(s.max() - s.min())


def _minimax_line_2d(pts: np.ndarray, angle_steps: int):
    thetas = np.linspace(0.0, math.pi, angle_steps, endpoint=False)
    widths = [_halfwidth(pts, t) for t in thetas]
    i = int(np.argmin(widths))
    lo = thetas[i] - math.pi / angle_steps
    hi = thetas[i] + math.pi / angle_steps
    phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    for _ in range(60):
        if _halfwidth(pts, c) < _halfwidth(pts, d):
            b, d = d, c
            c = b - phi * (b - a)
        else:
            a, c = c, d
            d = a + phi * (b - a)
    theta = 0.5 * (a + b)
    width = _halfwidth(pts, theta)
    normal = np.array([-math.sin(theta), math.cos(theta)])
    s = pts @ normal
    mid = 0.5 * (s.max() + s.min())
    anchor = mid * normal
    return width, Line(anchor, np.array([math.cos(theta), math.sin(theta)]))


def center_of_mass(mu: DiscreteMeasure, window: Ball) -> np.ndarray:
    idx = mu.indices_in_ball(window.center, window.radius)
    if idx.size == 0:
        raise ValueError("window has zero mass")
    w = mu.weights[idx]
    return (w @ mu.atoms[idx]) / w.sum()


def batch_beta2(mu: DiscreteMeasure, fam, dilation: float = 2.0):
    """Rows (k, ball_index, beta2, mass, diam) over a multiresolution family."""
    rows = []
    for level in fam.levels:
        for j, ball in enumerate(fam.balls_at(level.k)):
            res = beta2(mu, ball, dilation=dilation)
            rows.append((level.k, j, res.value,
                         res.window_mass, ball.diam))
    return rows
