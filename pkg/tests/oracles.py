"""Independent brute-force oracles used to pin expected values.

Everything here is deliberately slow and structure-free: grids and
exhaustive scans only, no reuse of the library's closed forms.
"""

import numpy as np


def beta2_grid_oracle(atoms, weights, center, radius_e, n_angles=2000,
                      n_offsets=5):
    """Minimum normalized L2 line deviation over an angle/offset grid.

    Lines are parametrized by direction angle and signed offset of the
    anchor from the weighted centroid along the normal; the zero offset is
    always on the grid.  Planar data only.  Returns the grid minimum of
    sqrt(int dist^2 dmu / mass) / diam_E with diam_E = 2 * radius_e.
    """
    atoms = np.asarray(atoms, float)
    weights = np.asarray(weights, float)
    mass = weights.sum()
    centroid = (weights @ atoms) / mass
    spread = float(np.linalg.norm(atoms - centroid, axis=1).max())
    offsets = np.linspace(-spread, spread, n_offsets - 1) if spread > 0 \
        else np.zeros(1)
    offsets = np.unique(np.append(offsets, 0.0))
    best = np.inf
    for theta in np.linspace(0.0, np.pi, n_angles, endpoint=False):
        u = np.array([np.cos(theta), np.sin(theta)])
        nvec = np.array([-np.sin(theta), np.cos(theta)])
        for s in offsets:
            anchor = centroid + s * nvec
            w = atoms - anchor
            d = w @ nvec
            val = float(np.sum(weights * d * d))
            best = min(best, val)
    return np.sqrt(best / mass) / (2.0 * radius_e)


def minimax_beta_oracle(points, diam_q, n_angles=2000):
    """Exact-ish minimax beta for planar points: minimal strip half-width
    over a dense angle grid, normalized by diam_q."""
    pts = np.asarray(points, float)
    best = np.inf
    for theta in np.linspace(0.0, np.pi, n_angles, endpoint=False):
        nvec = np.array([-np.sin(theta), np.cos(theta)])
        s = pts @ nvec
        best = min(best, 0.5 * (s.max() - s.min()))
    return best / diam_q


def ball_mass_naive(atoms, weights, center, r, tol=1e-12):
    d = np.linalg.norm(np.asarray(atoms, float) - np.asarray(center, float),
                       axis=1)
    return float(np.asarray(weights, float)[d <= r + tol].sum())


def is_separated_maximal(points, subset, delta, tol=1e-12):
    """Definitional check: delta-separated and delta-covering."""
    pts = np.asarray(points, float)
    sel = pts[np.asarray(subset, int)]
    for i in range(len(sel)):
        for j in range(i + 1, len(sel)):
            if np.linalg.norm(sel[i] - sel[j]) < delta - tol:
                return False
    for p in pts:
        if np.min(np.linalg.norm(sel - p, axis=1)) > delta + tol:
            return False
    return True


def overlap_count_naive(centers_k, r_k, centers_j, r_j, atoms, weights,
                        tol=1e-12):
    """max over coarse balls of the number of fine balls sharing mass."""
    atoms = np.asarray(atoms, float)
    worst = 0
    for c in centers_k:
        in_b = np.linalg.norm(atoms - c, axis=1) <= r_k + tol
        count = 0
        for cj in centers_j:
            in_bp = np.linalg.norm(atoms - cj, axis=1) <= r_j + tol
            if np.any(in_b & in_bp & (np.asarray(weights) > 0)):
                count += 1
        worst = max(worst, count)
    return worst


def polyline_length(points_in_order):
    pts = np.asarray(points_in_order, float)
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
