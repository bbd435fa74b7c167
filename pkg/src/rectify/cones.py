"""Good/bad cones, cone mass ratios and Lipschitz-graph classification.

The good cone at x with respect to an m-plane V and aperture alpha collects
the points y with dist(y - x, V) <= alpha |x - y|; the bad cone is its
complement, optionally intersected with a ball B(x, r).  Mass ratios of bad
cones over shrinking balls separate measures carried by Lipschitz graphs
from genuinely spread-out ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import MPlane, UNIT_TOL, as_point, as_points
from .measures import BALL_TOL, DiscreteMeasure


@dataclass
class ConeSpec:
    apex: np.ndarray
    plane: MPlane
    alpha: float
    r: float | None = None

    def __post_init__(self):
        self.apex = as_point(self.apex)
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("aperture alpha must lie in (0, 1)")
        if self.r is not None and self.r <= 0:
            raise ValueError("cone radius must be positive")


def bad_cone_mask(points, spec: ConeSpec) -> np.ndarray:
    """Boolean mask of the points inside the bad cone (apex counts as good)."""
    pts = as_points(points)
    W = pts - spec.apex
    dist_v = np.linalg.norm(W - (W @ spec.plane.basis.T) @ spec.plane.basis,
                            axis=1)
    norms = np.linalg.norm(W, axis=1)
    mask = dist_v > spec.alpha * norms + UNIT_TOL
    if spec.r is not None:
        mask &= norms <= spec.r + BALL_TOL
    return mask


def cone_mass_ratio(mu: DiscreteMeasure, spec: ConeSpec) -> float:
    """mu(bad cone within B(x,r)) / mu(B(x,r)); exact over atoms."""
    if spec.r is None:
        raise ValueError("cone_mass_ratio needs a radius")
    idx = mu.indices_in_ball(spec.apex, spec.r)
    denom = float(mu.weights[idx].sum())
    if denom <= 0.0:
        raise ValueError("ball around the apex carries no mass")
    mask = bad_cone_mask(mu.atoms[idx], spec)
    return float(mu.weights[idx][mask].sum()) / denom


def eta_alpha(alpha: float) -> float:
    """Separation margin of the widened bad cone inside the original one.

    Closed form sqrt(1 - (t2 t1 + sqrt((1 - t2^2)(1 - t1^2)))) with
    t1 = 1 - alpha and t2 = 1 - 2 alpha; real-valued for alpha in (0, 1/2].
    Larger apertures are clamped to 1/2 and flagged via ValueError-free
    return of the clamped value.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    a = min(alpha, 0.5)
    t1 = 1.0 - a
    t2 = 1.0 - 2.0 * a
    inner = t2 * t1 + math.sqrt((1.0 - t2 * t2) * (1.0 - t1 * t1))
    return math.sqrt(max(1.0 - inner, 0.0))


def eta_margin_exact(alpha: float) -> float:
    """Exact inscribed-ball margin sin(arcsin((1+alpha)/2) - arcsin(alpha)).

    A point on the boundary of the widened bad cone (aperture
    alpha + (1-alpha)/2) sits at exactly this fraction of its apex distance
    from the good cone of aperture alpha; the closed form of eta_alpha
    overshoots it for alpha above roughly 0.45.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    return math.sin(math.asin((1.0 + alpha) / 2.0) - math.asin(alpha))


def eta_containment_check(alpha: float, dim: int, n_samples: int,
                          seed: int = 0, slack: float = 0.99) -> dict:
    """Monte-Carlo check that balls of radius slack*eta_alpha*|x-y| around
    boundary points y of the widened bad cone stay inside the bad cone.

    Returns counts of violating samples together with the worst margin.
    """
    if dim < 2:
        raise ValueError("need ambient dimension >= 2")
    rng = np.random.default_rng(seed)
    basis = np.zeros((1, dim))
    basis[0, 0] = 1.0
    plane = MPlane(np.zeros(dim), basis)
    widened = alpha + (1.0 - alpha) / 2.0
    eta = eta_alpha(alpha)
    # y on the boundary: unit vectors with orthogonal component exactly
    # `widened` of the norm.
    u = rng.normal(size=(n_samples, dim))
    u[:, 0] = 0.0
    norms = np.linalg.norm(u, axis=1)
    norms[norms == 0] = 1.0
    perp = u / norms[:, None]
    signs = rng.choice([-1.0, 1.0], size=n_samples)
    scale = rng.uniform(0.5, 2.0, size=n_samples)
    y = (signs * math.sqrt(max(1.0 - widened ** 2, 0.0)))[:, None] \
        * np.eye(dim)[0][None, :] + widened * perp
    y *= scale[:, None]
    # worst direction from y toward the good cone: shrink the orthogonal
    # component, grow the tangential one
    d = np.linalg.norm(y, axis=1)
    radius = slack * eta * d
    probe = rng.normal(size=(n_samples, dim))
    probe /= np.linalg.norm(probe, axis=1)[:, None]
    violations = 0
    worst = math.inf
    for sample in range(n_samples):
        z = y[sample] + radius[sample] * probe[sample]
        w = z
        dist_v = math.sqrt(max(float(w @ w) - float(w[0]) ** 2, 0.0))
        margin = dist_v - alpha * math.sqrt(float(w @ w))
        worst = min(worst, margin)
        if margin <= 0.0:
            violations += 1
    return {"alpha": alpha, "dim": dim, "n": n_samples,
            "violations": violations, "worst_margin": worst,
            "eta": eta, "exact_margin": eta_margin_exact(alpha)}


# ---------------------------------------------------------------------------
# Lipschitz graph extraction
# ---------------------------------------------------------------------------

@dataclass
class GraphExtract:
    accepted: np.ndarray        # indices into the input points
    rejected_pairs: list
    lip_estimate: float         # max |x-y| / |P_V x - P_V y| over accepted
    bound: float                # (1 - alpha^2)^(-1/2)


def graph_extract(points, plane: MPlane, alpha: float) -> GraphExtract:
    """Greedy maximal subset on which the plane projection is bi-Lipschitz.

    Keeps a point when every previously kept point satisfies
    |P_V x - P_V y| >= sqrt(1 - alpha^2) |x - y| (up to 1e-12 slack), so the
    inverse of the projection on the kept set has Lipschitz constant at most
    (1 - alpha^2)^(-1/2).
    """
    pts = as_points(points)
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    P = (pts - plane.basepoint) @ plane.basis.T  # (n, m) projected coords
    need = math.sqrt(1.0 - alpha * alpha)
    accepted: list[int] = []
    rejected: list = []
    for i in range(len(pts)):
        ok = True
        for j in accepted:
            full = float(np.linalg.norm(pts[i] - pts[j]))
            proj = float(np.linalg.norm(P[i] - P[j]))
            if proj + 1e-12 < need * full:
                ok = False
                rejected.append((i, j))
                break
        if ok:
            accepted.append(i)
    lip = 1.0
    acc = np.asarray(accepted, dtype=int)
    for a in range(len(acc)):
        for b in range(a + 1, len(acc)):
            full = float(np.linalg.norm(pts[acc[a]] - pts[acc[b]]))
            proj = float(np.linalg.norm(P[acc[a]] - P[acc[b]]))
            if proj > 0:
                lip = max(lip, full / proj)
    return GraphExtract(acc, rejected, lip, 1.0 / need)


# ---------------------------------------------------------------------------
# classification pipeline
# ---------------------------------------------------------------------------

@dataclass
class AtomLabel:
    atom_index: int
    positive: bool
    plane_index: int | None
    alpha: float | None
    min_ratio: float


def default_plane_grid(mu: DiscreteMeasure, m: int = 1, n_samples: int = 24,
                       neighbors: int = 32, seed: int = 0) -> list[MPlane]:
    """Candidate m-planes: principal directions of local neighborhoods at a
    seeded sample of atoms, plus the coordinate axes planes, deduplicated."""
    rng = np.random.default_rng(seed)
    d = mu.dim
    planes: list[np.ndarray] = []
    for axes in _axis_combos(d, m):
        B = np.zeros((m, d))
        for row, ax in enumerate(axes):
            B[row, ax] = 1.0
        planes.append(B)
    n = len(mu.atoms)
    sample = rng.choice(n, size=min(n_samples, n), replace=False)
    k = min(neighbors, n)
    for i in sorted(sample):
        _, idx = mu.tree.query(mu.atoms[i], k=k)
        nb = mu.atoms[np.atleast_1d(idx)]
        centered = nb - nb.mean(axis=0)
        w = mu.weights[np.atleast_1d(idx)]
        M = (centered * w[:, None]).T @ centered
        vals, vecs = np.linalg.eigh(M)
        planes.append(vecs[:, -m:].T.copy())
    out: list[MPlane] = []
    for B in planes:
        plane = MPlane(np.zeros(d), B)
        if not any(_plane_close(plane, q) for q in out):
            out.append(plane)
    return out


def _axis_combos(d: int, m: int):
    from itertools import combinations
    return list(combinations(range(d), m))


def _plane_close(a: MPlane, b: MPlane, tol: float = 1e-3) -> bool:
    if a.m != b.m:
        return False
    # principal angles via singular values of the basis Gram matrix
    s = np.linalg.svd(a.basis @ b.basis.T, compute_uv=False)
    return bool(np.all(s > 1.0 - tol))


def default_alpha_grid() -> np.ndarray:
    return np.round(np.arange(0.1, 1.0, 0.1), 10)


def default_r_grid(mu: DiscreteMeasure, steps: int = 8) -> np.ndarray:
    hi = float(np.linalg.norm(mu.atoms.max(0) - mu.atoms.min(0)))
    lo = max(4.0 * mu.min_atom_gap(), hi / 2.0 ** (steps - 1))
    if not (0 < lo < hi):
        lo, hi = hi / 2 ** (steps - 1), hi
    return np.geomspace(lo, hi, steps)


def classify_graph_rectifiable(mu: DiscreteMeasure,
                               plane_grid: list[MPlane] | None = None,
                               alpha_grid=None, r_grid=None,
                               ratio_threshold: float = 0.05,
                               m: int = 1) -> list[AtomLabel]:
    """Label each atom by whether some (plane, aperture) kills the bad-cone
    mass ratio at every radius in the finest half of the grid.

    The recorded witness is the pair with the smallest worst-case ratio,
    ties resolved toward larger apertures then earlier planes.
    """
    if plane_grid is None:
        plane_grid = default_plane_grid(mu, m=m)
    if alpha_grid is None:
        alpha_grid = default_alpha_grid()
    if r_grid is None:
        r_grid = default_r_grid(mu)
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    r_grid = np.sort(np.asarray(r_grid, dtype=float))
    if len(plane_grid) == 0 or alpha_grid.size == 0 or r_grid.size == 0:
        raise ValueError("classification grids must be nonempty")
    fine = r_grid[: max(1, len(r_grid) // 2)]
    labels = []
    for i in range(len(mu.atoms)):
        x = mu.atoms[i]
        # worst-case ratio over the fine radii, per (plane, alpha)
        worst = np.zeros((len(plane_grid), alpha_grid.size))
        for r in fine:
            idx = mu.indices_in_ball(x, float(r))
            wts = mu.weights[idx]
            denom = float(wts.sum())
            W = mu.atoms[idx] - x
            norms = np.linalg.norm(W, axis=1)
            for p_idx, plane in enumerate(plane_grid):
                dist_v = np.linalg.norm(
                    W - (W @ plane.basis.T) @ plane.basis, axis=1)
                # (n_alpha, n_atoms) mask; ratio is monotone nonincreasing
                # in alpha by construction
                bad = dist_v[None, :] > alpha_grid[:, None] * norms[None, :] \
                    + UNIT_TOL
                worst[p_idx] = np.maximum(worst[p_idx], (bad @ wts) / denom)
        best = (math.inf, -1.0, -1)  # (worst ratio, -alpha, plane index)
        for p_idx in range(len(plane_grid)):
            for a_idx, alpha in enumerate(alpha_grid):
                key = (worst[p_idx, a_idx], -alpha, p_idx)
                if key < best:
                    best = key
        ratio, neg_alpha, p_idx = best
        positive = ratio < ratio_threshold
        labels.append(AtomLabel(i, positive,
                                p_idx if positive else None,
                                -neg_alpha if positive else None,
                                ratio))
    return labels
