"""Discrete measures: weighted atom clouds with ball-mass queries.

A DiscreteMeasure is the computational stand-in for a locally finite Borel
measure; its carrying set is the atom set.  Balls are closed, with an
inclusive boundary tolerance of 1e-12, so that mass queries are deterministic
on data where atoms sit exactly on a sphere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Ball, as_point, as_points

BALL_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteMeasure:
    atoms: np.ndarray    # (n, d)
    weights: np.ndarray  # (n,), all positive

    def __post_init__(self):
        atoms = as_points(self.atoms)
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.shape[0] != atoms.shape[0]:
            raise ValueError("weights must be a vector matching the atom count")
        if atoms.shape[0] == 0:
            raise ValueError("a measure needs at least one atom")
        if not np.all(w > 0):
            raise ValueError("weights must be strictly positive")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(atoms))):
            raise ValueError("atoms and weights must be finite")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def tree(self) -> cKDTree:
        # Built lazily; DiscreteMeasure is immutable so caching is safe.
        t = self.__dict__.get("_tree")
        if t is None:
            t = cKDTree(self.atoms)
            self.__dict__["_tree"] = t
        return t

    def indices_in_ball(self, center, r: float) -> np.ndarray:
        """Indices of atoms in the closed ball B(center, r)."""
        center = as_point(center)
        idx = self.tree.query_ball_point(center, r + BALL_TOL)
        return np.asarray(sorted(idx), dtype=int)

    def restrict(self, indices) -> "DiscreteMeasure":
        indices = np.asarray(indices, dtype=int)
        return DiscreteMeasure(self.atoms[indices], self.weights[indices])

    def min_atom_gap(self) -> float:
        d, _ = self.tree.query(self.atoms, k=2)
        return float(d[:, 1].min()) if self.atoms.shape[0] > 1 else float("inf")


def ball_mass(mu: DiscreteMeasure, center, r: float) -> float:
    """Mass of the closed ball B(center, r)."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    idx = mu.indices_in_ball(center, r)
    return float(mu.weights[idx].sum()) if idx.size else 0.0


def ball_of(mu: DiscreteMeasure, center, r: float) -> Ball:
    return Ball(as_point(center), float(r))


@dataclass
class DoublingReport:
    point_index: int
    radii: np.ndarray
    ratios: np.ndarray
    sup_ratio: float


def doubling_profile(mu: DiscreteMeasure, x, r_min: float, r_max: float,
                     steps: int = 16) -> DoublingReport:
    """Ratios mu(B(x,2r))/mu(B(x,r)) over a geometric grid of radii."""
    if not (0 < r_min < r_max):
        raise ValueError("need 0 < r_min < r_max")
    x = as_point(x)
    if ball_mass(mu, x, r_min) <= 0:
        raise ValueError("x must carry positive mass in B(x, r_min)")
    radii = np.geomspace(r_min, r_max, steps)
    ratios = np.empty(steps)
    for i, r in enumerate(radii):
        denom = ball_mass(mu, x, r)
        ratios[i] = ball_mass(mu, x, 2 * r) / denom if denom > 0 else math.inf
    # Nearest-atom index keeps the report tied to the carrying set.
    point_index = int(mu.tree.query(x)[1])
    return DoublingReport(point_index, radii, ratios, float(np.max(ratios)))


def doubling_constant(mu: DiscreteMeasure, centers=None, radii=None) -> float:
    """Empirical doubling constant: max ratio over a center/radius grid.

    Defaults probe every atom (subsampled above 2000) over a geometric radius
    grid from twice the minimum atom gap up to the diameter.
    """
    if centers is None:
        atoms = mu.atoms
        if atoms.shape[0] > 2000:
            step = atoms.shape[0] // 2000 + 1
            atoms = atoms[::step]
        centers = atoms
    centers = as_points(centers)
    if radii is None:
        lo = 2.0 * mu.min_atom_gap()
        hi = float(np.linalg.norm(mu.atoms.max(0) - mu.atoms.min(0))) or 1.0
        if not np.isfinite(lo) or lo >= hi:
            lo = hi / 4
        radii = np.geomspace(lo, hi, 12)
    best = 1.0
    for r in radii:
        inner = mu.tree.query_ball_point(centers, r + BALL_TOL)
        outer = mu.tree.query_ball_point(centers, 2 * r + BALL_TOL)
        for idx_in, idx_out in zip(inner, outer):
            m_in = mu.weights[idx_in].sum()
            if m_in > 0:
                best = max(best, float(mu.weights[idx_out].sum() / m_in))
    return best


def lower_density(mu: DiscreteMeasure, x, r: float) -> float:
    """One-dimensional density proxy mu(B(x,r))/r."""
    if r <= 0:
        raise ValueError("radius must be positive")
    return ball_mass(mu, x, r) / r


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _embed(points2: np.ndarray, dim: int) -> np.ndarray:
    """Pad planar coordinates with zeros up to the requested dimension."""
    n, d0 = points2.shape
    if dim < d0:
        raise ValueError(f"dim={dim} too small for {d0}-dimensional data")
    if dim == d0:
        return points2
    out = np.zeros((n, dim))
    out[:, :d0] = points2
    return out


def _gen_segment(params, n, rng):
    dim = int(params.get("dim", 1))
    length = float(params.get("length", 1.0))
    t = np.linspace(0.0, length, n) if n > 1 else np.array([0.0])
    return _embed(t.reshape(-1, 1), max(dim, 1)), np.full(n, 1.0 / n)


def _gen_circle(params, n, rng):
    dim = int(params.get("dim", 2))
    radius = float(params.get("radius", 0.5))
    theta = 2 * np.pi * np.arange(n) / n
    pts = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    return _embed(pts, max(dim, 2)), np.full(n, 1.0 / n)


def lipschitz_zigzag(L: float, pieces: int, rng) -> np.ndarray:
    """Breakpoints (t_i, y_i) of a random piecewise-linear f with Lip(f) <= L."""
    t = np.linspace(0.0, 1.0, pieces + 1)
    slopes = rng.uniform(-L, L, size=pieces)
    y = np.concatenate([[0.0], np.cumsum(slopes * np.diff(t))])
    return np.column_stack([t, y])


def _gen_lipschitz_graph(params, n, rng):
    dim = int(params.get("dim", 2))
    L = float(params.get("L", 0.5))
    knots = params.get("knots")
    if knots is None:
        knots = lipschitz_zigzag(L, int(params.get("pieces", 6)), rng)
    knots = np.asarray(knots, dtype=float)
    slopes = np.diff(knots[:, 1]) / np.diff(knots[:, 0])
    if np.max(np.abs(slopes)) > L + 1e-9:
        raise ValueError("supplied knots exceed the stated Lipschitz constant")
    t = np.linspace(knots[0, 0], knots[-1, 0], n)
    y = np.interp(t, knots[:, 0], knots[:, 1])
    return _embed(np.column_stack([t, y]), max(dim, 2)), np.full(n, 1.0 / n)


_CANTOR_CORNERS = np.array([[0.0, 0.0], [0.75, 0.0], [0.0, 0.75], [0.75, 0.75]])


def cantor4_points(depth: int) -> np.ndarray:
    """Lower-left corners of the 4^depth squares of the four-corner Cantor set
    (contraction ratio 1/4)."""
    pts = np.zeros((1, 2))
    for level in range(1, depth + 1):
        shift = _CANTOR_CORNERS * 4.0 ** (1 - level)
        pts = (pts[:, None, :] + shift[None, :, :]).reshape(-1, 2)
    return pts


def _gen_cantor4(params, n, rng):
    dim = int(params.get("dim", 2))
    depth = int(params.get("depth", 6))
    pts = cantor4_points(depth)
    return _embed(pts, max(dim, 2)), np.full(len(pts), 4.0 ** (-depth))


def _gen_plane_stack(params, n, rng):
    """Finite stack of parallel 2-planes with summable coefficients.

    Each plane carries an equispaced grid measure on a unit square (a plain
    doubling base measure standing in for a singular one).  Plane i is offset
    along the third axis by 2^-i, so inter-plane gaps shrink geometrically.
    """
    dim = int(params.get("dim", 3))
    if dim < 3:
        raise ValueError("plane_stack needs ambient dimension >= 3")
    n_planes = int(params.get("planes", 8))
    coeffs = params.get("coeffs")
    if coeffs is None:
        coeffs = [2.0 ** (-i) for i in range(n_planes)]
    coeffs = np.asarray(coeffs, dtype=float)
    if len(coeffs) != n_planes:
        raise ValueError("need one coefficient per plane")
    if np.any(coeffs <= 0) or not np.all(np.isfinite(coeffs)):
        raise ValueError("plane coefficients must be positive and summable")
    side = max(2, int(round(math.sqrt(n))))
    g = np.linspace(0.0, 1.0, side)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    base = np.column_stack([gx.ravel(), gy.ravel()])
    base_w = np.full(len(base), 1.0 / len(base))
    atoms, weights = [], []
    for i, c in enumerate(coeffs):
        plane = np.zeros((len(base), dim))
        plane[:, :2] = base
        plane[:, 2] = 0.0 if i == 0 else 2.0 ** (-i)
        atoms.append(plane)
        weights.append(c * base_w)
    return np.vstack(atoms), np.concatenate(weights)


_GENERATORS = {
    "segment": _gen_segment,
    "circle": _gen_circle,
    "lipschitz_graph": _gen_lipschitz_graph,
    "cantor4": _gen_cantor4,
    "plane_stack": _gen_plane_stack,
}


def generate(kind: str, params: dict | None = None, n: int = 100,
             seed: int = 0) -> DiscreteMeasure:
    """Deterministic fixture measures; identical output for identical inputs."""
    if kind not in _GENERATORS:
        raise ValueError(f"unknown measure kind {kind!r}; "
                         f"choose from {sorted(_GENERATORS)}")
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    atoms, weights = _GENERATORS[kind](params or {}, n, rng)
    return DiscreteMeasure(atoms, weights)


# ---------------------------------------------------------------------------
# file format: {"dim": d, "atoms": [[...]], "weights": [...]}
# ---------------------------------------------------------------------------

def save_measure(path, mu: DiscreteMeasure) -> None:
    payload = {
        "dim": mu.dim,
        "atoms": [[float(x) for x in row] for row in mu.atoms],
        "weights": [float(w) for w in mu.weights],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_measure(path) -> DiscreteMeasure:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    atoms = as_points(data["atoms"])
    if atoms.shape[1] != data["dim"]:
        raise ValueError(f"{path}: dim field does not match atom width")
    return DiscreteMeasure(atoms, np.asarray(data["weights"], dtype=float))
