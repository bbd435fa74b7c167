"""Dimension-agnostic points, lines and m-planes.

Every routine works in R^d for arbitrary d and contains no d-dependent
constants.  Points are plain float ndarrays of shape (d,); point clouds are
arrays of shape (n, d).  Geometric comparisons use an absolute tolerance of
1e-9 on unit-scale data, ordering ties are broken by input index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

# Absolute tolerance for geometric predicates on unit-scale data.
GEOM_TOL = 1e-9
# Tighter tolerance used for unit-length / orthonormality invariants.
UNIT_TOL = 1e-12


def as_point(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("a point must be a 1-d vector with d >= 1")
    if not np.all(np.isfinite(p)):
        raise ValueError("point coordinates must be finite")
    return p


def as_points(pts) -> np.ndarray:
    """Coerce to an (n, d) float array."""
    a = np.asarray(pts, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ValueError("expected an (n, d) array of points")
    return a


def _check_dims(*arrays):
    dims = {a.shape[-1] for a in arrays}
    if len(dims) != 1:
        raise ValueError(f"ambient dimension mismatch: {sorted(dims)}")


@dataclass(frozen=True)
class Line:
    """Infinite straight line given by an anchor point and a unit direction."""

    anchor: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        a = as_point(self.anchor)
        u = as_point(self.direction)
        _check_dims(a, u)
        n = float(np.linalg.norm(u))
        if abs(n - 1.0) > 1e-8:
            if n == 0.0:
                raise ValueError("line direction must be nonzero")
            u = u / n
        object.__setattr__(self, "anchor", a)
        object.__setattr__(self, "direction", canonical_direction(u))

    @property
    def dim(self) -> int:
        return self.anchor.shape[0]


@dataclass(frozen=True)
class MPlane:
    """Affine m-plane: basepoint plus an orthonormal basis of its direction."""

    basepoint: np.ndarray
    basis: np.ndarray  # (m, d), rows orthonormal

    def __post_init__(self):
        bp = as_point(self.basepoint)
        B = np.atleast_2d(np.asarray(self.basis, dtype=float))
        _check_dims(bp, B)
        G = B @ B.T
        if not np.allclose(G, np.eye(B.shape[0]), atol=1e-8):
            # Re-orthonormalize; reject only genuinely degenerate input.
            q, r = np.linalg.qr(B.T)
            if np.any(np.abs(np.diag(r)) < UNIT_TOL):
                raise ValueError("m-plane basis is rank deficient")
            B = q.T[: B.shape[0]]
        object.__setattr__(self, "basepoint", bp)
        object.__setattr__(self, "basis", B)

    @property
    def m(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basepoint.shape[0]


@dataclass(frozen=True)
class Ball:
    """Closed ball used as an evaluation window."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not (self.radius >= 0.0 and np.isfinite(self.radius)):
            raise ValueError("ball radius must be a finite nonnegative number")

    @property
    def diam(self) -> float:
        return 2.0 * self.radius

    def dilate(self, factor: float) -> "Ball":
        return Ball(self.center, factor * self.radius)

    def contains(self, pts, tol: float = UNIT_TOL) -> np.ndarray:
        pts = as_points(pts)
        return np.linalg.norm(pts - self.center, axis=1) <= self.radius + tol


def canonical_direction(u: np.ndarray) -> np.ndarray:
    """Flip sign so the first nonzero component is positive (lexicographically
    positive representative of the {u, -u} pair)."""
    for x in u:
        if abs(x) > UNIT_TOL:
            return u if x > 0 else -u
    return u


def dist_point_line(p, line: Line) -> float:
    """Euclidean distance from a point to an infinite line."""
    p = as_point(p)
    _check_dims(p, line.anchor)
    w = p - line.anchor
    t = float(w @ line.direction)
    return float(np.linalg.norm(w - t * line.direction))


def dist_points_line(pts, line: Line) -> np.ndarray:
    """Vectorized distance from each row of `pts` to the line."""
    pts = as_points(pts)
    _check_dims(pts, line.anchor)
    W = pts - line.anchor
    T = W @ line.direction
    return np.linalg.norm(W - np.outer(T, line.direction), axis=1)


def dist_point_plane(p, plane: MPlane, x=None) -> float:
    """Distance |w - proj_V(w)| of w = p - x from the plane direction V.

    With the default x = plane.basepoint this is the distance from p to the
    affine plane itself.
    """
    p = as_point(p)
    x = plane.basepoint if x is None else as_point(x)
    _check_dims(p, x, plane.basis)
    w = p - x
    proj = plane.basis.T @ (plane.basis @ w)
    return float(np.linalg.norm(w - proj))


def plane_offsets(pts, plane: MPlane, x=None) -> np.ndarray:
    """Vectorized orthogonal distances of points (relative to x) from span(V)."""
    pts = as_points(pts)
    x = plane.basepoint if x is None else as_point(x)
    W = pts - x
    proj = (W @ plane.basis.T) @ plane.basis
    return np.linalg.norm(W - proj, axis=1)


def order_by_projection(pts, line: Line) -> np.ndarray:
    """Indices of points sorted by scalar projection onto the line.

    Stable: ties keep input order.
    """
    pts = as_points(pts)
    _check_dims(pts, line.anchor)
    t = (pts - line.anchor) @ line.direction
    return np.argsort(t, kind="stable")


def hausdorff_distance(A, B) -> float:
    """max(ex(A,B), ex(B,A)) with ex(S,T) = sup_s inf_t |s - t|."""
    A, B = as_points(A), as_points(B)
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise ValueError("hausdorff_distance requires nonempty point sets")
    _check_dims(A, B)
    D = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=2)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def pairwise_min_gap(pts) -> float:
    """Smallest pairwise distance; inf for fewer than two points."""
    pts = as_points(pts)
    n = pts.shape[0]
    if n < 2:
        return float("inf")
    D = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    D[np.diag_indices(n)] = np.inf
    return float(D.min())


def diameter(pts) -> float:
    pts = as_points(pts)
    if pts.shape[0] < 2:
        return 0.0
    D = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    return float(D.max())


def save_points(path, pts) -> None:
    """Write a point set as a JSON array of number arrays (UTF-8, finite only)."""
    pts = as_points(pts)
    if not np.all(np.isfinite(pts)):
        raise ValueError("point sets with NaN/Inf cannot be serialized")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([[float(x) for x in row] for row in pts], fh)


def load_points(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    pts = as_points(data)
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{path}: point set contains NaN/Inf")
    return pts
