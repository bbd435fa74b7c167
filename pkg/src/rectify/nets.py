"""Nested maximal 2^-k nets and the multiresolution family of dilated balls.

Net selection is deterministic: greedy farthest-point traversal seeded at the
point farthest from the centroid, ties broken by input index.  Level k
extends the level k-1 net, so the nets are nested by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Ball, as_points
from .measures import BALL_TOL, DiscreteMeasure

SEP_TOL = 1e-12


def lambda2_lower_bound(J: int) -> float:
    """Smallest admissible ball dilation for a given family step J."""
    return (1.0 - 2.0 ** (-J)) ** (-2)


def maximal_net(points, delta: float, seed_indices=None) -> np.ndarray:
    """Indices of a delta-separated, delta-maximal subset.

    Greedy farthest-point traversal: start from the existing net (or the
    point farthest from the centroid), repeatedly add the point farthest
    from the current net while that distance is still >= delta.  Ties go to
    the lowest input index.

    Seeding at the farthest-from-centroid point keeps the traversal
    equivariant under rigid motions of the whole dataset (the centroid moves
    with the data and index ties are coordinate-free), so nets built in
    different isometric embeddings select the same atom indices.

    Distance updates are restricted to the atoms still eligible for
    selection (distance >= delta), which keeps large instances near-linear
    without changing the selected set: covered atoms only ever get closer
    to the net, so they can never become the farthest point again.
    """
    pts = as_points(points)
    n = pts.shape[0]
    if n == 0:
        raise ValueError("maximal_net requires a nonempty point set")
    if delta <= 0:
        raise ValueError("delta must be positive")
    chosen: list[int] = []
    if seed_indices is not None and len(seed_indices):
        chosen = [int(i) for i in seed_indices]
        dist = cKDTree(pts[chosen]).query(pts)[0]
    else:
        centroid = pts.mean(axis=0)
        first = int(np.argmax(np.linalg.norm(pts - centroid, axis=1)))
        chosen = [first]
        dist = np.linalg.norm(pts - pts[first], axis=1)
    active = np.where(dist >= delta)[0]
    adist = dist[active]
    since_compact = 0
    while active.size:
        far = int(np.argmax(adist))
        if adist[far] < delta:
            break
        idx = int(active[far])
        chosen.append(idx)
        adist = np.minimum(adist,
                           np.linalg.norm(pts[active] - pts[idx], axis=1))
        since_compact += 1
        if since_compact >= 64:
            keep = adist >= delta
            active, adist = active[keep], adist[keep]
            since_compact = 0
    return np.asarray(chosen, dtype=int)


@dataclass
class NetLevel:
    k: int
    indices: np.ndarray        # indices into the measure's atom array
    points: np.ndarray         # (m, d) net points

    @property
    def separation(self) -> float:
        return 2.0 ** (-self.k)


@dataclass
class MultiresolutionFamily:
    k0: int
    k_max: int
    lambda2: float
    J: int
    levels: list[NetLevel]

    def level(self, k: int) -> NetLevel:
        return self.levels[k - self.k0]

    def radius(self, k: int) -> float:
        return self.lambda2 * 2.0 ** (-k)

    def balls_at(self, k: int) -> list[Ball]:
        r = self.radius(k)
        return [Ball(p, r) for p in self.level(k).points]

    def centers_tree(self, k: int) -> cKDTree:
        key = ("_ctree", k)
        t = self.__dict__.get(key)
        if t is None:
            t = cKDTree(self.level(k).points)
            self.__dict__[key] = t
        return t

    def ball_count(self) -> int:
        return sum(len(lv.indices) for lv in self.levels)


def build_family(mu: DiscreteMeasure, k0: int, k_max: int,
                 lambda2: float = 1.1, J: int = 10) -> MultiresolutionFamily:
    """Nested nets at scales 2^-k for k0 <= k <= k_max plus their dilated balls."""
    if k_max < k0:
        raise ValueError("k_max must be >= k0")
    if lambda2 <= lambda2_lower_bound(J):
        raise ValueError(
            f"lambda2={lambda2} violates the bound > {lambda2_lower_bound(J):.6f}"
            f" required for J={J}")
    levels = []
    prev: np.ndarray | None = None
    for k in range(k0, k_max + 1):
        idx = maximal_net(mu.atoms, 2.0 ** (-k), seed_indices=prev)
        levels.append(NetLevel(k, idx, mu.atoms[idx]))
        prev = idx
    return MultiresolutionFamily(k0, k_max, lambda2, J, levels)


def verify_family(fam: MultiresolutionFamily, mu: DiscreteMeasure) -> list[str]:
    """Separation, maximality and nestedness checks; returns violations."""
    problems = []
    for lv in fam.levels:
        delta = lv.separation
        pts = lv.points
        if len(pts) > 1:
            tree = cKDTree(pts)
            d, _ = tree.query(pts, k=2)
            if d[:, 1].min() < delta - SEP_TOL:
                problems.append(f"level {lv.k}: separation violated "
                                f"(min gap {d[:, 1].min():.3e} < {delta:.3e})")
        cover = cKDTree(pts).query(mu.atoms)[0]
        if cover.max() > delta + SEP_TOL:
            problems.append(f"level {lv.k}: not maximal "
                            f"(covering radius {cover.max():.3e} > {delta:.3e})")
    for prev, cur in zip(fam.levels, fam.levels[1:]):
        if not set(prev.indices.tolist()) <= set(cur.indices.tolist()):
            problems.append(f"level {cur.k}: does not contain level {prev.k}")
    return problems


def overlap_counts(fam: MultiresolutionFamily, mu: DiscreteMeasure,
                   k: int, j: int) -> int:
    """max over B in C_k of #{B' in C_j : mu(B and B') > 0}.

    Exact: an atom contributes to the intersection when it lies in both
    closed balls.
    """
    if not (fam.k0 <= k <= j <= fam.k_max):
        raise ValueError("need k0 <= k <= j <= k_max")
    rk, rj = fam.radius(k), fam.radius(j)
    coarse = fam.level(k).points
    fine = fam.level(j).points
    fine_tree = fam.centers_tree(j)
    atom_tree = mu.tree
    worst = 0
    for center in coarse:
        in_b = set(atom_tree.query_ball_point(center, rk + BALL_TOL))
        if not in_b:
            continue
        cand = fine_tree.query_ball_point(center, rk + rj + BALL_TOL)
        count = 0
        for ci in cand:
            in_bp = atom_tree.query_ball_point(fine[ci], rj + BALL_TOL)
            if any(a in in_b for a in in_bp):
                count += 1
        worst = max(worst, count)
    return worst


def containment_offsets(fam: MultiresolutionFamily) -> float:
    """Center-offset budget Sum_{i>=1} 2^{-k-iJ} per unit 2^-k (see
    verify_containment)."""
    J = fam.J
    return 2.0 ** (-J) / (1.0 - 2.0 ** (-J))


def verify_containment(fam: MultiresolutionFamily) -> list[str]:
    """Child balls whose center sits within the geometric-series offset of a
    coarser center must be geometrically inside the coarser ball."""
    problems = []
    budget = containment_offsets(fam)
    for lv in fam.levels:
        for deeper in fam.levels:
            if deeper.k <= lv.k:
                continue
            off = budget * 2.0 ** (-lv.k)
            tree = fam.centers_tree(lv.k)
            rk = fam.radius(lv.k)
            rl = fam.radius(deeper.k)
            for p in deeper.points:
                dist, i = tree.query(p)
                if dist <= off and dist + rl > rk + 1e-9:
                    problems.append(
                        f"ball at level {deeper.k} near center {i} of level "
                        f"{lv.k}: offset {dist:.3e} but not contained")
    return problems


def save_family(path, fam: MultiresolutionFamily) -> None:
    payload = {
        "k0": fam.k0,
        "k_max": fam.k_max,
        "lambda2": fam.lambda2,
        "J": fam.J,
        "levels": [{"k": lv.k, "indices": [int(i) for i in lv.indices]}
                   for lv in fam.levels],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_family(path, mu: DiscreteMeasure) -> MultiresolutionFamily:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    levels = []
    for entry in data["levels"]:
        idx = np.asarray(entry["indices"], dtype=int)
        levels.append(NetLevel(int(entry["k"]), idx, mu.atoms[idx]))
    return MultiresolutionFamily(int(data["k0"]), int(data["k_max"]),
                                 float(data["lambda2"]), int(data["J"]),
                                 levels)
