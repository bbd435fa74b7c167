"""Core families over a multiresolution family and the induced ball trees.

Each ball B at net level k owns a connected core Q_B: its c-dilate plus,
iterated to a fixed point, every c-dilated ball J levels finer that touches
the region.  Cores at the same level are disjoint, cores nest across levels
within a family, and core intersection defines the parent/child relation of
the ball tree.  The localization pass splits a tree into good and bad balls
so that a payoff function summed over the good part stays controlled, and
the leaves pipeline feeds the surviving structure to the curve construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .beta import best_fit_line, beta2, center_of_mass
from .curve import CurveState, NetHierarchy, VertexAnnotation, construct
from .geometry import Ball
from .measures import BALL_TOL, DiscreteMeasure, ball_mass
from .nets import MultiresolutionFamily, maximal_net

BallId = tuple[int, int]  # (net level k, ball index j)


# ---------------------------------------------------------------------------
# cores
# ---------------------------------------------------------------------------

@dataclass
class Core:
    ball: BallId
    members: list[BallId]  # constituent c-dilated balls, own ball first


@dataclass
class CoreFamily:
    offset: int            # net levels k with (k - k0) % J == offset
    c: float
    J: int
    cores: dict[BallId, Core]

    def levels(self) -> list[int]:
        return sorted({k for k, _ in self.cores})


def _member_arrays(fam: MultiresolutionFamily, c: float, core: Core):
    centers = np.array([fam.level(k).points[j] for k, j in core.members])
    radii = np.array([c * fam.radius(k) for k, j in core.members])
    return centers, radii


def build_cores(fam: MultiresolutionFamily, c: float | None = None,
                J: int | None = None) -> list[CoreFamily]:
    """Cores for every family ball, grouped into J interleaved families."""
    J = fam.J if J is None else J
    if J < 10:
        raise ValueError("family step J must be at least 10")
    if c is None:
        c = 1.0 / (4.0 * fam.lambda2)
    if c > 1.0 / (4.0 * fam.lambda2) + 1e-12:
        raise ValueError("need c <= 1/(4 lambda2)")
    families = []
    for offset in range(J):
        cores: dict[BallId, Core] = {}
        for k in range(fam.k0 + offset, fam.k_max + 1, J):
            lv = fam.level(k)
            for j in range(len(lv.points)):
                cores[(k, j)] = _grow_core(fam, c, J, (k, j))
        families.append(CoreFamily(offset, c, J, cores))
    return families


def _grow_core(fam: MultiresolutionFamily, c: float, J: int,
               ball: BallId) -> Core:
    k0_ball = ball[0]
    members = [ball]
    centers = [fam.level(k0_ball).points[ball[1]]]
    radii = [c * fam.radius(k0_ball)]
    level = k0_ball + J
    while level <= fam.k_max:
        pts = fam.level(level).points
        r_new = c * fam.radius(level)
        tree = fam.centers_tree(level)
        hit: set[int] = set()
        for ctr, rad in zip(centers, radii):
            hit.update(tree.query_ball_point(ctr, rad + r_new + BALL_TOL))
        for j in sorted(hit):
            members.append((level, j))
            centers.append(pts[j])
            radii.append(r_new)
        level += J
    return Core(ball, members)


def core_diam(fam: MultiresolutionFamily, family: CoreFamily,
              ball: BallId) -> float:
    """Diameter of the union of constituent closed balls."""
    core = family.cores[ball]
    centers, radii = _member_arrays(fam, family.c, core)
    D = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=2)
    D = D + radii[:, None] + radii[None, :]
    return float(D.max())


def cores_gap(fam: MultiresolutionFamily, family: CoreFamily,
              a: BallId, b: BallId) -> float:
    ca, ra = _member_arrays(fam, family.c, family.cores[a])
    cb, rb = _member_arrays(fam, family.c, family.cores[b])
    D = np.linalg.norm(ca[:, None, :] - cb[None, :, :], axis=2)
    D = D - ra[:, None] - rb[None, :]
    return float(D.min())


def cores_intersect(fam: MultiresolutionFamily, family: CoreFamily,
                    a: BallId, b: BallId) -> bool:
    return cores_gap(fam, family, a, b) <= BALL_TOL


def verify_cores(fam: MultiresolutionFamily, family: CoreFamily) -> list[str]:
    """Diameter bounds, same-level disjointness with gap, and nesting."""
    problems = []
    c, J = family.c, family.J
    fringe = 2.0 * (1.0 + 4.0 * 2.0 ** (-J + 1)) * c
    for k in family.levels():
        ids = [b for b in family.cores if b[0] == k]
        base = fam.radius(k)
        for b in ids:
            d = core_diam(fam, family, b)
            if not (2.0 * c * base - 1e-12 <= d <= fringe * base + 1e-12):
                problems.append(f"core {b}: diameter {d:.4g} outside "
                                f"[{2 * c * base:.4g}, {fringe * base:.4g}]")
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                gap = cores_gap(fam, family, ids[i], ids[j])
                if gap < 2.0 ** (-k - 1) - 1e-12:
                    problems.append(f"cores {ids[i]},{ids[j]}: gap {gap:.4g} "
                                    f"below 2^-(k+1)")
        finer = [b for b in family.cores if b[0] > k]
        for b in ids:
            mem = set(family.cores[b].members)
            for fb in finer:
                if cores_intersect(fam, family, b, fb):
                    if not set(family.cores[fb].members) <= mem:
                        problems.append(f"core {fb} meets {b} but is not "
                                        f"nested inside it")
    return problems


# ---------------------------------------------------------------------------
# ball tree
# ---------------------------------------------------------------------------

@dataclass
class BallTree:
    fam: MultiresolutionFamily
    family: CoreFamily
    top: BallId
    parent: dict[BallId, BallId]
    children: dict[BallId, list[BallId]]

    @property
    def nodes(self) -> list[BallId]:
        out = {self.top}
        out.update(self.parent)
        return sorted(out)

    def depth(self, node: BallId) -> int:
        return (node[0] - self.top[0]) // self.family.J

    def max_depth(self) -> int:
        return max(self.depth(n) for n in self.nodes)

    def ball(self, node: BallId) -> Ball:
        return Ball(self.fam.level(node[0]).points[node[1]],
                    self.fam.radius(node[0]))

    def descendants(self, node: BallId) -> list[BallId]:
        out = []
        stack = [node]
        while stack:
            cur = stack.pop()
            for ch in self.children.get(cur, []):
                out.append(ch)
                stack.append(ch)
        return sorted(out)

    def branch_alive(self, node: BallId) -> bool:
        """True when some descendant (or the node itself) reaches the deepest
        generation present in the tree; stands in for an infinite branch."""
        deepest = self.max_depth()
        if self.depth(node) == deepest:
            return True
        return any(self.depth(d) == deepest for d in self.descendants(node))

    def pruned(self) -> "BallTree":
        keep = {n for n in self.nodes if self.branch_alive(n)}
        parent = {n: p for n, p in self.parent.items()
                  if n in keep and p in keep}
        children = {}
        for n, p in parent.items():
            children.setdefault(p, []).append(n)
        for p in children:
            children[p].sort()
        return BallTree(self.fam, self.family, self.top, parent, children)


def build_tree(fam: MultiresolutionFamily, family: CoreFamily,
               top: BallId) -> BallTree:
    """Parent/child links by core intersection at generation step J."""
    if top not in family.cores:
        raise ValueError(f"{top} has no core in this family")
    parent: dict[BallId, BallId] = {}
    children: dict[BallId, list[BallId]] = {}
    frontier = [top]
    while frontier:
        nxt = []
        for node in frontier:
            level = node[0] + family.J
            cand = [b for b in family.cores if b[0] == level]
            for b in cand:
                if b in parent:
                    continue
                if cores_intersect(fam, family, node, b):
                    parent[b] = node
                    children.setdefault(node, []).append(b)
                    nxt.append(b)
        frontier = nxt
    for node in children:
        children[node].sort()
    return BallTree(fam, family, top, parent, children)


def verify_tree(tree: BallTree) -> list[str]:
    """Parent uniqueness (by construction) and geometric child containment."""
    problems = []
    fam = tree.fam
    for node, par in tree.parent.items():
        child_ball = tree.ball(node)
        parent_ball = tree.ball(par)
        off = float(np.linalg.norm(child_ball.center - parent_ball.center))
        if off + child_ball.radius > parent_ball.radius + 1e-9:
            problems.append(f"child {node} pokes out of parent {par}")
    for node in tree.nodes:
        if node != tree.top and node not in tree.parent:
            problems.append(f"node {node} has no parent")
    return problems


def measure_doubling_on_tree(tree: BallTree, mu: DiscreteMeasure,
                             a: float) -> float:
    """D_T = max over tree balls of mu(B)/mu(aB); inf when some aB is empty."""
    worst = 1.0
    for node in tree.nodes:
        b = tree.ball(node)
        inner = ball_mass(mu, b.center, a * b.radius)
        outer = ball_mass(mu, b.center, b.radius)
        if outer <= 0:
            continue
        worst = max(worst, outer / inner if inner > 0 else math.inf)
    return worst


def measure_child_doubling(tree: BallTree, mu: DiscreteMeasure) -> float:
    """d_T = max over non-top balls of mu(parent)/mu(ball)."""
    worst = 1.0
    for node, par in tree.parent.items():
        num = ball_mass(mu, *_cb(tree, par))
        den = ball_mass(mu, *_cb(tree, node))
        if den > 0:
            worst = max(worst, num / den)
        elif num > 0:
            worst = math.inf
    return worst


def _cb(tree: BallTree, node: BallId):
    b = tree.ball(node)
    return b.center, b.radius


# ---------------------------------------------------------------------------
# localization
# ---------------------------------------------------------------------------

@dataclass
class GoodBadPartition:
    good: set
    bad: set
    N: float
    eps: float
    D_T: float
    E_atoms: np.ndarray
    E_prime_atoms: np.ndarray
    mu_E: float
    mu_E_prime: float
    good_sum: float
    bound: float               # N * D_T / eps
    warning: str | None = None


def normalized_sum(tree: BallTree, mu: DiscreteMeasure, b_values: dict,
                   atoms: np.ndarray | None = None) -> np.ndarray:
    """S(x) = sum over tree balls of b(B)/mu(B) chi_B(x) at each atom."""
    pts = mu.atoms if atoms is None else atoms
    out = np.zeros(len(pts))
    tree_pts = cKDTree(pts)
    for node in tree.nodes:
        ball = tree.ball(node)
        mass = ball_mass(mu, ball.center, ball.radius)
        val = b_values.get(node, 0.0)
        if val == 0.0:
            continue
        idx = tree_pts.query_ball_point(ball.center, ball.radius + BALL_TOL)
        out[idx] += val / mass if mass > 0 else math.inf
    return out


def good_bad(tree: BallTree, mu: DiscreteMeasure, b_values: dict,
             N: float, eps: float, a: float | None = None) -> GoodBadPartition:
    """Partition tree balls into good and bad for the payoff bound.

    A ball is bad when it, or any ancestor, holds too little of the level set
    E = {x in Top : S(x) <= N} relative to eps * mu(E) * mu(core).  Children
    of bad balls are bad by construction.
    """
    a = tree.family.c if a is None else a
    D_T = measure_doubling_on_tree(tree, mu, a)
    top_ball = tree.ball(tree.top)
    top_atoms = mu.indices_in_ball(top_ball.center, top_ball.radius)
    mu_top = float(mu.weights[top_atoms].sum())
    warning = None
    if eps * mu_top >= 1.0:
        warning = (f"eps*mu(Top) = {eps * mu_top:.3g} >= 1 makes the leaf "
                   f"mass bound vacuous; use eps < {1.0 / mu_top:.3g}")
    S = normalized_sum(tree, mu, b_values, mu.atoms[top_atoms])
    E_atoms = top_atoms[S <= N + 1e-12]
    mu_E = float(mu.weights[E_atoms].sum())
    nodes = tree.nodes
    if mu_E <= 0.0:
        bad = set(nodes)
        return GoodBadPartition(set(), bad, N, eps, D_T, E_atoms,
                                np.array([], dtype=int), 0.0, 0.0, 0.0,
                                N * D_T / eps, warning)
    e_tree = cKDTree(mu.atoms[E_atoms])
    bad_roots = set()
    for node in nodes:
        ball = tree.ball(node)
        idx = e_tree.query_ball_point(ball.center, ball.radius + BALL_TOL)
        mass_e = float(mu.weights[E_atoms[idx]].sum())
        core_mass = _core_mass(tree, mu, node)
        if mass_e <= eps * mu_E * core_mass + 1e-15:
            bad_roots.add(node)
    bad = set()
    for node in nodes:
        cur = node
        while True:
            if cur in bad_roots:
                bad.add(node)
                break
            if cur == tree.top or cur not in tree.parent:
                break
            cur = tree.parent[cur]
    good = {n for n in nodes if n not in bad}
    deepest = tree.max_depth()
    leaf_balls = [n for n in good if tree.depth(n) == deepest]
    covered = np.zeros(len(E_atoms), dtype=bool)
    for node in leaf_balls:
        ball = tree.ball(node)
        idx = e_tree.query_ball_point(ball.center, ball.radius + BALL_TOL)
        covered[idx] = True
    E_prime = E_atoms[covered]
    good_sum = float(sum(b_values.get(n, 0.0) for n in good))
    return GoodBadPartition(good, bad, N, eps, D_T, E_atoms, E_prime, mu_E,
                            float(mu.weights[E_prime].sum()), good_sum,
                            N * D_T / eps, warning)


def _core_mass(tree: BallTree, mu: DiscreteMeasure, node: BallId) -> float:
    core = tree.family.cores[node]
    centers, radii = _member_arrays(tree.fam, tree.family.c, core)
    hit: set[int] = set()
    for ctr, rad in zip(centers, radii):
        hit.update(mu.tree.query_ball_point(ctr, rad + BALL_TOL))
    idx = np.asarray(sorted(hit), dtype=int)
    return float(mu.weights[idx].sum()) if idx.size else 0.0


def verify_partition(tree: BallTree, part: GoodBadPartition) -> list[str]:
    problems = []
    for node in part.bad:
        for ch in tree.children.get(node, []):
            if ch not in part.bad:
                problems.append(f"child {ch} of bad ball {node} is good")
    if part.good and tree.top not in part.good:
        problems.append("good set nonempty but misses the top")
    for node in part.good:
        if node != tree.top and tree.parent.get(node) not in part.good:
            problems.append(f"good ball {node} has a non-good parent")
    if part.good_sum > part.bound + 1e-9:
        problems.append(f"good payoff sum {part.good_sum:.4g} exceeds "
                        f"N*D_T/eps = {part.bound:.4g}")
    return problems


# ---------------------------------------------------------------------------
# leaves-to-curve pipeline
# ---------------------------------------------------------------------------

@dataclass
class LeavesCurveResult:
    state: CurveState
    hierarchy: NetHierarchy
    d_T: float
    S2: float
    bound: float               # diam Top + d_T^(6+J) * S2
    h1_gamma: float
    leaf_distance: float       # max distance of deep ball mass centers to Gamma
    vertex_balls: dict


def leaves_curve(tree: BallTree, mu: DiscreteMeasure,
                 epsilon: float = 1.0 / 33.0,
                 prune: bool = True) -> LeavesCurveResult:
    """Draw a curve through the (approximate) leaves of a mass-doubling tree.

    Vertices are centers of mass of tree balls, thinned to maximal separated
    subsets scale by scale; each vertex inherits the best-fit line of twice
    its minimal covering ancestor, with the flatness number amplified by the
    measured mass-doubling ratio d_T.
    """
    fam = tree.fam
    J = tree.family.J
    if prune:
        tree = tree.pruned()
    d_T = measure_child_doubling(tree, mu)
    if not math.isfinite(d_T):
        raise ValueError("tree has balls with zero mass below massive parents")
    delta = 2.0 ** (-J)
    cstar = 5.0 * 2.0 ** J
    top_ball = tree.ball(tree.top)
    r0 = top_ball.diam
    depth = tree.max_depth()
    by_depth: dict[int, list[BallId]] = {}
    for node in tree.nodes:
        by_depth.setdefault(tree.depth(node), []).append(node)
    generations = []
    vertex_balls: dict[tuple[int, int], BallId] = {}
    for t in range(depth + 1):
        nodes = sorted(by_depth.get(t, []))
        centers = np.array([center_of_mass(mu, tree.ball(n)) for n in nodes])
        keep = maximal_net(centers, delta ** t * r0)
        generations.append(centers[keep])
        for row, sel in enumerate(keep):
            vertex_balls[(t, row)] = nodes[int(sel)]
    h = NetHierarchy(r0, delta, cstar, generations, x0=top_ball.center)
    amp = (4.0 * d_T) ** (6 + J)
    S2 = 0.0
    for node in tree.nodes:
        S2 += beta2(mu, tree.ball(node), dilation=2.0).value ** 2 \
            * tree.ball(node).diam
    annotations = []
    for t, pts in enumerate(generations):
        anns = []
        for i in range(len(pts)):
            node = vertex_balls[(t, i)]
            hat = _minimal_ancestor(tree, h, vertex_balls, t, i)
            hat_ball = tree.ball(hat)
            res = beta2(mu, hat_ball, dilation=2.0)
            line = res.line or best_fit_line(mu, hat_ball.dilate(2.0))
            alpha = amp * res.value * tree.ball(node).diam / h.scale(t)
            anns.append(VertexAnnotation(line, alpha, alpha < epsilon))
        annotations.append(anns)
    state = construct(h, annotations, epsilon)
    h1 = state.gamma_length()
    leaf_dist = _leaf_distance(tree, mu, state, by_depth.get(depth, []))
    return LeavesCurveResult(state, h, d_T, S2,
                             r0 + d_T ** (6 + J) * S2, h1, leaf_dist,
                             vertex_balls)


def _minimal_ancestor(tree: BallTree, h: NetHierarchy, vertex_balls: dict,
                      t: int, i: int) -> BallId:
    """Smallest ancestor ball covering the vertex ball and every nearby
    vertex ball of this and the previous generation."""
    node = vertex_balls[(t, i)]
    v = h.generations[t][i]
    reach = 66.0 * h.cstar * h.delta ** (t - 2) * h.r0
    targets = [node]
    for j in ([t - 1, t] if t >= 1 else [t]):
        pts = h.generations[j]
        near = np.where(np.linalg.norm(pts - v, axis=1) <= reach + BALL_TOL)[0]
        targets.extend(vertex_balls[(j, int(r))] for r in near)
    cur = node
    while True:
        ball = tree.ball(cur)
        if all(_ball_inside(tree.ball(tgt), ball) for tgt in targets):
            return cur
        if cur == tree.top or cur not in tree.parent:
            return cur
        cur = tree.parent[cur]


def _ball_inside(inner: Ball, outer: Ball) -> bool:
    off = float(np.linalg.norm(inner.center - outer.center))
    return off + inner.radius <= outer.radius + 1e-9


def _leaf_distance(tree: BallTree, mu: DiscreteMeasure, state: CurveState,
                   deep_nodes) -> float:
    from .curve import _point_segment_distance
    h = state.hierarchy
    segs = [(h.point(a), h.point(b)) for a, b in state.gamma_segments()]
    last_tree = cKDTree(h.generations[-1])
    worst = 0.0
    for node in deep_nodes:
        z = center_of_mass(mu, tree.ball(node))
        best = float(last_tree.query(z)[0])
        if segs:
            best = min(best, min(_point_segment_distance(z, a, b)
                                 for a, b in segs))
        worst = max(worst, best)
    return worst


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def tree_payload(tree: BallTree, part: GoodBadPartition | None = None) -> dict:
    payload = {
        "top": list(tree.top),
        "J": tree.family.J,
        "c": tree.family.c,
        "nodes": [list(n) for n in tree.nodes],
        "parent": {f"{k[0]},{k[1]}": list(v) for k, v in
                   sorted(tree.parent.items())},
        "cores": {f"{k[0]},{k[1]}": [list(m) for m in core.members]
                  for k, core in sorted(tree.family.cores.items())
                  if k in set(tree.nodes)},
    }
    if part is not None:
        payload["good"] = sorted(list(n) for n in part.good)
        payload["bad"] = sorted(list(n) for n in part.bad)
        payload["good_sum"] = part.good_sum
        payload["bound"] = part.bound
    return payload


def save_tree(path, tree: BallTree, part: GoodBadPartition | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tree_payload(tree, part), fh, sort_keys=True)
