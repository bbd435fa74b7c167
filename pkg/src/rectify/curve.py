"""Rectifiable curve construction through multiscale vertex nets.

Input is a hierarchy of finite vertex sets V_0, V_1, ... with geometric
separation delta^k r0, successor/predecessor reach C* delta^k r0, and one
approximating line plus flatness number per vertex.  The construction walks
generations coarse to fine, connecting vertices by short edges where the
local cloud is flat and by frozen bridges (segment plus nearest-successor
extension chains) where it is not, while a phantom-length ledger keeps the
per-generation length bookkeeping consistent.

All tie-breaks (closest vertex, component representative, cycle removal) go
to the lowest vertex index so the output is reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import (Line, as_point, as_points, diameter,
                       hausdorff_distance)
from .beta import line_fit_points
from .measures import BALL_TOL
from .nets import maximal_net

EPS_DEFAULT = 1.0 / 33.0  # must stay below 1/32

Vid = tuple[int, int]  # (generation, index within generation)


# ---------------------------------------------------------------------------
# hierarchy
# ---------------------------------------------------------------------------

@dataclass
class NetHierarchy:
    r0: float
    delta: float
    cstar: float
    generations: list[np.ndarray]
    x0: np.ndarray | None = None

    def __post_init__(self):
        if not (0.0 < self.delta <= 0.5):
            raise ValueError("delta must lie in (0, 1/2]")
        if self.cstar <= 1.0:
            raise ValueError("C* must exceed 1")
        if self.r0 <= 0.0:
            raise ValueError("r0 must be positive")
        self.generations = [as_points(g) for g in self.generations]
        if any(len(g) == 0 for g in self.generations):
            raise ValueError("every generation must be nonempty")
        if self.x0 is None:
            self.x0 = self.generations[0][0].copy()
        self.x0 = as_point(self.x0)

    @property
    def n_gens(self) -> int:
        return len(self.generations)

    @property
    def dim(self) -> int:
        return self.generations[0].shape[1]

    def point(self, vid: Vid) -> np.ndarray:
        return self.generations[vid[0]][vid[1]]

    def scale(self, k: int) -> float:
        return self.delta ** k * self.r0

    def tree(self, k: int) -> cKDTree:
        key = ("_tree", k)
        t = self.__dict__.get(key)
        if t is None:
            t = cKDTree(self.generations[k])
            self.__dict__[key] = t
        return t


def fit_cstar(generations, delta: float, r0: float, x0=None) -> float:
    """Smallest C* (rounded up to one decimal) satisfying the successor,
    predecessor and containment requirements on the given generations."""
    gens = [as_points(g) for g in generations]
    x0 = as_point(x0) if x0 is not None else gens[0][0]
    need = 1.0
    for k, cur in enumerate(gens):
        scale = delta ** k * r0
        if k + 1 < len(gens):
            nxt = cKDTree(gens[k + 1])
            need = max(need, float(nxt.query(cur)[0].max()) / scale)
        if k >= 1:
            prv = cKDTree(gens[k - 1])
            need = max(need, float(prv.query(cur)[0].max()) / scale)
        need = max(need, float(np.linalg.norm(cur - x0, axis=1).max()) / r0)
    return math.ceil(need * 10.0 + 1e-9) / 10.0 + 0.1


def hierarchy_from_points(points, delta: float = 0.5, n_gens: int = 8,
                          r0: float | None = None, cstar: float | None = None
                          ) -> NetHierarchy:
    """Nested maximal delta^k r0 nets over a point cloud.

    Nested nets satisfy the separation requirement by construction and give
    successors at distance zero, so C* is governed by the predecessor reach.
    """
    pts = as_points(points)
    if r0 is None:
        r0 = diameter(pts) or 1.0
    gens = []
    prev = None
    for k in range(n_gens + 1):
        idx = maximal_net(pts, delta ** k * r0, seed_indices=prev)
        gens.append(pts[idx])
        prev = idx
    if cstar is None:
        cstar = fit_cstar(gens, delta, r0)
    return NetHierarchy(r0, delta, cstar, gens)


def validate_hierarchy(h: NetHierarchy) -> list[str]:
    """Exhaustive (V1)(V2)(V3) and containment checks; empty list means valid."""
    problems = []
    for k, pts in enumerate(h.generations):
        scale = h.scale(k)
        if len(pts) > 1:
            tree = h.tree(k)
            d, _ = tree.query(pts, k=2)
            bad = np.where(d[:, 1] < scale - 1e-9 * max(1.0, scale))[0]
            for i in bad:
                problems.append(f"(V1) generation {k}: vertices closer than "
                                f"delta^k r0 near index {int(i)}")
        reach = h.cstar * scale
        if k + 1 < h.n_gens:
            d = h.tree(k + 1).query(pts)[0]
            for i in np.where(d >= reach)[0]:
                problems.append(f"(V2) generation {k} vertex {int(i)}: no "
                                f"successor within C* delta^k r0")
        if k >= 1:
            d = h.tree(k - 1).query(pts)[0]
            for i in np.where(d >= reach)[0]:
                problems.append(f"(V3) generation {k} vertex {int(i)}: no "
                                f"predecessor within C* delta^k r0")
        far = np.linalg.norm(pts - h.x0, axis=1) > h.cstar * h.r0 + 1e-9
        for i in np.where(far)[0]:
            problems.append(f"generation {k} vertex {int(i)} escapes "
                            f"B(x0, C* r0)")
    return problems


# ---------------------------------------------------------------------------
# annotations
# ---------------------------------------------------------------------------

@dataclass
class VertexAnnotation:
    line: Line
    alpha: float
    flat: bool


def annotate(h: NetHierarchy, epsilon: float = EPS_DEFAULT
             ) -> list[list[VertexAnnotation]]:
    """Per-vertex best-fit line over the two-generation window and the
    flatness number alpha = sup distance / (delta^k r0)."""
    if not (0.0 < epsilon < 1.0 / 32.0):
        raise ValueError("epsilon must lie in (0, 1/32)")
    out = []
    for k, pts in enumerate(h.generations):
        radius = 66.0 * h.cstar * h.delta ** (k - 2) * h.r0
        pool = pts if k == 0 else np.vstack([h.generations[k - 1], pts])
        pool_tree = cKDTree(pool)
        anns = []
        for i, v in enumerate(pts):
            idx = pool_tree.query_ball_point(v, radius + BALL_TOL)
            window = pool[sorted(idx)]
            if len(window) == 1:
                e1 = np.zeros(h.dim)
                e1[0] = 1.0
                line = Line(v, e1)
                alpha = 0.0
            else:
                line = line_fit_points(window)
                W = window - line.anchor
                T = W @ line.direction
                dists = np.linalg.norm(W - np.outer(T, line.direction), axis=1)
                alpha = float(dists.max()) / h.scale(k)
            anns.append(VertexAnnotation(line, alpha, alpha < epsilon))
        out.append(anns)
    return out


# ---------------------------------------------------------------------------
# curve state
# ---------------------------------------------------------------------------

@dataclass
class Bridge:
    stage: int
    kind: str                  # "flat" | "nonflat"
    a: Vid
    b: Vid
    chain_a: tuple[Vid, ...]   # starts at a, one vertex per finer generation
    chain_b: tuple[Vid, ...]

    def index_pairs(self) -> list[Vid]:
        """Extension index set: chain vertices strictly finer than the stage."""
        return list(self.chain_a[1:]) + list(self.chain_b[1:])

    def segments(self, h: NetHierarchy) -> list[tuple[Vid, Vid]]:
        segs = [(self.a, self.b)]
        for chain in (self.chain_a, self.chain_b):
            segs.extend(zip(chain[:-1], chain[1:]))
        return segs

    def length(self, h: NetHierarchy) -> float:
        return sum(float(np.linalg.norm(h.point(p) - h.point(q)))
                   for p, q in self.segments(h))


@dataclass
class CurveState:
    hierarchy: NetHierarchy
    epsilon: float
    annotations: list[list[VertexAnnotation]]
    k0: int
    edges: dict[int, set]                  # stage -> set of (vid, vid)
    bridges_flat: dict[int, list]
    bridges_nonflat: dict[int, list]
    phantom: dict[int, set]                # stage -> set of vids
    singleton: Vid | None = None

    @property
    def last_stage(self) -> int:
        return self.hierarchy.n_gens - 1

    def bridges_at(self, k: int) -> list[Bridge]:
        return self.bridges_flat.get(k, []) + self.bridges_nonflat.get(k, [])

    def frozen_bridges(self, k: int) -> list[Bridge]:
        out = []
        for j in range(self.k0, k + 1):
            out.extend(self.bridges_at(j))
        return out

    def gamma_segments(self, k: int | None = None) -> list[tuple[Vid, Vid]]:
        """Segments of Gamma_k: stage-k edges plus every frozen bridge."""
        if k is None:
            k = self.last_stage
        segs = [tuple(e) for e in sorted(self.edges.get(k, set()))]
        for br in self.frozen_bridges(k):
            segs.extend(br.segments(self.hierarchy))
        return segs

    def gamma_length(self, k: int | None = None) -> float:
        h = self.hierarchy
        if self.singleton is not None:
            return 0.0
        if k is None:
            k = self.last_stage
        total = sum(float(np.linalg.norm(h.point(a) - h.point(b)))
                    for a, b in sorted(self.edges.get(k, set())))
        total += sum(br.length(h) for br in self.frozen_bridges(k))
        return total


def _canon(a: Vid, b: Vid) -> tuple[Vid, Vid]:
    return (a, b) if a <= b else (b, a)


class _Builder:
    """One construction pass over a hierarchy; see construct()."""

    def __init__(self, h: NetHierarchy, anns, epsilon: float):
        self.h = h
        self.anns = anns
        self.eps = epsilon
        self.edges: dict[int, set] = {}
        self.bflat: dict[int, list] = {}
        self.bnon: dict[int, list] = {}
        self.phantom: dict[int, set] = {}
        self._chain_cache: dict[Vid, tuple[Vid, ...]] = {}

    # -- geometric helpers ------------------------------------------------

    def pt(self, vid: Vid) -> np.ndarray:
        return self.h.point(vid)

    def flat(self, vid: Vid) -> bool:
        return self.anns[vid[0]][vid[1]].flat

    def line(self, vid: Vid) -> Line:
        return self.anns[vid[0]][vid[1]].line

    def window(self, gen: int, center: np.ndarray, radius: float) -> list[int]:
        idx = self.h.tree(gen).query_ball_point(center, radius + BALL_TOL)
        return sorted(int(i) for i in idx)

    def ordered(self, gen: int, members: list[int], line: Line) -> list[int]:
        pts = self.h.generations[gen][members]
        t = (pts - line.anchor) @ line.direction
        order = np.argsort(t, kind="stable")
        return [members[i] for i in order]

    def closest(self, gen: int, point: np.ndarray) -> int:
        d = np.linalg.norm(self.h.generations[gen] - point, axis=1)
        return int(np.argmin(d))

    def extension(self, vid: Vid) -> tuple[Vid, ...]:
        """Nearest-successor chain from vid down to the finest generation."""
        cached = self._chain_cache.get(vid)
        if cached is not None:
            return cached
        chain = [vid]
        g, i = vid
        cur = self.pt(vid)
        for nxt_gen in range(g + 1, self.h.n_gens):
            j = self.closest(nxt_gen, cur)
            chain.append((nxt_gen, j))
            cur = self.pt((nxt_gen, j))
        chain = tuple(chain)
        self._chain_cache[vid] = chain
        return chain

    def make_bridge(self, stage: int, a: Vid, b: Vid, kind: str) -> Bridge:
        return Bridge(stage, kind, a, b, self.extension(a), self.extension(b))

    # -- stage construction ------------------------------------------------

    def base_stage(self, k0: int) -> None:
        gen = self.h.generations[k0]
        members = list(range(len(gen)))
        line = None
        flat_ids = [i for i in members if self.flat((k0, i))]
        if flat_ids:
            line = self.line((k0, flat_ids[0]))
        elif k0 + 1 < self.h.n_gens:
            # a coarse vertex that is semi-flat with respect to the next
            # generation provides an ordering line
            reach = 32.0 * self.h.cstar * self.h.scale(k0)
            for i in members:
                cand = self.window(k0 + 1, gen[i], reach)
                cand = [c for c in cand if self.flat((k0 + 1, c))]
                if cand:
                    j = min(cand, key=lambda c: (np.linalg.norm(
                        self.pt((k0 + 1, c)) - gen[i]), c))
                    line = self.line((k0 + 1, j))
                    break
        order = self.ordered(k0, members, line) if line is not None else members
        es = self.edges.setdefault(k0, set())
        for a, b in zip(order[:-1], order[1:]):
            es.add(_canon((k0, a), (k0, b)))
        self.phantom[k0] = {(k0, i) for i in members}

    def flat_stage(self, k: int):
        """Case F for every flat vertex; returns terminal bookkeeping."""
        h = self.h
        gen = h.generations[k]
        edge_gap = 30.0 * h.cstar * h.delta ** (k - 1) * h.r0
        big = 66.0 * h.cstar * h.delta ** (k - 2) * h.r0
        mid = 33.0 * h.cstar * h.delta ** (k - 2) * h.r0
        small = h.cstar * h.delta ** (k - 2) * h.r0
        es = self.edges.setdefault(k, set())
        new_phantom: set[Vid] = set()
        for i in range(len(gen)):
            vid = (k, i)
            if not self.flat(vid):
                continue
            v = gen[i]
            line = self.line(vid)
            members = self.ordered(k, self.window(k, v, big), line)
            pos = members.index(i)
            pts_w = gen[members]
            gaps = np.linalg.norm(np.diff(pts_w, axis=0), axis=1)
            from_v = np.linalg.norm(pts_w - v, axis=1)
            for direction in (+1, -1):
                count = 0
                cur = pos
                while True:
                    nxt = cur + direction
                    if nxt < 0 or nxt >= len(members):
                        break
                    if gaps[min(cur, nxt)] >= edge_gap:
                        break
                    if from_v[nxt] > edge_gap + BALL_TOL:
                        break
                    es.add(_canon((k, members[cur]), (k, members[nxt])))
                    count += 1
                    cur = nxt
                if count > 0:
                    continue  # Case F-NT on this side
                case, v1 = self._terminal_case(k, vid, line, direction,
                                               mid, small)
                if case == "T1":
                    new_phantom.add(vid)
                else:
                    pair = _canon(vid, v1)
                    if not any(_canon(b.a, b.b) == pair
                               for b in self.bflat.get(k, [])):
                        br = self.make_bridge(k, vid, v1, "flat")
                        self.bflat.setdefault(k, []).append(br)
                    new_phantom.add(vid)
                    br = next(b for b in self.bflat[k]
                              if _canon(b.a, b.b) == pair)
                    new_phantom.update(br.index_pairs())
        return new_phantom

    def _terminal_case(self, k: int, vid: Vid, line: Line, direction: int,
                       mid: float, small: float):
        """Distinguish Case F-T1 from F-T2 on one side of a terminal vertex."""
        h = self.h
        v = self.pt(vid)
        w_idx = self.closest(k - 1, v)
        coarse = self.ordered(k - 1, self.window(k - 1, v, mid), line)
        if w_idx not in coarse:
            return "T1", None
        wpos = coarse.index(w_idx)
        onward = coarse[wpos:] if direction > 0 else coarse[wpos::-1]
        prev_pts = h.generations[k - 1]
        in_small = [j for j, c in enumerate(onward)
                    if np.linalg.norm(prev_pts[c] - v) <= small + BALL_TOL]
        if not in_small:
            return "T1", None
        r = max(in_small)
        if r == len(onward) - 1:
            return "T1", None
        w_r, w_r1 = onward[r], onward[r + 1]
        if np.linalg.norm(prev_pts[w_r1] - prev_pts[w_r]) >= \
                30.0 * h.cstar * h.delta ** (k - 2) * h.r0:
            return "T1", None
        # F-T2: the next same-generation vertex exists and is bridged to.
        gen = h.generations[k]
        big = 66.0 * h.cstar * h.delta ** (k - 2) * h.r0
        members = self.ordered(k, self.window(k, v, big), line)
        pos = members.index(vid[1])
        nxt = pos + direction
        if nxt < 0 or nxt >= len(members):
            return "T1", None
        return "T2", (k, members[nxt])

    def semiflat_edges(self, k: int) -> set:
        """Edges of S_k between previous-generation vertices near semi-flat
        vertices, ordered along the adjacent flat vertex's line."""
        h = self.h
        prev = h.generations[k - 1]
        gen = h.generations[k]
        reach = 32.0 * h.cstar * h.delta ** (k - 1) * h.r0
        mid = 33.0 * h.cstar * h.delta ** (k - 2) * h.r0
        stop_gap = 30.0 * h.cstar * h.delta ** (k - 2) * h.r0
        flat_ids = [i for i in range(len(gen)) if self.flat((k, i))]
        if not flat_ids:
            return set()
        flat_tree = cKDTree(gen[flat_ids])
        s_k: set = set()
        for y_idx in range(len(prev)):
            if self.flat((k - 1, y_idx)):
                continue
            y = prev[y_idx]
            near = flat_tree.query_ball_point(y, reach + BALL_TOL)
            if not near:
                continue
            pick = min(near, key=lambda t: (np.linalg.norm(
                gen[flat_ids[t]] - y), flat_ids[t]))
            line = self.line((k, flat_ids[pick]))
            coarse = self.ordered(k - 1, self.window(k - 1, y, mid), line)
            ypos = coarse.index(y_idx)
            for direction in (+1, -1):
                cur = ypos
                while True:
                    nxt = cur + direction
                    if nxt < 0 or nxt >= len(coarse):
                        break
                    a, b = coarse[cur], coarse[nxt]
                    if np.linalg.norm(prev[b] - prev[a]) >= stop_gap:
                        break
                    s_k.add(_canon((k - 1, a), (k - 1, b)))
                    cur = nxt
        return s_k

    def nonflat_stage(self, k: int, s_k: set) -> set:
        """Case N: stitch local components around non-flat vertices."""
        h = self.h
        gen = h.generations[k]
        mid = 33.0 * h.cstar * h.delta ** (k - 2) * h.r0
        edge_gap = 30.0 * h.cstar * h.delta ** (k - 1) * h.r0
        nonflat = [i for i in range(len(gen)) if not self.flat((k, i))]
        new_phantom: set[Vid] = {(k, i) for i in nonflat}
        if not nonflat:
            return set()
        flat_edges = set(self.edges.get(k, set()))
        flat_bridge_pairs = {_canon(b.a, b.b) for b in self.bflat.get(k, [])}
        candidate_edges = sorted(flat_edges | s_k | flat_bridge_pairs)
        keep_local: set = set()
        stitch: set = set()
        for i in nonflat:
            v = gen[i]
            local_edges = [e for e in candidate_edges
                           if np.linalg.norm(self.pt(e[0]) - v) <= mid + BALL_TOL
                           or np.linalg.norm(self.pt(e[1]) - v) <= mid + BALL_TOL]
            verts = {(k, j) for j in self.window(k, v, mid)}
            for a, b in local_edges:
                verts.add(a)
                verts.add(b)
            keep_local.update(local_edges)
            comp = _components(verts, local_edges)
            if len(comp) <= 1:
                continue
            reps = []
            for nodes in comp:
                nf = sorted(n for n in nodes if n[0] == k and n[1] in set(nonflat))
                reps.append(nf[0] if nf else min(nodes))
            reps.sort()
            for a, b in zip(reps[:-1], reps[1:]):
                stitch.add(_canon(a, b))
        stitch_kept = _spanning_subset(stitch)
        es = self.edges.setdefault(k, set())
        already = flat_edges | flat_bridge_pairs
        for pair in sorted((keep_local | stitch_kept) - already):
            a, b = pair
            if np.linalg.norm(self.pt(a) - self.pt(b)) < edge_gap:
                es.add(pair)
            else:
                br = self.make_bridge(k, a, b, "nonflat")
                self.bnon.setdefault(k, []).append(br)
                new_phantom.update(br.index_pairs())
        return new_phantom

    def update_phantom(self, k: int, new_pairs: set) -> None:
        prev = self.phantom.get(k - 1, set())
        kept = {p for p in prev if p[0] not in (k - 1, k)}
        self.phantom[k] = kept | new_pairs


def _components(vertices: set, edges) -> list[set]:
    parent = {v: v for v in vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups: dict = {}
    for v in vertices:
        groups.setdefault(find(v), set()).add(v)
    return sorted(groups.values(), key=lambda s: min(s))


def _spanning_subset(edges: set) -> set:
    """Deterministic cycle removal: keep a spanning forest of the edge set,
    inserting edges in sorted order."""
    parent: dict = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    kept = set()
    for a, b in sorted(edges):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            kept.add((a, b))
    return kept


def construct(h: NetHierarchy, annotations=None,
              epsilon: float = EPS_DEFAULT) -> CurveState:
    """Run the full construction over every generation of the hierarchy."""
    if annotations is None:
        annotations = annotate(h, epsilon)
    if len(annotations) != h.n_gens or any(
            len(a) != len(g) for a, g in zip(annotations, h.generations)):
        raise ValueError("annotations do not match the hierarchy")
    # first generation from which every later generation has >= 2 vertices
    k0 = None
    for k in range(h.n_gens):
        if all(len(h.generations[j]) >= 2 for j in range(k, h.n_gens)):
            k0 = k
            break
    if k0 is None:
        last = h.n_gens - 1
        state = CurveState(h, epsilon, annotations, last, {}, {}, {}, {},
                           singleton=(last, 0))
        state.phantom[last] = {(last, 0)}
        return state
    builder = _Builder(h, annotations, epsilon)
    builder.base_stage(k0)
    for k in range(k0 + 1, h.n_gens):
        new_phantom = builder.flat_stage(k)
        s_k = builder.semiflat_edges(k)
        new_phantom |= builder.nonflat_stage(k, s_k)
        builder.update_phantom(k, new_phantom)
    return CurveState(h, epsilon, annotations, k0, builder.edges,
                      builder.bflat, builder.bnon, builder.phantom)


# ---------------------------------------------------------------------------
# verification and accounting
# ---------------------------------------------------------------------------

def connectedness(state: CurveState, k: int | None = None):
    """Graph connectivity of Gamma_k; returns (connected, components)."""
    if state.singleton is not None:
        return True, [{state.singleton}]
    h = state.hierarchy
    if k is None:
        k = state.last_stage
    segs = state.gamma_segments(k)
    nodes = {(k, i) for i in range(len(h.generations[k]))}
    for a, b in segs:
        nodes.add(a)
        nodes.add(b)
    comps = _components(nodes, segs)
    gen_nodes = {(k, i) for i in range(len(h.generations[k]))}
    hit = [c for c in comps if c & gen_nodes]
    return len(hit) == 1, comps


@dataclass
class StageLedger:
    k: int
    n_vertices: int
    n_flat: int
    edge_length: float
    new_bridge_length: float
    phantom_length: float
    alpha_sq_sum: float


@dataclass
class LengthLedger:
    stages: list[StageLedger]
    r0: float
    alpha_bound: float       # r0 + sum_k sum_v alpha^2 delta^k r0
    h1_gamma: float
    ratio: float
    n_bridges: int
    extension_truncation_error: float

    def stage(self, k: int) -> StageLedger:
        return next(s for s in self.stages if s.k == k)


def length_accounting(state: CurveState) -> LengthLedger:
    h = state.hierarchy
    stages = []
    alpha_total = 0.0
    n_bridges = 0
    for k in range(state.k0, h.n_gens):
        scale = h.scale(k)
        edge_len = sum(float(np.linalg.norm(h.point(a) - h.point(b)))
                       for a, b in sorted(state.edges.get(k, set())))
        new_b = state.bridges_at(k)
        n_bridges += len(new_b)
        bridge_len = sum(b.length(h) for b in new_b)
        ph = sum(3.0 * h.cstar * h.delta ** (j - 1) * h.r0
                 for j, _ in sorted(state.phantom.get(k, set())))
        alphas = np.array([a.alpha for a in state.annotations[k]])
        a2 = float(np.sum(alphas ** 2) * scale) if k >= 1 else 0.0
        alpha_total += a2
        stages.append(StageLedger(k, len(h.generations[k]),
                                  sum(a.flat for a in state.annotations[k]),
                                  edge_len, bridge_len, ph, a2))
    bound = h.r0 + alpha_total
    h1 = state.gamma_length()
    trunc = 2.0 * h.cstar * h.scale(h.n_gens - 1) * n_bridges * 2
    return LengthLedger(stages, h.r0, bound, h1,
                        h1 / bound if bound > 0 else math.inf,
                        n_bridges, trunc)


def bridge_cores(state: CurveState, k: int):
    """Concentric 9/10 subsegments of the flat bridges created at stage k."""
    h = state.hierarchy
    cores = []
    for br in state.bridges_flat.get(k, []):
        p, q = h.point(br.a), h.point(br.b)
        mid = 0.5 * (p + q)
        half = 0.45 * (q - p)  # 9/10 of the segment, concentric
        cores.append((mid - half, mid + half))
    return cores


def _segment_distance(p1, q1, p2, q2) -> float:
    """Distance between two closed segments in R^d (projected grid search
    refined by convexity of the distance)."""
    t = np.linspace(0.0, 1.0, 33)
    A = p1[None, :] + t[:, None] * (q1 - p1)[None, :]
    best = math.inf
    for a in A:
        w = q2 - p2
        denom = float(w @ w)
        s = 0.0 if denom == 0 else float(np.clip((a - p2) @ w / denom, 0, 1))
        best = min(best, float(np.linalg.norm(a - (p2 + s * w))))
    return best


def verify_state(state: CurveState) -> list[str]:
    """Structural invariants: bridge freezing is by construction, so this
    checks edge/bridge length rules, extension lengths, phantom bookkeeping
    and core disjointness."""
    problems = []
    if state.singleton is not None:
        return problems
    h = state.hierarchy
    tol = 1e-9 * max(1.0, h.r0)
    for k in range(state.k0, h.n_gens):
        lo = 30.0 * h.cstar * h.delta ** (k - 1) * h.r0
        hi = 66.0 * h.cstar * h.delta ** (k - 2) * h.r0
        if k > state.k0:
            for a, b in state.edges.get(k, set()):
                if np.linalg.norm(h.point(a) - h.point(b)) >= lo + tol:
                    problems.append(f"stage {k}: edge {a}-{b} too long")
        for br in state.bridges_at(k):
            gap = float(np.linalg.norm(h.point(br.a) - h.point(br.b)))
            if gap < lo - tol or gap > hi + tol:
                problems.append(f"stage {k}: bridge {br.a}-{br.b} gap {gap:.4g}"
                                f" outside [{lo:.4g}, {hi:.4g}]")
            for chain in (br.chain_a, br.chain_b):
                length = sum(float(np.linalg.norm(h.point(p) - h.point(q)))
                             for p, q in zip(chain[:-1], chain[1:]))
                cap = 2.0 * h.cstar * h.scale(chain[0][0])
                if length > cap + tol:
                    problems.append(f"stage {k}: extension from {chain[0]} has"
                                    f" length {length:.4g} > {cap:.4g}")
            if br.length(h) > (32.0 / 30.0) * gap + tol:
                problems.append(f"stage {k}: bridge {br.a}-{br.b} exceeds "
                                f"32/30 of its segment")
        cores = bridge_cores(state, k)
        for i in range(len(cores)):
            for j in range(i + 1, len(cores)):
                d = _segment_distance(*cores[i], *cores[j])
                if d <= tol:
                    problems.append(f"stage {k}: flat bridge cores {i},{j} "
                                    f"intersect")
        problems.extend(_check_phantom_stage(state, k))
    return problems


def _check_phantom_stage(state: CurveState, k: int) -> list[str]:
    problems = []
    h = state.hierarchy
    ph = state.phantom.get(k, set())
    # Bridge property: index pairs finer than k of every frozen bridge remain.
    for br in state.frozen_bridges(k):
        missing = [p for p in br.index_pairs() if p[0] > k and p not in ph]
        if missing:
            problems.append(f"stage {k}: bridge {br.a}-{br.b} phantom pairs "
                            f"{missing[:3]} missing")
    # Terminal vertex property: extremal vertices of locally flat windows
    # (and every non-flat vertex) must carry phantom length.
    small = 30.0 * h.cstar * h.delta ** (k - 1) * h.r0
    gen = h.generations[k]
    for i in range(len(gen)):
        vid = (k, i)
        ann = state.annotations[k][i]
        if not ann.flat:
            if vid not in ph:
                problems.append(f"stage {k}: non-flat vertex {vid} lacks "
                                f"phantom length")
            continue
        idx = h.tree(k).query_ball_point(gen[i], small + BALL_TOL)
        members = sorted(int(m) for m in idx)
        pts = gen[members]
        t = (pts - ann.line.anchor) @ ann.line.direction
        order = [members[m] for m in np.argsort(t, kind="stable")]
        if (order[0] == i or order[-1] == i) and vid not in ph:
            problems.append(f"stage {k}: terminal vertex {vid} lacks phantom "
                            f"length")
    return problems


def hausdorff_profile(h: NetHierarchy) -> list[tuple[int, float, float]]:
    """(k, HD(V_k, V_last), allowance 3 C* delta^k r0) per generation."""
    last = h.generations[-1]
    out = []
    for k, pts in enumerate(h.generations):
        out.append((k, hausdorff_distance(pts, last),
                    3.0 * h.cstar * h.scale(k)))
    return out


def vertex_distances_to_gamma(state: CurveState) -> float:
    """Largest distance from any hierarchy vertex to the final curve.

    The final curve consists of the last-stage segments, the frozen bridges
    and the last-generation vertices themselves (isolated vertices are
    singleton pieces of the curve).
    """
    h = state.hierarchy
    if state.singleton is not None:
        return 0.0
    segs = state.gamma_segments()
    seg_pts = [(h.point(a), h.point(b)) for a, b in segs]
    last_tree = h.tree(h.n_gens - 1)
    worst = 0.0
    for pts in h.generations:
        for p in pts:
            best = float(last_tree.query(p)[0])
            if seg_pts:
                best = min(best, min(_point_segment_distance(p, a, b)
                                     for a, b in seg_pts))
            worst = max(worst, best)
    return worst


def _point_segment_distance(p, a, b) -> float:
    w = b - a
    denom = float(w @ w)
    t = 0.0 if denom == 0 else float(np.clip((p - a) @ w / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * w)))


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def save_hierarchy(path, h: NetHierarchy) -> None:
    payload = {
        "r0": h.r0,
        "delta": h.delta,
        "cstar": h.cstar,
        "x0": [float(x) for x in h.x0],
        "generations": [[[float(x) for x in p] for p in g]
                        for g in h.generations],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_hierarchy(path) -> NetHierarchy:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return NetHierarchy(float(data["r0"]), float(data["delta"]),
                        float(data["cstar"]),
                        [as_points(g) for g in data["generations"]],
                        x0=np.asarray(data["x0"], dtype=float))


def state_payload(state: CurveState) -> dict:
    """JSON-ready description of the final curve and its ledgers."""
    h = state.hierarchy
    ledger = length_accounting(state)
    payload = {
        "params": {"r0": h.r0, "delta": h.delta, "cstar": h.cstar,
                   "epsilon": state.epsilon, "k0": state.k0},
        "singleton": list(state.singleton) if state.singleton else None,
        "edges": {str(k): sorted([list(a), list(b)]
                                 for a, b in state.edges.get(k, set()))
                  for k in sorted(state.edges)},
        "bridges": [
            {"stage": br.stage, "kind": br.kind, "a": list(br.a),
             "b": list(br.b),
             "chain_a": [list(v) for v in br.chain_a],
             "chain_b": [list(v) for v in br.chain_b]}
            for k in range(state.k0, h.n_gens) for br in state.bridges_at(k)
        ],
        "phantom": {str(k): sorted(list(v) for v in state.phantom.get(k, set()))
                    for k in sorted(state.phantom)},
        "ledger": {
            "stages": [{"k": s.k, "vertices": s.n_vertices, "flat": s.n_flat,
                        "edge_length": s.edge_length,
                        "new_bridge_length": s.new_bridge_length,
                        "phantom_length": s.phantom_length,
                        "alpha_sq_sum": s.alpha_sq_sum}
                       for s in ledger.stages],
            "h1_gamma": ledger.h1_gamma,
            "alpha_bound": ledger.alpha_bound,
            "ratio": ledger.ratio,
            "n_bridges": ledger.n_bridges,
            "extension_truncation_error": ledger.extension_truncation_error,
        },
    }
    return payload


def save_state(path, state: CurveState) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(state_payload(state), fh, sort_keys=True)
