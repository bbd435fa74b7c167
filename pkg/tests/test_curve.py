import numpy as np
import pytest

from oracles import polyline_length
from rectify import curve, measures
from rectify.geometry import hausdorff_distance


@pytest.fixture(scope="module")
def segment_hierarchy():
    mu = measures.generate("segment", {"dim": 2}, n=600, seed=2)
    return curve.hierarchy_from_points(mu.atoms, delta=0.5, n_gens=8)


@pytest.fixture(scope="module")
def segment_state(segment_hierarchy):
    return curve.construct(segment_hierarchy)


def two_cluster_points():
    left = np.column_stack([np.linspace(0.0, 0.02, 25), np.zeros(25)])
    right = np.column_stack([np.linspace(0.98, 1.0, 25), np.zeros(25)])
    return np.vstack([left, right])


class TestValidateHierarchy:
    def test_segment_valid(self, segment_hierarchy):
        assert curve.validate_hierarchy(segment_hierarchy) == []

    def test_duplicate_vertex_v1(self, segment_hierarchy):
        h = segment_hierarchy
        gens = [g.copy() for g in h.generations]
        gens[3] = np.vstack([gens[3], gens[3][0]])
        bad = curve.NetHierarchy(h.r0, h.delta, h.cstar, gens, x0=h.x0)
        assert any("(V1)" in p for p in curve.validate_hierarchy(bad))

    def test_isolated_vertex_v2(self, segment_hierarchy):
        h = segment_hierarchy
        gens = [g.copy() for g in h.generations]
        gens[2] = np.vstack([gens[2], [[0.5, 50.0]]])
        bad = curve.NetHierarchy(h.r0, h.delta, h.cstar, gens, x0=h.x0)
        problems = curve.validate_hierarchy(bad)
        assert any("(V2)" in p for p in problems)
        assert any("(V3)" in p for p in problems)


class TestAnnotate:
    def test_collinear_all_flat(self, segment_hierarchy):
        anns = curve.annotate(segment_hierarchy)
        for gen in anns:
            for a in gen:
                assert a.alpha == pytest.approx(0.0, abs=1e-9)
                assert a.flat

    def test_epsilon_domain(self, segment_hierarchy):
        with pytest.raises(ValueError):
            curve.annotate(segment_hierarchy, epsilon=1.0 / 30.0)

    def test_right_angle_corner_not_flat(self):
        # an L shape resolved at fine scales: corner vertices see sup
        # distance comparable to the window size against any line
        leg = np.linspace(0.0, 1.0, 200)
        pts = np.vstack([np.column_stack([leg, np.zeros_like(leg)]),
                         np.column_stack([np.zeros_like(leg), leg])])
        h = curve.hierarchy_from_points(pts, delta=0.5, n_gens=8)
        anns = curve.annotate(h)
        k = h.n_gens - 1
        corner = min(range(len(h.generations[k])),
                     key=lambda i: np.linalg.norm(h.generations[k][i]))
        assert not anns[k][corner].flat

    def test_alpha_is_sup_distance(self, segment_hierarchy):
        h = segment_hierarchy
        anns = curve.annotate(h)
        k = 4
        for i in (0, len(h.generations[k]) - 1):
            ann = anns[k][i]
            radius = 66.0 * h.cstar * h.delta ** (k - 2) * h.r0
            pool = np.vstack([h.generations[k - 1], h.generations[k]])
            near = pool[np.linalg.norm(pool - h.generations[k][i], axis=1)
                        <= radius + 1e-12]
            from rectify.geometry import dist_points_line
            sup = float(dist_points_line(near, ann.line).max())
            assert ann.alpha == pytest.approx(sup / h.scale(k), abs=1e-12)


class TestConstruct:
    def test_segment_chain(self, segment_hierarchy, segment_state):
        state = segment_state
        led = curve.length_accounting(state)
        assert led.n_bridges == 0
        # the final stage edges trace the segment end to end
        assert led.h1_gamma == pytest.approx(segment_hierarchy.r0, abs=1e-9)
        ok, _ = curve.connectedness(state)
        assert ok
        assert curve.verify_state(state) == []

    def test_segment_matches_direct_polyline(self, segment_hierarchy,
                                             segment_state):
        h = segment_hierarchy
        last = h.generations[-1]
        order = np.argsort(last[:, 0])
        assert segment_state.gamma_length() == pytest.approx(
            polyline_length(last[order]), abs=1e-9)

    def test_singleton_hierarchy(self):
        gens = [np.array([[0.0, 0.0]]) for _ in range(5)]
        h = curve.NetHierarchy(1.0, 0.5, 2.0, gens)
        state = curve.construct(h)
        assert state.singleton == (4, 0)
        assert state.gamma_length() == 0.0
        ok, comps = curve.connectedness(state)
        assert ok

    def test_two_clusters_single_bridge(self):
        h = curve.hierarchy_from_points(two_cluster_points(), delta=0.5,
                                        n_gens=9)
        state = curve.construct(h)
        led = curve.length_accounting(state)
        assert led.n_bridges == 1
        (stage,) = [k for k in range(state.k0, h.n_gens)
                    if state.bridges_at(k)]
        gap = 30.0 * h.cstar * h.delta ** (stage - 1) * h.r0
        br = state.bridges_at(stage)[0]
        assert np.linalg.norm(h.point(br.a) - h.point(br.b)) >= gap - 1e-9
        ok, _ = curve.connectedness(state)
        assert ok
        assert curve.verify_state(state) == []

    def test_deleting_edge_disconnects(self, segment_state):
        state = segment_state
        last = state.last_stage
        edges = sorted(state.edges[last])
        victim = edges[len(edges) // 2]
        state.edges[last].discard(victim)
        try:
            ok, comps = curve.connectedness(state)
            assert not ok
            assert len([c for c in comps if len(c) > 1]) == 2
        finally:
            state.edges[last].add(victim)

    def test_bridges_frozen(self):
        h = curve.hierarchy_from_points(two_cluster_points(), delta=0.5,
                                        n_gens=9)
        state = curve.construct(h)
        for k in range(state.k0, h.n_gens):
            frozen = {(b.stage, b.a, b.b) for b in state.frozen_bridges(k)}
            for k2 in range(k, h.n_gens):
                later = {(b.stage, b.a, b.b)
                         for b in state.frozen_bridges(k2)}
                assert frozen <= later

    def test_connected_at_every_stage(self):
        rng = np.random.default_rng(8)
        knots = measures.lipschitz_zigzag(1.0, 4, rng)
        mu = measures.generate("lipschitz_graph", {"knots": knots, "L": 1.0},
                               n=250, seed=8)
        h = curve.hierarchy_from_points(mu.atoms, delta=0.5, n_gens=7)
        state = curve.construct(h)
        for k in range(state.k0, h.n_gens):
            ok, _ = curve.connectedness(state, k)
            assert ok, f"stage {k} disconnected"


class TestPhantomAndLengths:
    def test_phantom_values(self, segment_state):
        h = segment_state.hierarchy
        led = curve.length_accounting(segment_state)
        for s in led.stages:
            ph = segment_state.phantom.get(s.k, set())
            expect = sum(3.0 * h.cstar * h.delta ** (j - 1) * h.r0
                         for j, _ in ph)
            assert s.phantom_length == pytest.approx(expect)

    def test_segment_alpha_sum_zero(self, segment_state):
        led = curve.length_accounting(segment_state)
        assert sum(s.alpha_sq_sum for s in led.stages) == \
            pytest.approx(0.0, abs=1e-12)
        assert led.ratio == pytest.approx(1.0, abs=1e-6)

    def test_hausdorff_convergence(self, segment_hierarchy):
        for k, hd, allowance in curve.hausdorff_profile(segment_hierarchy):
            assert hd <= allowance + 1e-9

    def test_vertices_near_gamma(self, segment_state):
        h = segment_state.hierarchy
        assert curve.vertex_distances_to_gamma(segment_state) <= \
            2.0 * h.scale(h.n_gens - 1) + 1e-9

    def test_bridge_length_rule(self):
        h = curve.hierarchy_from_points(two_cluster_points(), delta=0.5,
                                        n_gens=9)
        state = curve.construct(h)
        for k in range(state.k0, h.n_gens):
            for br in state.bridges_at(k):
                gap = float(np.linalg.norm(h.point(br.a) - h.point(br.b)))
                assert br.length(h) <= (32.0 / 30.0) * gap + 1e-9


class TestStability:
    def test_ratio_bounded_across_seeds(self):
        ratios = []
        for seed in range(6):
            rng = np.random.default_rng(seed)
            knots = measures.lipschitz_zigzag(1.0, 4, rng)
            mu = measures.generate("lipschitz_graph",
                                   {"knots": knots, "L": 1.0},
                                   n=220, seed=seed)
            h = curve.hierarchy_from_points(mu.atoms, delta=0.5, n_gens=7)
            state = curve.construct(h)
            led = curve.length_accounting(state)
            assert np.isfinite(led.ratio)
            ratios.append(led.ratio)
        assert max(ratios) / min(ratios) <= 10.0


def test_hierarchy_json_roundtrip(tmp_path, segment_hierarchy):
    path = tmp_path / "h.json"
    curve.save_hierarchy(path, segment_hierarchy)
    back = curve.load_hierarchy(path)
    assert back.r0 == segment_hierarchy.r0
    assert back.cstar == segment_hierarchy.cstar
    for a, b in zip(back.generations, segment_hierarchy.generations):
        assert np.array_equal(a, b)


def test_state_payload_roundtrips_deterministically(tmp_path,
                                                    segment_state):
    p1 = tmp_path / "g1.json"
    p2 = tmp_path / "g2.json"
    curve.save_state(p1, segment_state)
    curve.save_state(p2, segment_state)
    assert p1.read_bytes() == p2.read_bytes()
