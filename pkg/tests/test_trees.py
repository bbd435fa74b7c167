import numpy as np
import pytest

from rectify import measures, nets, trees
from rectify.beta import beta2


@pytest.fixture(scope="module")
def seg_mu():
    return measures.generate("segment", {"dim": 2}, n=400, seed=5)


@pytest.fixture(scope="module")
def seg_fam(seg_mu):
    # coarse enough that the root core swallows the whole carrying set,
    # one full family step deep
    return nets.build_family(seg_mu, k0=-3, k_max=7, lambda2=1.1, J=10)


@pytest.fixture(scope="module")
def seg_cores(seg_fam):
    return trees.build_cores(seg_fam)[0]


@pytest.fixture(scope="module")
def seg_tree(seg_fam, seg_cores):
    return trees.build_tree(seg_fam, seg_cores, (-3, 0))


def payoff(tree, mu):
    return {n: beta2(mu, tree.ball(n), dilation=2.0).value ** 2
            * tree.ball(n).diam for n in tree.nodes}


class TestCores:
    def test_single_ball_core_is_own_dilate(self):
        mu = measures.DiscreteMeasure(np.array([[0.0, 0.0]]), np.array([1.0]))
        fam = nets.build_family(mu, k0=0, k_max=0)
        family = trees.build_cores(fam)[0]
        assert family.cores[(0, 0)].members == [(0, 0)]

    def test_distant_balls_disjoint_cores(self):
        atoms = np.array([[0.0, 0.0], [50.0, 0.0]])
        mu = measures.DiscreteMeasure(atoms, np.ones(2))
        fam = nets.build_family(mu, k0=0, k_max=0)
        family = trees.build_cores(fam)[0]
        ids = sorted(family.cores)
        assert trees.cores_gap(fam, family, ids[0], ids[1]) > 1.0

    def test_segment_family_properties(self, seg_fam, seg_cores):
        assert trees.verify_cores(seg_fam, seg_cores) == []

    def test_parameter_bounds(self, seg_fam):
        with pytest.raises(ValueError):
            trees.build_cores(seg_fam, c=1.0)
        with pytest.raises(ValueError):
            trees.build_cores(seg_fam, J=5)


class TestBallTree:
    def test_depth_zero_tree(self):
        mu = measures.DiscreteMeasure(np.array([[0.0, 0.0]]), np.array([1.0]))
        fam = nets.build_family(mu, k0=0, k_max=0)
        family = trees.build_cores(fam)[0]
        tree = trees.build_tree(fam, family, (0, 0))
        assert tree.nodes == [(0, 0)]
        assert tree.max_depth() == 0

    def test_parent_unique_and_contained(self, seg_tree):
        assert trees.verify_tree(seg_tree) == []

    def test_children_cover_all_deep_balls(self, seg_fam, seg_tree):
        # the root core swallows everything, so every level-7 ball is a child
        n_deep = len(seg_fam.level(7).points)
        assert len(seg_tree.children[(-3, 0)]) == n_deep

    def test_pruning_keeps_alive_branches(self, seg_tree):
        pruned = seg_tree.pruned()
        assert set(pruned.nodes) <= set(seg_tree.nodes)
        deepest = pruned.max_depth()
        for n in pruned.nodes:
            assert pruned.branch_alive(n)
        assert deepest == seg_tree.max_depth()


class TestGoodBad:
    def test_zero_mass_level_set_all_bad(self, seg_tree, seg_mu):
        part = trees.good_bad(seg_tree, seg_mu, payoff(seg_tree, seg_mu),
                              N=-1.0, eps=0.1)
        assert part.good == set()
        assert part.bad == set(seg_tree.nodes)

    def test_zero_payoff_good_sum(self, seg_tree, seg_mu):
        part = trees.good_bad(seg_tree, seg_mu,
                              {n: 0.0 for n in seg_tree.nodes},
                              N=1.0, eps=0.1)
        assert part.good_sum == 0.0
        assert part.good_sum <= part.bound

    @pytest.mark.parametrize("N", [1.0, 10.0])
    @pytest.mark.parametrize("eps", [0.01, 0.1])
    def test_localization_bounds(self, seg_tree, seg_mu, N, eps):
        part = trees.good_bad(seg_tree, seg_mu, payoff(seg_tree, seg_mu),
                              N=N, eps=eps)
        assert trees.verify_partition(seg_tree, part) == []
        assert part.good_sum <= N * part.D_T / eps + 1e-12
        assert part.mu_E_prime >= \
            (1.0 - eps * seg_mu.total_mass) * part.mu_E - 1e-12

    def test_vacuous_eps_warns(self, seg_tree, seg_mu):
        heavy = measures.DiscreteMeasure(seg_mu.atoms, seg_mu.weights * 100)
        part = trees.good_bad(seg_tree, heavy, payoff(seg_tree, heavy),
                              N=10.0, eps=0.1)
        assert part.warning is not None

    def test_bad_closure_downward(self, seg_tree, seg_mu):
        # force some badness by shrinking the level set
        part = trees.good_bad(seg_tree, seg_mu, payoff(seg_tree, seg_mu),
                              N=-1.0, eps=0.5)
        for node in part.bad:
            for ch in seg_tree.children.get(node, []):
                assert ch in part.bad


class TestLeavesCurve:
    def test_segment_tree_draws_segment(self, seg_tree, seg_mu):
        res = trees.leaves_curve(seg_tree, seg_mu)
        assert res.h1_gamma <= res.bound + 1e-9
        assert res.h1_gamma == pytest.approx(1.0, abs=0.05)
        h = res.hierarchy
        assert res.leaf_distance <= \
            2.0 * h.delta ** (h.n_gens - 1) * h.r0 + 1e-9

    def test_single_branch_tree(self):
        mu = measures.DiscreteMeasure(np.array([[0.0, 0.0]]), np.array([1.0]))
        fam = nets.build_family(mu, k0=0, k_max=10)
        family = trees.build_cores(fam)[0]
        tree = trees.build_tree(fam, family, (0, 0))
        res = trees.leaves_curve(tree, mu)
        assert res.state.singleton is not None
        assert res.leaf_distance <= 1e-9

    def test_ancestor_window_ratio(self, seg_tree, seg_mu):
        res = trees.leaves_curve(seg_tree, seg_mu)
        h = res.hierarchy
        J = seg_tree.family.J
        for (t, i), node in res.vertex_balls.items():
            if t == 0:
                continue
            hat = trees._minimal_ancestor(seg_tree, h, res.vertex_balls, t, i)
            ratio = seg_tree.ball(hat).diam / seg_tree.ball(node).diam
            assert ratio <= 2.0 ** (12 + 2 * J) + 1e-9


def test_tree_json(tmp_path, seg_tree, seg_mu):
    part = trees.good_bad(seg_tree, seg_mu, payoff(seg_tree, seg_mu),
                          N=10.0, eps=0.1)
    path = tmp_path / "tree.json"
    trees.save_tree(path, seg_tree, part)
    import json
    data = json.loads(path.read_text())
    assert data["top"] == [-3, 0]
    assert len(data["nodes"]) == len(seg_tree.nodes)
    assert data["good_sum"] <= data["bound"]
