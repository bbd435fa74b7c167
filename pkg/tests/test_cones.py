import math

import numpy as np
import pytest

from rectify import cones, measures
from rectify.geometry import MPlane


def xplane(d=2, m=1):
    B = np.zeros((m, d))
    for i in range(m):
        B[i, i] = 1.0
    return MPlane(np.zeros(d), B)


class TestConeMassRatio:
    def test_measure_on_plane_zero(self, rng):
        atoms = np.column_stack([rng.normal(size=40), np.zeros(40)])
        mu = measures.DiscreteMeasure(atoms, np.ones(40))
        for alpha in (0.1, 0.5, 0.9):
            spec = cones.ConeSpec(atoms[3], xplane(), alpha, r=2.0)
            assert cones.cone_mass_ratio(mu, spec) == 0.0

    def test_single_atom_apex(self):
        mu = measures.DiscreteMeasure(np.array([[1.0, 2.0]]), np.array([1.0]))
        spec = cones.ConeSpec([1.0, 2.0], xplane(), 0.3, r=1.0)
        assert cones.cone_mass_ratio(mu, spec) == 0.0

    def test_cantor_corner_sees_bad_mass(self):
        mu = measures.generate("cantor4", {"depth": 6}, n=1, seed=0)
        corner = mu.atoms[np.argmin(mu.atoms.sum(axis=1))]
        spec = cones.ConeSpec(corner, xplane(), 0.5, r=1.0)
        assert cones.cone_mass_ratio(mu, spec) > 0.2

    def test_partition_exact(self, rng):
        atoms = rng.normal(size=(50, 3))
        mu = measures.DiscreteMeasure(atoms, np.ones(50))
        spec = cones.ConeSpec(atoms[0], xplane(3), 0.4, r=2.0)
        idx = mu.indices_in_ball(spec.apex, spec.r)
        mask = cones.bad_cone_mask(mu.atoms[idx], spec)
        # every atom of the ball is in exactly one of good/bad
        assert mask.dtype == bool and len(mask) == len(idx)

    def test_monotone_in_alpha(self, rng):
        atoms = rng.normal(size=(80, 2))
        mu = measures.DiscreteMeasure(atoms, rng.uniform(0.5, 1.5, size=80))
        prev = 1.1
        for alpha in np.linspace(0.05, 0.95, 12):
            spec = cones.ConeSpec(atoms[7], xplane(), float(alpha), r=3.0)
            cur = cones.cone_mass_ratio(mu, spec)
            assert cur <= prev + 1e-12
            prev = cur

    def test_zero_denominator_raises(self):
        mu = measures.DiscreteMeasure(np.array([[0.0, 0.0]]), np.array([1.0]))
        spec = cones.ConeSpec([50.0, 50.0], xplane(), 0.5, r=0.1)
        with pytest.raises(ValueError):
            cones.cone_mass_ratio(mu, spec)


class TestEtaAlpha:
    def test_half_value(self):
        assert cones.eta_alpha(0.5) == pytest.approx(
            math.sqrt(1.0 - math.sqrt(3.0) / 2.0), abs=1e-12)
        assert cones.eta_alpha(0.5) == pytest.approx(0.36603, abs=1e-4)

    def test_vanishes_at_zero(self):
        assert cones.eta_alpha(1e-9) == pytest.approx(0.0, abs=1e-4)

    def test_monotone_on_half_interval(self):
        grid = np.linspace(0.01, 0.5, 50)
        vals = [cones.eta_alpha(a) for a in grid]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(ValueError):
            cones.eta_alpha(0.0)
        with pytest.raises(ValueError):
            cones.eta_alpha(1.0)
        # above 1/2 the closed form is clamped, not an error
        assert cones.eta_alpha(0.8) == cones.eta_alpha(0.5)

    @pytest.mark.parametrize("dim", [2, 10])
    def test_containment_small_aperture(self, dim):
        # the closed form stays below the exact inscribed margin for
        # apertures up to ~0.45, where the Monte-Carlo containment holds
        for alpha in (0.2, 0.4):
            res = cones.eta_containment_check(alpha, dim, 20000, seed=3)
            assert res["violations"] == 0

    def test_closed_form_overshoots_at_half(self):
        # documented defect of the closed form: at alpha = 1/2 it exceeds
        # the exact margin, so the slack ball pokes into the good cone
        res = cones.eta_containment_check(0.5, 2, 5000, seed=3)
        assert res["eta"] > res["exact_margin"]
        assert res["violations"] > 0


class TestGraphExtract:
    def test_half_slope_graph_all_accepted(self):
        t = np.linspace(0, 1, 60)
        pts = np.column_stack([t, t / 2])
        alpha = math.sin(math.atan(0.5))
        res = cones.graph_extract(pts, xplane(), alpha)
        assert len(res.accepted) == 60
        assert res.lip_estimate <= res.bound + 1e-9
        assert res.lip_estimate == pytest.approx(1.0 / math.sqrt(0.8),
                                                 abs=1e-9)

    def test_points_on_plane(self):
        pts = np.column_stack([np.linspace(0, 1, 20), np.zeros(20)])
        res = cones.graph_extract(pts, xplane(), 0.5)
        assert len(res.accepted) == 20
        assert res.lip_estimate == pytest.approx(1.0)

    def test_vertical_pair_rejected(self):
        pts = np.array([[0.0, 0.0], [0.0, 1.0]])
        res = cones.graph_extract(pts, xplane(), 0.5)
        assert list(res.accepted) == [0]
        assert res.rejected_pairs == [(1, 0)]

    def test_invariance_under_plane_motions(self, rng):
        pts = rng.normal(size=(30, 2))
        alpha = 0.45
        base = cones.graph_extract(pts, xplane(), alpha)
        shifted = cones.graph_extract(pts + np.array([7.0, 0.0]), xplane(),
                                      alpha)
        assert np.array_equal(base.accepted, shifted.accepted)
        theta = 1.1
        q = np.array([[np.cos(theta), -np.sin(theta)],
                      [np.sin(theta), np.cos(theta)]])
        rot_plane = MPlane(np.zeros(2), (q @ xplane().basis.T).T)
        rotated = cones.graph_extract(pts @ q.T, rot_plane, alpha)
        assert np.array_equal(base.accepted, rotated.accepted)


class TestClassify:
    def test_segment_all_positive(self):
        mu = measures.generate("segment", {"dim": 2}, n=150, seed=0)
        labels = cones.classify_graph_rectifiable(mu)
        assert all(l.positive for l in labels)
        # witness plane is the segment's own line
        grid = cones.default_plane_grid(mu)
        for l in labels[:10]:
            basis = grid[l.plane_index].basis[0]
            assert abs(basis @ np.array([1.0, 0.0])) == pytest.approx(
                1.0, abs=1e-6)

    def test_lipschitz_fixture(self):
        mu = measures.generate("lipschitz_graph", {"L": 0.5, "pieces": 5},
                               n=240, seed=4)
        labels = cones.classify_graph_rectifiable(mu)
        frac = np.mean([l.positive for l in labels])
        assert frac >= 0.95
        for l in labels:
            if l.positive:
                assert l.alpha >= math.sin(math.atan(0.5)) - 1e-9

    def test_cantor_mostly_negative(self):
        # the finest half of the radius grid spans the whole structure so
        # every corner scale is enforced; survivors are the short diagonal
        # tails, which thin out geometrically with depth
        mu = measures.generate("cantor4", {"depth": 5}, n=1, seed=0)
        lo = 4.0 * mu.min_atom_gap()
        hi = float(np.linalg.norm(mu.atoms.max(0) - mu.atoms.min(0)))
        r_grid = np.concatenate([np.geomspace(lo, hi, 5),
                                 hi * 2.0 ** np.arange(1, 6)])
        labels = cones.classify_graph_rectifiable(mu, r_grid=r_grid)
        frac = np.mean([l.positive for l in labels])
        assert frac <= 0.05

    def test_empty_grid_raises(self):
        mu = measures.generate("segment", {"dim": 2}, n=20, seed=0)
        with pytest.raises(ValueError):
            cones.classify_graph_rectifiable(mu, alpha_grid=[])


def test_plane_grid_m2():
    mu = measures.generate("plane_stack", {"planes": 2}, n=49, seed=0)
    grid = cones.default_plane_grid(mu, m=2)
    assert all(p.m == 2 for p in grid)
    # the stack's own plane direction must be present
    target = np.zeros((2, 3))
    target[0, 0] = target[1, 1] = 1.0
    assert any(np.allclose(np.abs(np.linalg.svd(
        p.basis @ target.T, compute_uv=False)), 1.0, atol=1e-6)
        for p in grid)
