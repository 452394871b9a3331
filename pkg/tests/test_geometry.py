from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from affmf.cones import find_invariant_multicone, furstenberg_cover
from affmf.geometry import (attractor_sample, canonical_point, canonical_points,
                            check_projective_strong_separation, check_strong_separation,
                            enclosure, projected_density, projection_axis)
from affmf.matrix2 import singular_values
from affmf.system import AffineIFS


def carpet(v2=(0.7, 0.75)) -> AffineIFS:
    return AffineIFS.from_arrays(
        [[[0.5, 0.0], [0.0, 0.2]], [[0.3, 0.0], [0.0, 0.25]]],
        [(0.0, 0.0), v2],
    )


class TestCanonicalPoint:
    def test_single_letter_is_translation(self, d2):
        assert canonical_point(d2, (1,)) == pytest.approx((0.7, 0.75))

    def test_two_letters(self, d2):
        assert canonical_point(d2, (0, 1)) == pytest.approx((0.5 * 0.7, 0.2 * 0.75))

    def test_constant_word_approaches_fixed_point(self, d2):
        # (I - A_1)^-1 v_1 for the second map
        expected = (0.7 / (1.0 - 0.3), 0.75 / (1.0 - 0.25))
        assert canonical_point(d2, (1,) * 40) == pytest.approx(expected, abs=1e-12)

    def test_empty_word_rejected(self, d2):
        with pytest.raises(ValueError):
            canonical_point(d2, ())

    def test_batch_matches_scalar(self, p1):
        words = list(itertools.product(range(2), repeat=5))
        batch = canonical_points(p1, np.array(words))
        for row, word in zip(batch, words):
            assert tuple(row) == pytest.approx(canonical_point(p1, word), abs=1e-14)

    def test_prefix_enclosure_bound(self, d2):
        r0 = d2.outer_radius
        rng = np.random.default_rng(2)
        for _ in range(100):
            word = tuple(rng.integers(0, 2, size=8))
            full = np.array(canonical_point(d2, word))
            prefix = np.array(canonical_point(d2, word[:-1]))
            bound = singular_values(d2.word_product(word[:-1]))[0] * r0
            assert np.linalg.norm(full - prefix) <= bound + 1e-12


class TestAttractorSample:
    def test_within_enclosure(self, d2, p1):
        for system in (d2, p1):
            enc = enclosure(system)
            pts = attractor_sample(system, 5000, seed=3)
            assert all(enc.contains(p) for p in pts)

    def test_deterministic(self, d2):
        a = attractor_sample(d2, 1000, seed=9)
        b = attractor_sample(d2, 1000, seed=9)
        assert np.array_equal(a, b)

    def test_single_map_collapses_to_fixed_point(self):
        system = AffineIFS.from_arrays([[[0.4, 0.0], [0.0, 0.2]]], [(0.3, 0.1)])
        pts = attractor_sample(system, 10, seed=1, burn_in=200)
        fixed = (0.3 / 0.6, 0.1 / 0.8)
        assert np.allclose(pts, fixed, atol=1e-12)

    def test_count_validation(self, d2):
        with pytest.raises(ValueError):
            attractor_sample(d2, 0)


class TestStrongSeparation:
    def test_carpet_certified(self):
        report = check_strong_separation(carpet(), depth=8)
        assert report.satisfied == "yes"
        assert report.margin >= 0.2

    def test_margin_grows_with_depth(self):
        system = carpet()
        margins = [check_strong_separation(system, depth=d).margin for d in (5, 6, 7, 8)]
        for lo, hi in zip(margins, margins[1:]):
            assert hi >= lo - 1e-12

    def test_shared_fixed_point_rejected(self):
        report = check_strong_separation(carpet((0.0, 0.0)), depth=6)
        assert report.satisfied == "no"

    def test_marginal_configuration_resolves_with_depth(self):
        system = carpet((0.505, 0.06))
        shallow = check_strong_separation(system, depth=2)
        deep = check_strong_separation(system, depth=10)
        assert shallow.satisfied == "inconclusive"
        assert deep.satisfied == "yes" and deep.margin > 0.0

    def test_single_map_rejected(self, rotation):
        with pytest.raises(ValueError, match="two maps"):
            check_strong_separation(rotation, depth=4)


class TestProjectiveStrongSeparation:
    def test_carpet_certified(self):
        system = carpet()
        dom = find_invariant_multicone(system)
        cover = furstenberg_cover(system, dom.multicone, 40)
        report = check_projective_strong_separation(system, cover, depth=10)
        assert report.satisfied == "yes"
        assert report.margin >= 0.15

    def test_pssc_implies_ssc(self):
        system = carpet()
        dom = find_invariant_multicone(system)
        cover = furstenberg_cover(system, dom.multicone, 40)
        if check_projective_strong_separation(system, cover, depth=10).satisfied == "yes":
            assert check_strong_separation(system, depth=10).satisfied == "yes"

    def test_depth_zero_cover_is_coarse(self):
        system = carpet()
        dom = find_invariant_multicone(system)
        cover = furstenberg_cover(system, dom.multicone, 0)
        report = check_projective_strong_separation(system, cover, depth=8)
        assert "warning" in report.detail
        assert report.satisfied in ("inconclusive", "yes")

    def test_shared_fixed_point_rejected(self):
        system = carpet((0.0, 0.0))
        dom = find_invariant_multicone(system)
        cover = furstenberg_cover(system, dom.multicone, 10)
        report = check_projective_strong_separation(system, cover, depth=6)
        assert report.satisfied == "no"

    def test_interval_direction_set_certified(self, p1):
        # the direction set of this positive pair is a whole interval
        # (its inverse projective images overlap), so certification relies
        # on subdividing the cover
        dom = find_invariant_multicone(p1)
        cover = furstenberg_cover(p1, dom.multicone, 40)
        assert cover.total_width > 0.5
        report = check_projective_strong_separation(p1, cover, depth=9)
        assert report.satisfied == "yes"
        assert report.margin > 0.0


class TestProjectedDensity:
    def test_uniform_grid_unit_density(self):
        t = np.linspace(0.0005, 0.9995, 1000)
        pts = np.stack([t, np.zeros_like(t)], axis=1)
        # V vertical: project onto the horizontal axis
        result = projected_density(pts, np.full(1000, 1e-3), math.pi / 2.0, bins=16)
        assert result.sup_density == pytest.approx(1.0, rel=0.1)

    def test_projection_axis_convention(self):
        axis = projection_axis(math.pi / 2.0)
        assert axis == pytest.approx([-1.0, 0.0])

    def test_point_mass_rejected(self):
        pts = np.tile([0.3, 0.4], (50, 1))
        with pytest.raises(ValueError, match="degenerate"):
            projected_density(pts, np.full(50, 0.02), 0.3)

    def test_bin_count_validated(self):
        pts = np.random.default_rng(1).uniform(size=(100, 2))
        with pytest.raises(ValueError, match="8 bins"):
            projected_density(pts, np.full(100, 0.01), 0.1, bins=4)

    def test_carpet_projection_stable_in_bins(self, d2, mu64):
        from affmf.empirical import sample_selfaffine_measure
        cloud = sample_selfaffine_measure(d2, mu64, 100_000, 40, seed=4)
        sups = [projected_density(cloud.points, cloud.weights, math.pi / 2.0, bins=b).sup_density
                for b in (32, 64)]
        assert sups[0] > 0.0
        assert 0.5 <= sups[1] / sups[0] <= 2.0
