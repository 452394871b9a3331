from __future__ import annotations

import math

import numpy as np
import pytest

from affmf.matrix2 import (AngleInterval, Mat2, NonInvertibleError, batch_singular_values,
                           normalize_angle, projective_angle, projective_image,
                           singular_values, word_product)

PI = math.pi


def random_invertible(rng):
    while True:
        m = Mat2(*rng.uniform(-2.0, 2.0, size=4))
        if abs(m.det()) > 1e-6:
            return m


class TestSingularValues:
    def test_diagonal(self):
        for m in (Mat2.diagonal(0.5, 0.2), Mat2.diagonal(0.2, 0.5)):
            a1, a2 = singular_values(m)
            assert a1 == pytest.approx(0.5, rel=1e-15)
            assert a2 == pytest.approx(0.2, rel=1e-15)

    def test_identity(self):
        assert singular_values(Mat2.identity()) == (1.0, 1.0)

    def test_product_equals_det(self):
        a1, a2 = singular_values(Mat2(0.4, 0.1, 0.05, 0.3))
        assert a1 * a2 == pytest.approx(0.4 * 0.3 - 0.1 * 0.05, rel=1e-14)

    def test_singular_matrix_rejected(self):
        with pytest.raises(NonInvertibleError, match="non-invertible"):
            singular_values(Mat2(1.0, 2.0, 2.0, 4.0))

    def test_against_numpy_svd(self):
        rng = np.random.default_rng(42)
        for _ in range(10_000):
            m = random_invertible(rng)
            a1, a2 = singular_values(m)
            assert a1 * a2 == pytest.approx(abs(m.det()), rel=1e-14)
            s = np.linalg.svd(m.as_array(), compute_uv=False)
            assert a1 == pytest.approx(s[0], rel=1e-12)
            assert a2 == pytest.approx(s[1], rel=1e-12, abs=1e-15)
            assert a1 == pytest.approx(np.linalg.norm(m.as_array(), 2), rel=1e-12)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(3)
        mats = [random_invertible(rng) for _ in range(64)]
        arr = np.stack([m.as_array() for m in mats])
        b1, b2 = batch_singular_values(arr)
        for k, m in enumerate(mats):
            a1, a2 = singular_values(m)
            assert b1[k] == a1 and b2[k] == a2


class TestWordProduct:
    def test_empty_word_is_identity(self, d2):
        assert word_product(d2.matrices, ()) == Mat2.identity()

    def test_single_letter(self, d2):
        assert word_product(d2.matrices, (0,)) == Mat2.diagonal(0.5, 0.2)

    def test_two_letters_diagonal(self, d2):
        m = word_product(d2.matrices, (0, 1))
        assert m.a == pytest.approx(0.5 * 0.3, rel=1e-15)
        assert m.d == pytest.approx(0.2 * 0.25, rel=1e-15)
        assert m.b == m.c == 0.0

    def test_out_of_range_letter(self, d2):
        with pytest.raises(ValueError, match="out of range"):
            word_product(d2.matrices, (0, 2))

    def test_norm_submultiplicative(self, p1):
        rng = np.random.default_rng(9)
        for _ in range(300):
            n1, n2 = rng.integers(1, 7, size=2)
            wi = tuple(rng.integers(0, 2, size=n1))
            wj = tuple(rng.integers(0, 2, size=n2))
            lhs = singular_values(word_product(p1.matrices, wi + wj))[0]
            rhs = (singular_values(word_product(p1.matrices, wi))[0]
                   * singular_values(word_product(p1.matrices, wj))[0])
            assert lhs <= rhs * (1.0 + 1e-12)


class TestAngles:
    def test_normalize(self):
        assert normalize_angle(PI) == 0.0
        assert normalize_angle(-0.1) == pytest.approx(PI - 0.1)
        assert normalize_angle(3.5 * PI) == pytest.approx(0.5 * PI)

    def test_interval_wraparound_containment(self):
        iv = AngleInterval(PI - 0.1, 0.3)  # crosses pi
        assert iv.contains(PI - 0.05)
        assert iv.contains(0.1)
        assert not iv.contains(1.0)

    def test_interval_rejects_full_line(self):
        with pytest.raises(ValueError):
            AngleInterval(0.0, PI)

    def test_contains_interval_with_margin(self):
        outer = AngleInterval(0.2, 1.0)
        assert outer.contains_interval(AngleInterval(0.4, 0.4), margin=0.1)
        assert not outer.contains_interval(AngleInterval(0.25, 0.4), margin=0.1)


class TestProjectiveImage:
    def test_identity_fixes_intervals(self):
        iv = AngleInterval(0.3, 0.7)
        img = projective_image(Mat2.identity(), iv)
        assert img.lo == pytest.approx(iv.lo, abs=1e-15)
        assert img.width == pytest.approx(iv.width, abs=1e-12)

    def test_diagonal_stretch(self):
        img = projective_image(Mat2.diagonal(1.0, 2.0), AngleInterval(0.0, 0.1))
        assert img.lo == 0.0
        assert img.hi == pytest.approx(math.atan(2.0 * math.tan(0.1)), abs=1e-14)

    def test_rotation_shifts(self):
        img = projective_image(Mat2.rotation(PI / 2.0), AngleInterval(0.0, 0.1))
        assert img.lo == pytest.approx(PI / 2.0)
        assert img.width == pytest.approx(0.1, abs=1e-12)

    def test_negative_det_reverses_orientation(self):
        m = Mat2(0.0, 1.0, 1.0, 0.0)  # reflection across the diagonal
        img = projective_image(m, AngleInterval(0.1, 0.2))
        # angles theta map to pi/2 - theta; interval [0.1, 0.3] -> [pi/2-0.3, pi/2-0.1]
        assert img.lo == pytest.approx(PI / 2.0 - 0.3, abs=1e-14)
        assert img.width == pytest.approx(0.2, abs=1e-12)

    def test_composition(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            m1 = random_invertible(rng)
            m2 = random_invertible(rng)
            iv = AngleInterval(rng.uniform(0.0, PI), rng.uniform(0.01, 1.5))
            composed = projective_image(m1 @ m2, iv)
            chained = projective_image(m1, projective_image(m2, iv))
            assert composed.lo == pytest.approx(chained.lo, abs=1e-12) or \
                abs(normalize_angle(composed.lo - chained.lo)) < 1e-12 or \
                abs(normalize_angle(chained.lo - composed.lo)) < 1e-12
            assert composed.width == pytest.approx(chained.width, abs=1e-12)

    def test_angle_map_matches_vector_action(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            m = random_invertible(rng)
            theta = rng.uniform(0.0, PI)
            v = np.array([math.cos(theta), math.sin(theta)])
            w = m.as_array() @ v
            expected = math.atan2(w[1], w[0]) % PI
            assert projective_angle(m, theta) == pytest.approx(expected, abs=1e-14)
