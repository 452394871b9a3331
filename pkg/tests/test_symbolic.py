from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from affmf.symbolic import (BernoulliWeights, BlockGibbsWeights, CylinderWeightModel,
                            LevelMeasure, SupportError, all_words, bernoulli_weight,
                            cross_entropy_of_level, entropy_of_level, index_word, word_index)


class TestWords:
    def test_index_roundtrip(self):
        for n_letters, length in [(2, 6), (3, 4), (5, 3)]:
            for i, word in enumerate(all_words(n_letters, length)):
                assert word_index(word, n_letters) == i
                assert index_word(i, n_letters, length) == word


class TestBernoulliWeights:
    def test_examples(self):
        assert bernoulli_weight((0.5, 0.5), (0, 1, 0)) == pytest.approx(0.125, rel=1e-15)
        assert bernoulli_weight((0.6, 0.4), ()) == 1.0
        assert bernoulli_weight((0.6, 0.4), (1, 1)) == pytest.approx(0.16, rel=1e-14)

    def test_rejects_bad_vectors(self):
        with pytest.raises(ValueError, match="strictly positive"):
            BernoulliWeights((1.0, 0.0))
        with pytest.raises(ValueError, match="sum"):
            BernoulliWeights((0.5, 0.4))

    @pytest.mark.parametrize("n", [1, 6, 13, 20])
    def test_level_sums_to_one(self, n):
        mu = BernoulliWeights((0.6, 0.4))
        logw = mu.log_weight_block((), n)
        m = logw.max()
        total = math.exp(m) * np.exp(logw - m).sum()
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_block_matches_scalar(self):
        mu = BernoulliWeights((0.3, 0.2, 0.5))
        block = mu.log_weight_block((2, 0), 3)
        for idx, suffix in enumerate(all_words(3, 3)):
            assert block[idx] == pytest.approx(mu.log_weight((2, 0) + suffix), abs=1e-12)

    def test_multiplicative_split_ratio_is_one(self):
        mu = BernoulliWeights((0.6, 0.4))
        rng = np.random.default_rng(5)
        worst = 1.0
        for _ in range(10_000):
            ni, nj = rng.integers(1, 9, size=2)
            wi = tuple(rng.integers(0, 2, size=ni))
            wj = tuple(rng.integers(0, 2, size=nj))
            ratio = mu.weight(wi) * mu.weight(wj) / mu.weight(wi + wj)
            worst = max(worst, ratio, 1.0 / ratio)
        assert worst <= 1.0 + 1e-12


class TestBlockGibbs:
    @staticmethod
    def model():
        # level-2 weights that are not a product measure
        w = np.array([0.4, 0.1, 0.15, 0.35])
        return BlockGibbsWeights.from_level_weights(w, 2)

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 7])
    def test_level_sums_to_one(self, n):
        model = self.model()
        logw = model.log_weight_block((), n)
        assert np.exp(logw).sum() == pytest.approx(1.0, abs=1e-12)

    def test_block_matches_scalar(self):
        model = self.model()
        for prefix in [(), (0,), (1, 0, 1)]:
            block = model.log_weight_block(prefix, 3)
            for idx, suffix in enumerate(all_words(2, 3)):
                assert block[idx] == pytest.approx(model.log_weight(prefix + suffix),
                                                   abs=1e-12)

    def test_qb_constant_estimated_at_construction(self):
        model = self.model()
        assert model.qb_constant > 1.0
        product = BlockGibbsWeights.from_level_weights([0.36, 0.24, 0.24, 0.16], 2)
        assert product.qb_constant == pytest.approx(1.0, abs=1e-12)

    def test_genuinely_quasi_bernoulli(self):
        model = self.model()
        rng = np.random.default_rng(8)
        worst = 1.0
        for _ in range(2000):
            ni, nj = rng.integers(1, 7, size=2)
            wi = tuple(rng.integers(0, 2, size=ni))
            wj = tuple(rng.integers(0, 2, size=nj))
            gap = abs(model.log_weight(wi) + model.log_weight(wj)
                      - model.log_weight(wi + wj))
            worst = max(worst, math.exp(gap))
        assert 1.0 < worst < 50.0  # almost-multiplicative but not multiplicative

    def test_rejects_vanishing_level_weights(self):
        with pytest.raises(SupportError):
            BlockGibbsWeights.from_level_weights([0.5, 0.5, 0.0, 0.0], 2)


class TestLevelMeasure:
    def test_validation(self):
        with pytest.raises(ValueError, match="sum"):
            LevelMeasure(2, 2, np.array([0.5, 0.5, 0.5, 0.0]))
        with pytest.raises(ValueError, match="nonnegative"):
            LevelMeasure(2, 1, np.array([1.5, -0.5]))
        with pytest.raises(ValueError, match="length"):
            LevelMeasure(2, 2, np.array([1.0]))


class TestEntropies:
    def test_uniform_is_log_n(self):
        for n in (1, 3, 5):
            nu = LevelMeasure(2, n, np.full(2**n, 1.0 / 2**n))
            assert entropy_of_level(nu) == pytest.approx(math.log(2.0), rel=1e-12)

    def test_point_mass_is_zero(self):
        w = np.zeros(8)
        w[3] = 1.0
        assert entropy_of_level(LevelMeasure(2, 3, w)) == 0.0

    @pytest.mark.parametrize("n", [1, 3, 6])
    def test_bernoulli_level_entropy(self, n):
        mu = BernoulliWeights((0.6, 0.4))
        expected = -(0.6 * math.log(0.6) + 0.4 * math.log(0.4))
        nu = LevelMeasure(2, n, np.exp(mu.log_weight_block((), n)))
        assert entropy_of_level(nu) == pytest.approx(expected, rel=1e-12)
        # h(mu, mu) = h(mu) for Bernoulli
        assert cross_entropy_of_level(mu, nu) == pytest.approx(expected, rel=1e-12)

    def test_cross_entropy_point_mass(self):
        mu = BernoulliWeights((0.6, 0.4))
        n = 5
        w = np.zeros(2**n)
        w[0] = 1.0  # the all-first-letter word
        assert cross_entropy_of_level(mu, LevelMeasure(2, n, w)) == \
            pytest.approx(-math.log(0.6), rel=1e-12)

    def test_cross_entropy_uniform(self):
        mu = BernoulliWeights((0.6, 0.4))
        n = 4
        nu = LevelMeasure(2, n, np.full(2**n, 2.0**-n))
        expected = -(math.log(0.6) + math.log(0.4)) / 2.0
        assert cross_entropy_of_level(mu, nu) == pytest.approx(expected, rel=1e-12)

    def test_entropy_below_cross_entropy(self):
        mu = BernoulliWeights((0.6, 0.4))
        rng = np.random.default_rng(17)
        for _ in range(200):
            n = int(rng.integers(1, 5))
            w = rng.dirichlet(np.full(2**n, 0.5))
            w = w / w.sum()
            nu = LevelMeasure(2, n, w)
            h = entropy_of_level(nu)
            hx = cross_entropy_of_level(mu, nu)
            assert 0.0 <= h <= hx + 1e-12

    def test_support_mismatch(self):
        class Vanishing(CylinderWeightModel):
            n_letters = 2
            qb_constant = 1.0

            def log_weight(self, word):
                return -math.inf if 1 in word else len(word) * math.log(0.5)

        w = np.zeros(4)
        w[3] = 1.0
        with pytest.raises(SupportError, match="support mismatch"):
            cross_entropy_of_level(Vanishing(), LevelMeasure(2, 2, w))

    def test_alphabet_mismatch(self):
        mu = BernoulliWeights((0.5, 0.3, 0.2))
        with pytest.raises(ValueError, match="alphabet"):
            cross_entropy_of_level(mu, LevelMeasure(2, 2, np.full(4, 0.25)))
