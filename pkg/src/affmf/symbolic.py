"""Finite words, cylinder weight models, and level entropies.

Words are plain tuples of 0-based letters.  Weight models assign a positive
mass to every finite word, consistently across levels (the level-n masses
sum to one for every n).  All entropies are in nats.
"""

from __future__ import annotations

import abc
import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

Word = tuple[int, ...]


class SupportError(ValueError):
    """A weight model vanished on a word where positive mass was required."""


def all_words(n_letters: int, length: int) -> Iterator[Word]:
    """Lexicographic enumeration of all words of the given length."""
    return itertools.product(range(n_letters), repeat=length)


def word_index(word: Sequence[int], n_letters: int) -> int:
    """Lexicographic index of a word among words of its length."""
    idx = 0
    for letter in word:
        idx = idx * n_letters + letter
    return idx


def index_word(index: int, n_letters: int, length: int) -> Word:
    letters = []
    for _ in range(length):
        index, r = divmod(index, n_letters)
        letters.append(r)
    return tuple(reversed(letters))


class CylinderWeightModel(abc.ABC):
    """Weights mu([i]) on finite words, multiplicative up to a constant.

    `qb_constant` is the almost-multiplicativity constant C >= 1 with
    C^-1 w(i)w(j) <= w(ij) <= C w(i)w(j); exact for Bernoulli models,
    estimated otherwise.
    """

    n_letters: int
    qb_constant: float

    @abc.abstractmethod
    def log_weight(self, word: Sequence[int]) -> float:
        ...

    def weight(self, word: Sequence[int]) -> float:
        return float(np.exp(self.log_weight(word)))

    def log_weight_block(self, prefix: Word, depth: int) -> np.ndarray:
        """log weights of prefix+suffix for all suffixes of `depth`, lex order.

        Generic fallback enumerates suffixes one by one; concrete models
        override with vectorized versions.
        """
        prefix = tuple(prefix)
        return np.array(
            [self.log_weight(prefix + s) for s in all_words(self.n_letters, depth)],
            dtype=float,
        )


@lru_cache(maxsize=64)
def _bernoulli_suffix_table(log_p: tuple[float, ...], depth: int) -> np.ndarray:
    """Sums of log p over all words of `depth`, lex order."""
    table = np.zeros(1)
    lp = np.array(log_p)
    for _ in range(depth):
        table = (table[:, None] + lp[None, :]).reshape(-1)
    return table


@dataclass(frozen=True)
class BernoulliWeights(CylinderWeightModel):
    """Product weights from a strictly positive probability vector."""

    p: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        if any(x <= 0.0 for x in self.p):
            raise ValueError("probability vector must be strictly positive")
        if abs(sum(self.p) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {sum(self.p)!r}, expected 1")
        object.__setattr__(self, "log_p", tuple(float(np.log(x)) for x in self.p))

    @property
    def n_letters(self) -> int:
        return len(self.p)

    @property
    def qb_constant(self) -> float:
        return 1.0

    def log_weight(self, word: Sequence[int]) -> float:
        lp = self.log_p
        return float(sum(lp[letter] for letter in word))

    def log_weight_block(self, prefix: Word, depth: int) -> np.ndarray:
        return self.log_weight(prefix) + _bernoulli_suffix_table(self.log_p, depth)


def bernoulli_weight(p: Sequence[float], word: Sequence[int]) -> float:
    """Cylinder mass of `word` under the Bernoulli measure of `p`."""
    return BernoulliWeights(tuple(p)).weight(word)


@dataclass(frozen=True)
class BlockGibbsWeights(CylinderWeightModel):
    """Quasi-Bernoulli weights built from a level-m weight vector.

    A word is weighted as the product of the level-m weights of its
    complete length-m blocks times the marginal of the trailing partial
    block, which keeps the level-n masses summing to one for every n.
    Genuinely almost-multiplicative (not multiplicative) as soon as the
    level weights are not a product measure.
    """

    n_letters: int
    block: int
    log_level: tuple[float, ...]  # log weights over words of length `block`, lex order
    qb_constant: float = 1.0  # estimated; see qb_constant_calibrate

    def __post_init__(self):
        if len(self.log_level) != self.n_letters**self.block:
            raise ValueError("level weight vector has wrong length")
        total = np.logaddexp.reduce(np.array(self.log_level))
        if abs(total) > 1e-9:
            raise ValueError("level weights must sum to 1")
        object.__setattr__(self, "_marginal_tables", self._marginals())

    @staticmethod
    def from_level_weights(weights: Sequence[float], n_letters: int,
                           qb_constant: float | None = None) -> "BlockGibbsWeights":
        w = np.asarray(weights, dtype=float)
        block = int(round(np.log(w.size) / np.log(n_letters)))
        if n_letters**block != w.size:
            raise ValueError("weight vector length is not a power of the alphabet size")
        if np.any(w <= 0.0):
            raise SupportError("level weights must be strictly positive")
        model = BlockGibbsWeights(n_letters, block, tuple(np.log(w / w.sum())),
                                  qb_constant=1.0)
        if qb_constant is None:
            # sampled almost-multiplicativity constant (seeded, heuristic)
            qb_constant = model._sample_qb_constant()
        return BlockGibbsWeights(n_letters, block, model.log_level,
                                 qb_constant=qb_constant)

    def _sample_qb_constant(self, samples: int = 512, seed: int = 1234,
                            max_length: int = 8) -> float:
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            ni, nj = rng.integers(1, max_length + 1, size=2)
            wi = tuple(int(x) for x in rng.integers(0, self.n_letters, size=ni))
            wj = tuple(int(x) for x in rng.integers(0, self.n_letters, size=nj))
            gap = abs(self.log_weight(wi) + self.log_weight(wj)
                      - self.log_weight(wi + wj))
            worst = max(worst, gap)
        return float(np.exp(worst))

    def _marginals(self) -> list[np.ndarray]:
        """log marginal mass of the first r letters, for r = 0..block."""
        tables = [None] * (self.block + 1)
        full = np.array(self.log_level, dtype=float)
        tables[self.block] = full
        t = full
        for r in range(self.block - 1, -1, -1):
            t = t.reshape(-1, self.n_letters)
            m = t.max(axis=1)
            t = m + np.log(np.exp(t - m[:, None]).sum(axis=1))
            tables[r] = t
        return tables

    def log_weight(self, word: Sequence[int]) -> float:
        tables = self._marginal_tables
        total = 0.0
        word = tuple(word)
        for start in range(0, len(word), self.block):
            chunk = word[start:start + self.block]
            total += float(tables[len(chunk)][word_index(chunk, self.n_letters)])
        return total

    def log_weight_block(self, prefix: Word, depth: int) -> np.ndarray:
        tables = self._marginal_tables
        prefix = tuple(prefix)
        r0 = len(prefix) % self.block
        closed = self.log_weight(prefix[:len(prefix) - r0])
        partial = np.array([word_index(prefix[len(prefix) - r0:], self.n_letters)])
        logw = np.full(1, closed)
        r = r0
        for _ in range(depth):
            partial = (partial[:, None] * self.n_letters
                       + np.arange(self.n_letters)[None, :]).reshape(-1)
            logw = np.repeat(logw, self.n_letters)
            r += 1
            if r == self.block:
                logw = logw + tables[self.block][partial]
                partial = np.zeros_like(partial)
                r = 0
        if r:
            logw = logw + tables[r][partial]
        return logw


@dataclass
class LevelMeasure:
    """Probability weights over all words of one length, lex order."""

    n_letters: int
    depth: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.n_letters**self.depth,):
            raise ValueError("weight vector has wrong length for the level")
        if np.any(self.weights < 0.0):
            raise ValueError("level weights must be nonnegative")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ValueError("level weights must sum to 1")


def entropy_of_level(nu: LevelMeasure) -> float:
    """Entropy per symbol, -(1/n) sum w log w, with 0 log 0 = 0."""
    w = nu.weights
    pos = w > 0.0
    return float(-(w[pos] * np.log(w[pos])).sum() / nu.depth)


def cross_entropy_of_level(mu: CylinderWeightModel, nu: LevelMeasure) -> float:
    """Cross-entropy per symbol, -(1/n) sum nu(i) log mu([i])."""
    if mu.n_letters != nu.n_letters:
        raise ValueError("alphabet size mismatch")
    log_mu = mu.log_weight_block((), nu.depth)
    pos = nu.weights > 0.0
    if not np.all(np.isfinite(log_mu[pos])):
        raise SupportError("support mismatch")
    return float(-(nu.weights[pos] * log_mu[pos]).sum() / nu.depth)
