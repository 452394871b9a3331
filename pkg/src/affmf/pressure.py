"""Depth-n pressure of singular-value potentials over the word tree.

The kernel enumerates all words of a given depth once, carrying the running
matrix product and running log cylinder weight down the tree, and caches the
per-word statistics (log alpha1, log alpha2, log mu).  Every pressure,
Gibbs-measure, or functional evaluation at any (q, s) then reduces to array
arithmetic over the cached table, so root finding in s costs one tree
enumeration total.

Determinism contract: the tree is split into lexicographic prefix chunks
whose layout depends only on the depth.  Chunks may be filled by a thread
pool, but each writes its own slice and all reductions run over the full
arrays in fixed order, so results are bit-identical for any thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .matrix2 import batch_singular_values, word_product
from .symbolic import CylinderWeightModel, LevelMeasure, Word, index_word
from .system import AffineIFS

DEFAULT_MAX_WORDS = 1 << 24
_CHUNK_TARGET = 1 << 15
_TABLE_CACHE_SLOTS = 48

POTENTIAL_KINDS = ("svf", "psi", "psi_alpha")


class BudgetError(RuntimeError):
    """The requested enumeration exceeds the word budget."""


def resolve_threads(threads: int | None = None) -> int:
    """Thread count: explicit argument, else AFFMF_THREADS, else cpu count."""
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("AFFMF_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class PotentialSpec:
    """A potential on words: phi^s, mu^q (phi^s)^(1-q), or an alpha_m^kappa tilt."""

    system: AffineIFS
    weights: CylinderWeightModel | None
    kind: str
    s: float
    q: float = 0.0
    alpha_index: int = 1
    kappa: float = 0.0

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.s < 0.0:
            raise ValueError("s must be nonnegative")
        if self.kind != "svf":
            if self.weights is None:
                raise ValueError("weighted potentials need a cylinder weight model")
            if self.weights.n_letters != self.system.n_maps:
                raise ValueError("alphabet size mismatch between system and weights")
        if self.kind == "psi_alpha":
            if self.alpha_index not in (1, 2):
                raise ValueError("alpha_index must be 1 or 2")
            if self.kappa <= 0.0:
                raise ValueError("kappa must be positive")

    @staticmethod
    def svf(system: AffineIFS, s: float) -> "PotentialSpec":
        return PotentialSpec(system, None, "svf", s)

    @staticmethod
    def psi(system: AffineIFS, weights: CylinderWeightModel, q: float, s: float) -> "PotentialSpec":
        return PotentialSpec(system, weights, "psi", s, q)

    @staticmethod
    def alpha_tilted(system: AffineIFS, weights: CylinderWeightModel, alpha_index: int,
                     kappa: float, q: float, s: float) -> "PotentialSpec":
        return PotentialSpec(system, weights, "psi_alpha", s, q, alpha_index, kappa)


@dataclass(frozen=True)
class PressureEstimate:
    """Depth-n pressure with certified upper and heuristic lower bracket.

    For sub-multiplicative potentials the limit pressure sits below every
    P_n, so `upper` equals the computed value; `lower` subtracts
    log(C_est)/n with the sampled almost-multiplicativity constant and is
    heuristic (the true constant is not computed).
    """

    depth: int
    value: float
    lower: float
    upper: float
    qb_constant_est: float


@dataclass(frozen=True)
class EquilibriumFunctionals:
    """Entropy, cross-entropy, and Lyapunov sums of a finite-level Gibbs proxy."""

    depth: int
    h: float
    h_cross: float
    lambda1: float
    lambda2: float


@dataclass(frozen=True)
class LeafTable:
    """Per-word statistics over all words of one depth, lex order."""

    depth: int
    log_alpha1: np.ndarray
    log_alpha2: np.ndarray
    log_mu: np.ndarray | None


def _expand_products(prefix_mat: np.ndarray, n_levels: int, mats: np.ndarray) -> np.ndarray:
    """Products prefix @ A_w over all suffixes w of length n_levels, lex order.

    Extends on the right one level at a time; index layout new = old*N + letter
    keeps lexicographic order.  Uses explicit component arithmetic (mul then
    add, no FMA) so the running products agree bit-for-bit with folding
    Mat2.__matmul__ over the word.
    """
    prods = prefix_mat[None, :, :]
    n = mats.shape[0]
    for _ in range(n_levels):
        pa, pb = prods[:, None, 0, 0], prods[:, None, 0, 1]
        pc, pd = prods[:, None, 1, 0], prods[:, None, 1, 1]
        ma, mb = mats[None, :, 0, 0], mats[None, :, 0, 1]
        mc, md = mats[None, :, 1, 0], mats[None, :, 1, 1]
        block = np.empty((prods.shape[0], n, 2, 2))
        block[:, :, 0, 0] = pa * ma + pb * mc
        block[:, :, 0, 1] = pa * mb + pb * md
        block[:, :, 1, 0] = pc * ma + pd * mc
        block[:, :, 1, 1] = pc * mb + pd * md
        prods = block.reshape(-1, 2, 2)
    return prods


def _letter_sum_table(values: Sequence[float], depth: int) -> np.ndarray:
    """Sums of per-letter values over all words of `depth`, lex order."""
    table = np.zeros(1)
    vals = np.asarray(values, dtype=float)
    for _ in range(depth):
        table = (table[:, None] + vals[None, :]).reshape(-1)
    return table


def _split_depth(n_letters: int, depth: int) -> tuple[int, int]:
    """(prefix_depth, suffix_depth) so suffix chunks stay near _CHUNK_TARGET."""
    suffix = depth
    while n_letters**suffix > _CHUNK_TARGET and suffix > 1:
        suffix -= 1
    return depth - suffix, suffix


def build_leaf_table(system: AffineIFS, weights: CylinderWeightModel | None, depth: int,
                     max_words: int = DEFAULT_MAX_WORDS, threads: int | None = None) -> LeafTable:
    """Enumerate all depth-n words once and tabulate their statistics.

    log alpha2 is recovered as log|det| - log alpha1 with log|det|
    accumulated letter-by-letter, which stays accurate when alpha2 is many
    orders of magnitude below alpha1.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    n = system.n_maps
    _check_budget(n, depth, max_words)
    total = n**depth
    mats = system.matrix_array()
    letter_logdet = [math.log(abs(m.det())) for m in system.matrices]

    prefix_depth, suffix_depth = _split_depth(n, depth)
    chunk = n**suffix_depth
    la1 = np.empty(total)
    ldet = np.empty(total)
    lmu = np.empty(total) if weights is not None else None
    suffix_ldet = _letter_sum_table(letter_logdet, suffix_depth)

    def fill(pi: int) -> None:
        prefix = index_word(pi, n, prefix_depth)
        pmat = word_product(system.matrices, prefix).as_array()
        prods = _expand_products(pmat, suffix_depth, mats)
        a1, _ = batch_singular_values(prods)
        lo = pi * chunk
        hi = lo + chunk
        la1[lo:hi] = np.log(a1)
        ldet[lo:hi] = sum(letter_logdet[l] for l in prefix) + suffix_ldet
        if lmu is not None:
            lmu[lo:hi] = weights.log_weight_block(prefix, suffix_depth)

    n_chunks = n**prefix_depth
    workers = min(resolve_threads(threads), n_chunks)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(n_chunks)))
    else:
        for pi in range(n_chunks):
            fill(pi)

    return LeafTable(depth, la1, ldet - la1, lmu)


_table_cache: dict[tuple, LeafTable] = {}


def _check_budget(n_letters: int, depth: int, max_words: int) -> None:
    if n_letters**depth > max_words:
        suggested = int(math.log(max_words) / math.log(n_letters))
        raise BudgetError(
            f"{n_letters}^{depth} words exceed the budget of {max_words}; "
            f"try depth <= {suggested}"
        )


def leaf_table(system: AffineIFS, weights: CylinderWeightModel | None, depth: int,
               max_words: int = DEFAULT_MAX_WORDS, threads: int | None = None) -> LeafTable:
    """Memoized `build_leaf_table` (hashable systems and weight models).

    The word budget is enforced regardless of cache state, so behavior does
    not depend on what was computed earlier.
    """
    _check_budget(system.n_maps, depth, max_words)
    key = (system, weights, depth)
    table = _table_cache.get(key)
    if table is None:
        table = build_leaf_table(system, weights, depth, max_words, threads)
        if len(_table_cache) >= _TABLE_CACHE_SLOTS:
            _table_cache.pop(next(iter(_table_cache)))
        _table_cache[key] = table
    return table


def _log_svf_from(la1: np.ndarray, la2: np.ndarray, s: float):
    """log phi^s from log singular values; piecewise across the s regimes."""
    if s < 1.0:
        return s * la1
    if s < 2.0:
        return la1 + (s - 1.0) * la2
    return 0.5 * s * (la1 + la2)


def leaf_log_potential(spec: PotentialSpec, table: LeafTable) -> np.ndarray:
    log_phi = _log_svf_from(table.log_alpha1, table.log_alpha2, spec.s)
    if spec.kind == "svf":
        return np.asarray(log_phi)
    out = spec.q * table.log_mu + (1.0 - spec.q) * log_phi
    if spec.kind == "psi_alpha":
        tilt = table.log_alpha1 if spec.alpha_index == 1 else table.log_alpha2
        out = out + spec.kappa * tilt
    return out


def _spec_table(spec: PotentialSpec, depth: int, max_words: int, threads) -> LeafTable:
    return leaf_table(spec.system, spec.weights, depth, max_words, threads)


def pressure_value(spec: PotentialSpec, depth: int, *, max_words: int = DEFAULT_MAX_WORDS,
                   threads: int | None = None) -> float:
    """P_n = (1/n) log sum over depth-n words of the potential.

    Accumulates in log space (max-shifted), so arbitrarily small leaf
    values are handled without underflow.
    """
    table = _spec_table(spec, depth, max_words, threads)
    x = leaf_log_potential(spec, table)
    m = float(x.max())
    return (m + math.log(float(np.exp(x - m).sum()))) / depth


def _word_log_alphas(system: AffineIFS, word: Sequence[int]) -> tuple[float, float]:
    """(log alpha1, log alpha2) of a word product, robust to long words.

    alpha1 comes from the product matrix (no cancellation in its closed
    form); alpha2 as log|det| - log alpha1 with the determinant accumulated
    letter by letter, since the determinant of the assembled product
    cancels catastrophically once alpha2 is far below alpha1.
    """
    la1 = math.log(system.word_product(word).operator_norm())
    ldet = sum(math.log(abs(system.matrices[letter].det())) for letter in word)
    return la1, ldet - la1


def svf(system: AffineIFS, word: Sequence[int], s: float) -> float:
    """Singular value function phi^s of a single word.

    alpha1^s for s < 1, alpha1 * alpha2^(s-1) for 1 <= s < 2, |det|^(s/2)
    beyond; continuous at the seams.
    """
    if s < 0.0:
        raise ValueError("s must be nonnegative")
    la1, la2 = _word_log_alphas(system, word)
    return math.exp(_log_svf_from(la1, la2, s))


def multifractal_potential(system: AffineIFS, weights: CylinderWeightModel,
                           word: Sequence[int], q: float, s: float) -> float:
    """The moment potential mu([i])^q phi^s(i)^(1-q)."""
    from .symbolic import SupportError

    lw = weights.log_weight(word)
    if not math.isfinite(lw):
        raise SupportError(f"weight model vanishes on word {tuple(word)}")
    return math.exp(q * lw + (1.0 - q) * math.log(svf(system, word, s)))


def _log_potential_word(spec: PotentialSpec, word: Word) -> float:
    la1, la2 = _word_log_alphas(spec.system, word)
    log_phi = _log_svf_from(la1, la2, spec.s)
    if spec.kind == "svf":
        return log_phi
    out = spec.q * spec.weights.log_weight(word) + (1.0 - spec.q) * log_phi
    if spec.kind == "psi_alpha":
        out += spec.kappa * (la1 if spec.alpha_index == 1 else la2)
    return out


def qb_constant_calibrate(spec: PotentialSpec, samples: int = 256, seed: int = 1234,
                          max_length: int = 8) -> float:
    """Sampled almost-multiplicativity constant of the potential.

    Draws random word splits (i, j) with lengths up to `max_length` and
    returns the worst ratio max(theta(i)theta(j)/theta(ij), inverse),
    always >= 1.  Heuristic: an empirical maximum, not a certified bound.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    n = spec.system.n_maps
    worst = 0.0
    for _ in range(samples):
        li = int(rng.integers(1, max_length + 1))
        lj = int(rng.integers(1, max_length + 1))
        wi = tuple(int(x) for x in rng.integers(0, n, size=li))
        wj = tuple(int(x) for x in rng.integers(0, n, size=lj))
        gap = (_log_potential_word(spec, wi) + _log_potential_word(spec, wj)
               - _log_potential_word(spec, wi + wj))
        worst = max(worst, abs(gap))
    return float(math.exp(worst))


def pressure_estimate(spec: PotentialSpec, depth: int, *, max_words: int = DEFAULT_MAX_WORDS,
                      threads: int | None = None, qb_samples: int = 256,
                      qb_seed: int = 1234) -> PressureEstimate:
    value = pressure_value(spec, depth, max_words=max_words, threads=threads)
    qb = qb_constant_calibrate(spec, samples=qb_samples, seed=qb_seed)
    return PressureEstimate(depth, value, value - math.log(qb) / depth, value, qb)


def gibbs_level_measure(spec: PotentialSpec, depth: int, *, max_words: int = DEFAULT_MAX_WORDS,
                        threads: int | None = None) -> LevelMeasure:
    """Level weights proportional to the potential, normalized."""
    table = _spec_table(spec, depth, max_words, threads)
    x = leaf_log_potential(spec, table)
    w = np.exp(x - x.max())
    w /= w.sum()
    return LevelMeasure(spec.system.n_maps, depth, w)


def equilibrium_functionals(spec: PotentialSpec, depth: int, *,
                            max_words: int = DEFAULT_MAX_WORDS,
                            threads: int | None = None) -> EquilibriumFunctionals:
    """Entropy, cross-entropy, and Lyapunov sums of the level Gibbs proxy.

    The cross-entropy is taken against the potential's weight model, so the
    potential must carry one.
    """
    if spec.weights is None:
        raise ValueError("cross-entropy requires a potential with a cylinder weight model")
    table = _spec_table(spec, depth, max_words, threads)
    x = leaf_log_potential(spec, table)
    m = float(x.max())
    z = np.exp(x - m)
    total = float(z.sum())
    w = z / total
    log_z = m + math.log(total)
    h = -(float((w * x).sum()) - log_z) / depth
    h_cross = -float((w * table.log_mu).sum()) / depth
    lam1 = float((w * table.log_alpha1).sum()) / depth
    lam2 = float((w * table.log_alpha2).sum()) / depth
    return EquilibriumFunctionals(depth, h, h_cross, lam1, lam2)
