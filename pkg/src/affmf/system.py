"""Planar affine iterated function systems."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .matrix2 import Mat2, singular_values, word_product


@dataclass(frozen=True)
class AffineIFS:
    """Tuple of contractive invertible affine planar maps x -> A_i x + v_i.

    Matrices must be invertible with operator norm < 1.  The attractor is
    contained in the ball of radius `outer_radius` around the origin.
    """

    matrices: tuple[Mat2, ...]
    translations: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.matrices) != len(self.translations):
            raise ValueError("matrices and translations must have equal length")
        if not self.matrices:
            raise ValueError("need at least one map")
        for i, m in enumerate(self.matrices):
            if m.det() == 0.0:
                raise ValueError(f"matrix {i} is singular")
            if m.operator_norm() >= 1.0:
                raise ValueError(f"matrix {i} is not contractive (norm >= 1)")
        object.__setattr__(
            self, "translations", tuple((float(x), float(y)) for x, y in self.translations)
        )

    @staticmethod
    def from_arrays(matrices: Iterable, translations: Iterable) -> "AffineIFS":
        mats = tuple(Mat2.from_array(m) for m in matrices)
        vecs = tuple((float(v[0]), float(v[1])) for v in translations)
        return AffineIFS(mats, vecs)

    @property
    def n_maps(self) -> int:
        return len(self.matrices)

    @property
    def max_norm(self) -> float:
        return max(m.operator_norm() for m in self.matrices)

    @property
    def min_conorm(self) -> float:
        return min(singular_values(m)[1] for m in self.matrices)

    @property
    def outer_radius(self) -> float:
        """Radius R0 with attractor contained in B(0, R0)."""
        vmax = max(math.hypot(x, y) for x, y in self.translations)
        return vmax / (1.0 - self.max_norm)

    def matrix_array(self) -> np.ndarray:
        return np.stack([m.as_array() for m in self.matrices])

    def translation_array(self) -> np.ndarray:
        return np.array(self.translations, dtype=float)

    def inverses(self) -> tuple[Mat2, ...]:
        return tuple(m.inverse() for m in self.matrices)

    def word_product(self, word: Sequence[int]) -> Mat2:
        return word_product(self.matrices, word)

    def apply(self, letter: int, point: Sequence[float]) -> tuple[float, float]:
        x, y = self.matrices[letter].apply(point)
        vx, vy = self.translations[letter]
        return (x + vx, y + vy)
