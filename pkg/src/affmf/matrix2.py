"""Exact-shape 2x2 linear algebra and the projective (angle) action.

Matrices are tiny value types, so everything here is closed-form: singular
values come from the half-sum/half-difference decomposition of the matrix
(no iterative SVD), and the action on the projective line [0, pi) is the
endpoint image of angle intervals with orientation given by sign(det).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Containment tests on the projective line use this slack (radians).
ANGLE_TOL = 1e-12

PI = math.pi


class NonInvertibleError(ValueError):
    """An operation required an invertible matrix."""


@dataclass(frozen=True)
class Mat2:
    """Row-major 2x2 real matrix ((a, b), (c, d))."""

    a: float
    b: float
    c: float
    d: float

    @staticmethod
    def identity() -> "Mat2":
        return Mat2(1.0, 0.0, 0.0, 1.0)

    @staticmethod
    def diagonal(x: float, y: float) -> "Mat2":
        return Mat2(float(x), 0.0, 0.0, float(y))

    @staticmethod
    def rotation(angle: float, scale: float = 1.0) -> "Mat2":
        co, si = scale * math.cos(angle), scale * math.sin(angle)
        return Mat2(co, -si, si, co)

    @staticmethod
    def from_array(arr) -> "Mat2":
        m = np.asarray(arr, dtype=float)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 array, got shape {m.shape}")
        return Mat2(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float)

    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "Mat2":
        det = self.det()
        if det == 0.0:
            raise NonInvertibleError("non-invertible")
        return Mat2(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def apply(self, v: Sequence[float]) -> tuple[float, float]:
        x, y = v
        return (self.a * x + self.b * y, self.c * x + self.d * y)

    def operator_norm(self) -> float:
        # alpha1 directly; defined for singular matrices too
        e = 0.5 * (self.a + self.d)
        f = 0.5 * (self.a - self.d)
        g = 0.5 * (self.c + self.b)
        h = 0.5 * (self.c - self.b)
        return math.hypot(e, h) + math.hypot(f, g)


def singular_values(m: Mat2) -> tuple[float, float]:
    """Singular values (alpha1, alpha2) of an invertible 2x2 matrix.

    These are the semi-axis lengths of the image of the unit disc, with
    alpha1 >= alpha2 > 0 and alpha1*alpha2 = |det|.  Uses the stable
    half-sum/half-difference form, which has no cancellation under the
    square roots.
    """
    if m.det() == 0.0:
        raise NonInvertibleError("non-invertible")
    e = 0.5 * (m.a + m.d)
    f = 0.5 * (m.a - m.d)
    g = 0.5 * (m.c + m.b)
    h = 0.5 * (m.c - m.b)
    q = math.hypot(e, h)
    r = math.hypot(f, g)
    return q + r, abs(q - r)


def batch_singular_values(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized `singular_values` for an (n, 2, 2) stack."""
    e = 0.5 * (mats[..., 0, 0] + mats[..., 1, 1])
    f = 0.5 * (mats[..., 0, 0] - mats[..., 1, 1])
    g = 0.5 * (mats[..., 1, 0] + mats[..., 0, 1])
    h = 0.5 * (mats[..., 1, 0] - mats[..., 0, 1])
    q = np.hypot(e, h)
    r = np.hypot(f, g)
    return q + r, np.abs(q - r)


def word_product(matrices: Sequence[Mat2], word: Iterable[int]) -> Mat2:
    """Left-to-right product over the letters of `word` (0-based indices).

    The empty word gives the identity.  The fold order matches the
    enumeration kernel (extend on the right), so prefix products agree
    bit-for-bit with the kernel's running products.
    """
    m = Mat2.identity()
    n = len(matrices)
    for letter in word:
        if not 0 <= letter < n:
            raise ValueError(f"letter {letter} out of range for {n} maps")
        m = m @ matrices[letter]
    return m


def normalize_angle(theta: float) -> float:
    """Representative of a projective direction in [0, pi)."""
    t = math.fmod(theta, PI)
    if t < 0.0:
        t += PI
    if t >= PI:  # fmod rounding can land exactly on pi
        t -= PI
    return t


@dataclass(frozen=True)
class AngleInterval:
    """Closed interval of directions on the projective line.

    Stored as (lo, width) with lo in [0, pi) and 0 <= width < pi, so an
    interval crossing pi keeps lo near pi and wraps around.
    """

    lo: float
    width: float

    def __post_init__(self):
        object.__setattr__(self, "lo", normalize_angle(self.lo))
        if self.width < 0.0:
            raise ValueError("interval width must be nonnegative")
        if self.width >= PI:
            raise ValueError("interval must be a proper subset of the projective line")

    @property
    def hi(self) -> float:
        """Upper endpoint, possibly >= pi (unwrapped)."""
        return self.lo + self.width

    def endpoints(self) -> tuple[float, float]:
        return self.lo, normalize_angle(self.hi)

    def midpoint(self) -> float:
        return normalize_angle(self.lo + 0.5 * self.width)

    def contains(self, theta: float, tol: float = ANGLE_TOL) -> bool:
        offset = (theta - self.lo) % PI
        return offset <= self.width + tol or offset >= PI - tol

    def contains_interval(self, other: "AngleInterval", margin: float = 0.0) -> bool:
        """True if `other` sits inside this interval with the given margin.

        With margin > 0 this tests containment in the interior, shrunk by
        `margin` on both sides.
        """
        offset = (other.lo - self.lo) % PI
        if offset >= PI - ANGLE_TOL:
            offset -= PI
        return offset >= margin - ANGLE_TOL and offset + other.width <= self.width - margin + ANGLE_TOL


def projective_angle(m: Mat2, theta: float) -> float:
    """Direction of M*v for a vector v with direction `theta`."""
    x, y = math.cos(theta), math.sin(theta)
    return normalize_angle(math.atan2(m.c * x + m.d * y, m.a * x + m.b * y))


def projective_image(m: Mat2, interval: AngleInterval) -> AngleInterval:
    """Image of an angle interval under the projective action of `m`.

    The projective action is a circle homeomorphism, so the image is the
    arc between the endpoint images, traversed with the orientation given
    by sign(det m).
    """
    det = m.det()
    if det == 0.0:
        raise NonInvertibleError("non-invertible")
    a = projective_angle(m, interval.lo)
    b = projective_angle(m, interval.hi)
    if det > 0:
        lo, width = a, (b - a) % PI
    else:
        lo, width = b, (a - b) % PI
    if interval.width <= ANGLE_TOL and width > 0.5 * PI:
        # endpoint rounding jitter on a degenerate interval
        width = 0.0
    if width >= PI:
        width = math.nextafter(PI, 0.0)
    return AngleInterval(lo, width)
