"""Planar realization: canonical points, enclosures, separation certificates.

Certification is one-sided and sound: pieces of the attractor are
over-approximated by parallelogram images of a ball that provably contains
the attractor, so a positive gap between the approximations certifies a
positive gap between the pieces.  Failure to certify is reported as
"inconclusive", never silently upgraded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from shapely.geometry import Polygon

from .cones import FurstenbergCover
from .system import AffineIFS

# Two sampled attractor points closer than this count as a shared point.
COINCIDENCE_TOL = 1e-12


@dataclass(frozen=True)
class Enclosure:
    """Closed ball certified to contain the attractor."""

    center: tuple[float, float]
    radius: float

    def contains(self, point: Sequence[float], slack: float = 1e-9) -> bool:
        dx = point[0] - self.center[0]
        dy = point[1] - self.center[1]
        return math.hypot(dx, dy) <= self.radius + slack


def enclosure(system: AffineIFS) -> Enclosure:
    """B(0, R0) with R0 = max|v| / (1 - max norm) contains the attractor."""
    return Enclosure((0.0, 0.0), system.outer_radius)


@dataclass(frozen=True)
class SeparationReport:
    kind: str  # "strong" | "projective_strong"
    satisfied: str  # "yes" | "no" | "inconclusive"
    margin: float
    depth: int
    detail: dict = field(default_factory=dict, compare=False)


def canonical_point(system: AffineIFS, word: Sequence[int]) -> tuple[float, float]:
    """phi_word(0); within alpha1(word) * R0 of the attractor point of any extension."""
    if len(word) < 1:
        raise ValueError("word must be nonempty")
    x, y = 0.0, 0.0
    for letter in reversed(tuple(word)):
        x, y = system.apply(letter, (x, y))
    return (x, y)


def canonical_points(system: AffineIFS, letters: np.ndarray) -> np.ndarray:
    """Vectorized canonical points for an (n_words, depth) letter array."""
    mats = system.matrix_array()
    trans = system.translation_array()
    pts = np.zeros((letters.shape[0], 2))
    for j in range(letters.shape[1] - 1, -1, -1):
        sel = letters[:, j]
        a = mats[sel]
        pts = np.einsum("nij,nj->ni", a, pts) + trans[sel]
    return pts


def attractor_sample(system: AffineIFS, count: int, seed: int = 0,
                     burn_in: int = 50) -> np.ndarray:
    """Chaos game with uniform letter choice; deterministic in the seed."""
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(np.random.Philox(key=seed))
    letters = rng.integers(0, system.n_maps, size=count + burn_in)
    coeffs = [(m.a, m.b, m.c, m.d) for m in system.matrices]
    trans = system.translations
    out = np.empty((count, 2))
    x = y = 0.0
    for k, letter in enumerate(letters):
        a, b, c, d = coeffs[letter]
        vx, vy = trans[letter]
        x, y = a * x + b * y + vx, c * x + d * y + vy
        if k >= burn_in:
            out[k - burn_in, 0] = x
            out[k - burn_in, 1] = y
    return out


def _affine_words(system: AffineIFS, depth: int) -> tuple[np.ndarray, np.ndarray]:
    """(products, offsets) of phi_w over all depth-d words, lex order."""
    mats = system.matrix_array()
    trans = system.translation_array()
    n = system.n_maps
    prods = np.eye(2)[None, :, :]
    offs = np.zeros((1, 2))
    for _ in range(depth):
        new_p = np.einsum("nij,ljk->nlik", prods, mats).reshape(-1, 2, 2)
        new_o = (offs[:, None, :] + np.einsum("nij,lj->nli", prods, trans)).reshape(-1, 2)
        prods, offs = new_p, new_o
    return prods, offs


def _piece_parallelograms(system: AffineIFS, depth: int) -> np.ndarray:
    """Corner arrays (n_words, 4, 2) of phi_w([-R0, R0]^2), lex word order.

    The square contains the attractor ball, so each parallelogram contains
    the corresponding refined piece of the attractor.
    """
    r0 = system.outer_radius
    prods, offs = _affine_words(system, depth)
    corners = np.array([[-r0, -r0], [r0, -r0], [r0, r0], [-r0, r0]])
    return offs[:, None, :] + np.einsum("nij,cj->nci", prods, corners)


def _min_polygon_gap(quads_a: np.ndarray, quads_b: np.ndarray) -> float:
    """Minimum distance between two unions of convex quadrilaterals.

    Prunes with bounding-circle lower bounds before exact polygon
    distances; returns 0.0 as soon as an overlap is found.
    """
    ca = quads_a.mean(axis=1)
    cb = quads_b.mean(axis=1)
    ra = np.sqrt(((quads_a - ca[:, None, :]) ** 2).sum(axis=2)).max(axis=1)
    rb = np.sqrt(((quads_b - cb[:, None, :]) ** 2).sum(axis=2)).max(axis=1)
    centers = np.sqrt(((ca[:, None, :] - cb[None, :, :]) ** 2).sum(axis=2))
    bound = centers - ra[:, None] - rb[None, :]
    order = np.argsort(bound, axis=None)
    best = math.inf
    polys_a: dict[int, Polygon] = {}
    polys_b: dict[int, Polygon] = {}
    for flat in order:
        i, j = divmod(int(flat), quads_b.shape[0])
        if bound[i, j] >= best:
            break
        pa = polys_a.setdefault(i, Polygon(quads_a[i]))
        pb = polys_b.setdefault(j, Polygon(quads_b[j]))
        d = pa.distance(pb)
        if pa.intersects(pb):
            return 0.0
        best = min(best, d)
        if best == 0.0:
            return 0.0
    return best


def _sampled_piece_points(system: AffineIFS, depth: int) -> list[np.ndarray]:
    """Exact attractor-adjacent points per piece: canonical points of depth-d words."""
    import itertools

    n = system.n_maps
    letters = np.array(list(itertools.product(range(n), repeat=depth)), dtype=int)
    pts = canonical_points(system, letters)
    block = n ** (depth - 1)
    return [pts[i * block:(i + 1) * block] for i in range(n)]


def check_strong_separation(system: AffineIFS, depth: int = 8) -> SeparationReport:
    """Certify pairwise disjointness of the first-level pieces.

    yes: the depth-d parallelogram enclosures of every pair of pieces have
    a positive gap (sound certificate).  no: sampled attractor points of
    two pieces coincide within 1e-12.  Otherwise inconclusive.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    n = system.n_maps
    if n < 2:
        raise ValueError("separation needs at least two maps")
    quads = _piece_parallelograms(system, depth)
    block = n ** (depth - 1)
    pieces = [quads[i * block:(i + 1) * block] for i in range(n)]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    gaps = {}
    for i, j in pairs:
        gaps[(i, j)] = _min_polygon_gap(pieces[i], pieces[j])
    margin = min(gaps.values())
    if margin > 0.0:
        return SeparationReport("strong", "yes", margin, depth, {"pair_gaps": gaps})

    # coincidence sampling: deepest level whose word count stays moderate
    sample_depth = max(2, min(max(depth, 8),
                              int(math.log(16384) / math.log(n))))
    samples = _sampled_piece_points(system, sample_depth)
    worst = math.inf
    for i, j in pairs:
        d2 = ((samples[i][:, None, :] - samples[j][None, :, :]) ** 2).sum(axis=2)
        worst = min(worst, math.sqrt(float(d2.min())))
    if worst < COINCIDENCE_TOL:
        return SeparationReport("strong", "no", 0.0, depth,
                                {"pair_gaps": gaps, "closest_sample_gap": worst})
    return SeparationReport("strong", "inconclusive", 0.0, depth,
                            {"pair_gaps": gaps, "closest_sample_gap": worst})


def projection_axis(angle: float) -> np.ndarray:
    """Unit vector spanning the orthocomplement of the direction `angle`.

    A direction V at angle theta has V-perp spanned by (-sin theta,
    cos theta); projection is the scalar product with this vector.
    """
    return np.array([-math.sin(angle), math.cos(angle)])


def check_projective_strong_separation(system: AffineIFS, cover: FurstenbergCover,
                                       depth: int = 8,
                                       angle_resolution: float = 0.02) -> SeparationReport:
    """Certify disjoint projections of piece hulls along all covered directions.

    Cover intervals wider than `angle_resolution` are subdivided (the
    direction set can be a whole interval); in each piece the gap is
    sampled at both endpoints and the midpoint and certified with the
    Lipschitz slack 2*R0*(width/2), which dominates the drift of a
    projection under a direction perturbation.
    """
    n = system.n_maps
    if n < 2:
        raise ValueError("separation needs at least two maps")
    r0 = system.outer_radius
    quads = _piece_parallelograms(system, depth)
    corners = quads.reshape(-1, 2)
    block = quads.shape[0] // n * 4
    detail: dict = {"interval_margins": []}
    certified = math.inf

    def sampled_gap(theta: float) -> float:
        axis = projection_axis(theta)
        t = corners @ axis
        spans = [(t[i * block:(i + 1) * block].min(), t[i * block:(i + 1) * block].max())
                 for i in range(n)]
        worst = math.inf
        for i in range(n):
            for j in range(i + 1, n):
                lo_i, hi_i = spans[i]
                lo_j, hi_j = spans[j]
                worst = min(worst, max(lo_j - hi_i, lo_i - hi_j))
        return worst

    for iv in cover.intervals:
        pieces = max(1, math.ceil(iv.width / angle_resolution))
        step = iv.width / pieces
        cert = math.inf
        for k in range(pieces):
            lo = iv.lo + k * step
            sampled = min(sampled_gap(lo), sampled_gap(lo + 0.5 * step),
                          sampled_gap(lo + step))
            cert = min(cert, sampled - (2.0 * r0) * (step / 2.0))
        detail["interval_margins"].append((iv.lo, iv.width, cert))
        certified = min(certified, cert)
    if cover.depth == 0:
        detail["warning"] = "cover not refined (depth 0); certificate is very coarse"
    if certified > 0.0:
        return SeparationReport("projective_strong", "yes", certified, depth, detail)
    strong = check_strong_separation(system, depth)
    if strong.satisfied == "no":
        # shared points kill projective separation along every direction
        return SeparationReport("projective_strong", "no", 0.0, depth, detail)
    return SeparationReport("projective_strong", "inconclusive", 0.0, depth, detail)


@dataclass(frozen=True)
class ProjectedDensity:
    histogram: np.ndarray
    bin_edges: np.ndarray
    sup_density: float


def projected_density(points: np.ndarray, weights: np.ndarray, v_angle: float,
                      bins: int = 64) -> ProjectedDensity:
    """Histogram of the projection onto the orthocomplement of `v_angle`.

    sup_density is max bin mass over bin width: heuristic evidence about
    the boundedness of the projected density, not a certificate.
    """
    if bins < 8:
        raise ValueError("need at least 8 bins")
    t = np.asarray(points, dtype=float) @ projection_axis(v_angle)
    if float(t.max() - t.min()) == 0.0:
        raise ValueError("degenerate point set: all projections coincide")
    hist, edges = np.histogram(t, bins=bins, weights=np.asarray(weights, dtype=float))
    width = edges[1] - edges[0]
    return ProjectedDensity(hist, edges, float(hist.max() / width))
