"""Domination certificates via strongly invariant multicones.

A multicone is a finite union of closed angle intervals on the projective
line that every matrix of the tuple maps strictly inside itself.  Its
existence is equivalent to domination (a uniform exponential gap between
the singular values of word products), so the verdict here rests entirely
on `verify_strong_invariance`; the search that produces candidates is
heuristic and may fail on dominated systems, which yields "inconclusive"
rather than "not_dominated".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .matrix2 import PI, AngleInterval, Mat2, projective_image
from .system import AffineIFS

# Interval endpoints closer than this merge into one component.
MERGE_TOL = 1e-10
# Strong invariance demands at least this clearance inside the interior.
INVARIANCE_MARGIN = 1e-10
# Ratio-test threshold above which a failed cone search is read as evidence
# of non-domination rather than a search failure.
NONDOMINATED_TAU = 0.999


def merge_intervals(intervals: Sequence[AngleInterval], tol: float = MERGE_TOL) -> tuple[AngleInterval, ...]:
    """Union of angle intervals as disjoint components, sorted by lo.

    Handles wraparound at pi; raises if the union covers the whole line.
    """
    items = [iv for iv in intervals if iv is not None]
    if not items:
        return ()
    # unroll to the line: phase = lo, extent = width
    spans = sorted((iv.lo, iv.width) for iv in items)
    merged: list[list[float]] = []
    for lo, width in spans:
        if merged and lo <= merged[-1][1] + tol:
            merged[-1][1] = max(merged[-1][1], lo + width)
        else:
            merged.append([lo, lo + width])
    # wraparound: the last component may spill past pi into the leading
    # components; absorb as many as it reaches
    if len(merged) > 1 and merged[-1][1] >= PI + merged[0][0] - tol:
        last_lo, last_hi = merged.pop()
        head = merged.pop(0)
        cur = [last_lo - PI, max(head[1], last_hi - PI)]
        while merged and cur[1] >= merged[0][0] - tol:
            nxt = merged.pop(0)
            cur[1] = max(cur[1], nxt[1])
        merged.insert(0, cur)
    if len(merged) == 1 and merged[0][1] - merged[0][0] >= PI - tol:
        raise ValueError("interval union covers the whole projective line")
    out = sorted(
        (AngleInterval(lo, min(hi - lo, math.nextafter(PI, 0.0))) for lo, hi in merged),
        key=lambda iv: iv.lo,
    )
    return tuple(out)


@dataclass(frozen=True)
class Multicone:
    """Disjoint closed angle intervals whose union is a proper subset of [0, pi)."""

    intervals: tuple[AngleInterval, ...]

    def __post_init__(self):
        if not self.intervals:
            raise ValueError("multicone needs at least one interval")

    @staticmethod
    def from_intervals(intervals: Sequence[AngleInterval], tol: float = MERGE_TOL) -> "Multicone":
        return Multicone(merge_intervals(intervals, tol))

    @property
    def total_width(self) -> float:
        return sum(iv.width for iv in self.intervals)

    def contains_angle(self, theta: float, tol: float = MERGE_TOL) -> bool:
        return any(iv.contains(theta, tol) for iv in self.intervals)

    def contains_strictly(self, other: AngleInterval, margin: float) -> bool:
        """True if `other` lies inside a single component with clearance `margin`."""
        return any(iv.contains_interval(other, margin) for iv in self.intervals)

    def covers(self, other: AngleInterval, tol: float = MERGE_TOL) -> bool:
        return any(iv.contains_interval(other, -tol) for iv in self.intervals)

    def complement(self) -> tuple[AngleInterval, ...]:
        """Closure of the complement: the gaps between the components."""
        ivs = self.intervals
        gaps = []
        for k, iv in enumerate(ivs):
            nxt = ivs[(k + 1) % len(ivs)]
            lo = iv.hi % PI
            width = (nxt.lo - iv.hi) % PI
            if len(ivs) == 1:
                width = PI - iv.width
            if width > MERGE_TOL:
                gaps.append(AngleInterval(lo, width))
        if not gaps:
            raise ValueError("multicone has no complement gaps")
        return tuple(sorted(gaps, key=lambda iv: iv.lo))


@dataclass(frozen=True)
class DominationReport:
    """Outcome of the domination decision.

    status is "dominated", "not_dominated", or "inconclusive"; a missing
    cone with a ratio estimate well below one only means the search budget
    ran out, not that the tuple is undominated.
    """

    status: str
    dominated: bool
    multicone: Multicone | None
    c_est: float
    tau_est: float
    depth_used: int


@dataclass(frozen=True)
class FurstenbergCover:
    """Depth-n outer cover of the Furstenberg direction set."""

    depth: int
    intervals: tuple[AngleInterval, ...]

    @property
    def total_width(self) -> float:
        return sum(iv.width for iv in self.intervals)

    def contains_angle(self, theta: float, tol: float = MERGE_TOL) -> bool:
        return any(iv.contains(theta, tol) for iv in self.intervals)


def verify_strong_invariance(system: AffineIFS, cone: Multicone,
                             margin: float = INVARIANCE_MARGIN) -> bool:
    """Check A_i C subset of the interior of C for every map, with clearance.

    Each interval image must land strictly inside a single component; this
    is the certificate on which every "dominated" verdict rests.
    """
    for m in system.matrices:
        for iv in cone.intervals:
            img = projective_image(m, iv)
            if not cone.contains_strictly(img, margin):
                return False
    return True


def _level_worst_log_ratios(system: AffineIFS, depth: int, max_words: int = 1 << 20) -> np.ndarray:
    """max over depth-n words of log(alpha2/alpha1), for n = 1..depth."""
    from .matrix2 import batch_singular_values

    n = system.n_maps
    if sum(n**k for k in range(1, depth + 1)) > max_words:
        raise ValueError("ratio-test depth exceeds the word budget")
    mats = system.matrix_array()
    letter_ldet = np.array([math.log(abs(m.det())) for m in system.matrices])
    prods = np.eye(2)[None, :, :]
    ldet = np.zeros(1)
    out = np.empty(depth)
    for k in range(depth):
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
        ldet = (ldet[:, None] + letter_ldet[None, :]).reshape(-1)
        a1, _ = batch_singular_values(prods)
        la1 = np.log(a1)
        out[k] = float((ldet - 2.0 * la1).max())
    return out


def domination_ratio_test(system: AffineIFS, depth: int) -> tuple[float, float]:
    """Least-squares fit of the worst alpha2/alpha1 decay rate.

    Fits max over depth-n words of log(alpha2/alpha1) against n and returns
    (C_est, tau_est) with the worst ratio modeled as C_est * tau_est^n.
    """
    if depth < 2:
        raise ValueError("ratio test needs depth >= 2")
    worst = _level_worst_log_ratios(system, depth)
    ns = np.arange(1, depth + 1, dtype=float)
    slope, intercept = np.polyfit(ns, worst, 1)
    return float(math.exp(intercept)), float(math.exp(slope))


def _leading_direction(m: Mat2) -> float:
    """Direction of the major axis of the image ellipse of the unit disc."""
    t = m.as_array()
    mmt = t @ t.T
    return 0.5 * math.atan2(2.0 * mmt[0, 1], mmt[0, 0] - mmt[1, 1]) % PI


def _seed_directions(matrices: Sequence[Mat2], seed_depth: int) -> list[float]:
    import itertools

    seeds = []
    n = len(matrices)
    for length in range(1, seed_depth + 1):
        for word in itertools.product(range(n), repeat=length):
            m = matrices[word[0]]
            for letter in word[1:]:
                m = m @ matrices[letter]
            seeds.append(_leading_direction(m))
    return seeds


def _search_cone(matrices: Sequence[Mat2], max_intervals: int, max_depth: int,
                 seed_depth: int = 3, fatten: float = 0.05) -> Multicone | None:
    """Forward-iterate fattened attracting directions until the union stabilizes.

    Returns an unverified candidate; the caller must run
    `verify_strong_invariance` on it.
    """
    seeds = _seed_directions(matrices, seed_depth)
    try:
        current = merge_intervals(
            [AngleInterval((d - fatten) % PI, 2.0 * fatten) for d in seeds]
        )
    except ValueError:
        return None
    for _ in range(max_depth):
        images = [projective_image(m, iv) for m in matrices for iv in current]
        try:
            new = merge_intervals(list(current) + images)
        except ValueError:
            return None
        if len(new) > max_intervals:
            return None
        grown = not all(
            any(c.contains_interval(iv, -MERGE_TOL) for c in current) for iv in new
        )
        current = new
        if not grown:
            return Multicone(current)
    return None


def _fatten_multicone(cone: Multicone, amount: float) -> Multicone | None:
    try:
        fat = merge_intervals(
            [AngleInterval((iv.lo - amount) % PI, min(iv.width + 2 * amount, PI - MERGE_TOL))
             for iv in cone.intervals]
        )
    except ValueError:
        return None
    if sum(iv.width for iv in fat) >= PI - 1e-6:
        return None
    return Multicone(fat)


def find_invariant_multicone(system: AffineIFS, max_intervals: int = 8,
                             max_depth: int = 32, ratio_depth: int = 10) -> DominationReport:
    """Search for a strongly invariant multicone and certify domination.

    Candidate routes, each followed by verification:
      1. a thin invariant multicone for the inverse tuple, whose complement
         closure is invariant for the forward tuple (and keeps the depth-0
         Furstenberg cover tight);
      2. the first-quadrant interval for tuples of strictly positive matrices;
      3. direct forward search from fattened leading singular directions.

    On failure the ratio test decides between "not_dominated" (worst
    alpha2/alpha1 shows no exponential decay) and "inconclusive".
    """
    candidates: list[Multicone] = []

    inv_cone = _search_cone(system.inverses(), max_intervals, max_depth)
    if inv_cone is not None:
        for pad in (1e-4, 1e-3, 1e-2):
            fat = _fatten_multicone(inv_cone, pad)
            if fat is not None:
                try:
                    candidates.append(Multicone(fat.complement()))
                except ValueError:
                    pass

    if all(min(m.a, m.b, m.c, m.d) > 0.0 for m in system.matrices):
        candidates.append(Multicone((AngleInterval(0.0, 0.5 * PI),)))

    fwd = _search_cone(system.matrices, max_intervals, max_depth)
    if fwd is not None:
        for pad in (1e-6, 1e-4, 1e-3):
            fat = _fatten_multicone(fwd, pad)
            if fat is not None:
                candidates.append(fat)

    c_est, tau_est = domination_ratio_test(system, ratio_depth)
    for cone in candidates:
        if verify_strong_invariance(system, cone):
            return DominationReport("dominated", True, cone, c_est, tau_est, ratio_depth)

    if tau_est >= NONDOMINATED_TAU:
        return DominationReport("not_dominated", False, None, c_est, tau_est, ratio_depth)
    return DominationReport("inconclusive", False, None, c_est, tau_est, ratio_depth)


def _coalesce(intervals: tuple[AngleInterval, ...], cap: int) -> tuple[AngleInterval, ...]:
    """Reduce the component count by closing the narrowest gaps.

    Sound for covers: the union only grows (by the closed gaps), and the
    gaps chosen are the smallest, so the width penalty is minimal.
    """
    n = len(intervals)
    if n <= cap:
        return intervals
    gaps = np.array([(intervals[(k + 1) % n].lo - intervals[k].hi) % PI
                     for k in range(n)])
    closed = set(int(i) for i in np.argsort(gaps)[: n - cap])
    open_gap = next(k for k in range(n) if k not in closed)
    out = []
    chain_start = None
    for step in range(open_gap + 1, open_gap + n + 1):
        k = step % n
        if chain_start is None:
            chain_start = intervals[k]
        if k in closed:
            continue
        width = (intervals[k].hi - chain_start.lo) % PI
        if width == 0.0 and intervals[k] is not chain_start:
            raise ValueError("coalesced cover would fill the projective line")
        out.append(AngleInterval(chain_start.lo, width))
        chain_start = None
    return tuple(sorted(out, key=lambda iv: iv.lo))


def furstenberg_cover(system: AffineIFS, cone: Multicone, depth: int,
                      max_intervals: int = 1024) -> FurstenbergCover:
    """Outer cover of the Furstenberg directions at the given depth.

    Starts from the closure of the complement of the invariant cone and
    pulls it back through the inverse maps depth times.  Components are
    kept as fragments (merged only when they actually overlap) so the
    cover keeps refining; when the fragment count exceeds the budget, the
    narrowest gaps are closed, which over-approximates soundly.
    """
    if not verify_strong_invariance(system, cone):
        raise ValueError("cone is not strongly invariant for the system")
    inverses = system.inverses()
    current = cone.complement()
    for _ in range(depth):
        images = [projective_image(m, iv) for m in inverses for iv in current]
        current = _coalesce(merge_intervals(images), max_intervals)
    return FurstenbergCover(depth, current)
