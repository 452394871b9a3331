"""L^q-spectrum, its derivative by two routes, and the Legendre spectrum.

tau(q) = (q-1) s_q where s_q is the unique zero of s -> P(psi^{q,s}); the
zero exists and is unique because the pressure is strictly monotone in s
with the sign of (1-q).  tau'(q) is computed both by central differences
and by the closed-form expression in the equilibrium-state functionals,
whose branch depends on which unit interval s_q falls in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .pressure import (
    DEFAULT_MAX_WORDS,
    EquilibriumFunctionals,
    PotentialSpec,
    equilibrium_functionals,
    pressure_value,
)
from .symbolic import CylinderWeightModel
from .system import AffineIFS

# s_q closer than this to a regime seam {1, 2} is flagged "boundary".
REGIME_BOUNDARY_TOL = 1e-6
# Default half-width of the excluded band around q = 1.
Q_EXCLUSION = 0.02
S_BRACKET_START = 4.0
S_BRACKET_MAX = 64.0

REGIMES = ("(0,1)", "(1,2)", "(2,inf)")


class RegimeBoundaryError(RuntimeError):
    """s_q sits on a seam between singular-value regimes; no derivative."""


def regime_of(s: float, tol: float = REGIME_BOUNDARY_TOL) -> str:
    if abs(s - 1.0) < tol or abs(s - 2.0) < tol:
        return "boundary"
    if s < 1.0:
        return "(0,1)"
    if s < 2.0:
        return "(1,2)"
    return "(2,inf)"


def solve_sq(system: AffineIFS, weights: CylinderWeightModel, q: float, depth: int,
             tol: float = 1e-9, *, max_words: int = DEFAULT_MAX_WORDS,
             threads: int | None = None) -> float:
    """Unique root of s -> P_n(psi^{q,s}) by bisection.

    The bracket is grown by doubling from s = 4; the stopping rule demands
    both a small s-interval and a small residual pressure relative to the
    local slope scale |1-q| * |log max alpha1|, which equidistributes the
    error in s.
    """
    if q == 1.0:
        raise ValueError("undefined, use tau(1)=0")
    if tol <= 0.0:
        raise ValueError("tol must be positive")

    def P(s: float) -> float:
        return pressure_value(PotentialSpec.psi(system, weights, q, s), depth,
                              max_words=max_words, threads=threads)

    slope_scale = abs(1.0 - q) * abs(math.log(system.max_norm))
    decreasing = q < 1.0

    f_lo = P(0.0)
    if f_lo == 0.0:
        return 0.0
    if (f_lo < 0.0) == decreasing:
        # root at the boundary of the admissible range: P already has the
        # far-side sign at s = 0 (possible only for degenerate systems)
        return 0.0
    hi = S_BRACKET_START
    while True:
        f_hi = P(hi)
        if (f_hi < 0.0) == decreasing and f_hi != 0.0:
            break
        if hi >= S_BRACKET_MAX:
            raise RuntimeError(f"no sign change in s below {S_BRACKET_MAX}")
        hi *= 2.0
    lo = 0.0
    mid = 0.5 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = P(mid)
        if hi - lo < tol and abs(f_mid) <= tol * slope_scale:
            break
        if f_mid == 0.0:
            break
        if (f_mid < 0.0) == decreasing:
            hi = mid
        else:
            lo = mid
    return mid


def tau(system: AffineIFS, weights: CylinderWeightModel, q: float, depth: int,
        tol: float = 1e-9, **kw) -> float:
    """The L^q-spectrum (q-1) s_q, with tau(1) = 0 exactly."""
    if q == 1.0:
        return 0.0
    return (q - 1.0) * solve_sq(system, weights, q, depth, tol, **kw)


def tau_prime_fd(system: AffineIFS, weights: CylinderWeightModel, q: float, depth: int,
                 step: float = 1e-3, tol: float = 1e-11, **kw) -> float:
    """Central-difference derivative of tau; refuses to straddle q = 1."""
    if step <= 0.0:
        raise ValueError("step must be positive")
    if (q - step - 1.0) * (q + step - 1.0) <= 0.0:
        raise ValueError("difference stencil straddles q = 1")
    t_plus = tau(system, weights, q + step, depth, tol, **kw)
    t_minus = tau(system, weights, q - step, depth, tol, **kw)
    return (t_plus - t_minus) / (2.0 * step)


def _tau_prime_from_functionals(f: EquilibriumFunctionals, regime: str) -> float:
    if regime == "(0,1)":
        return -f.h_cross / f.lambda1
    if regime == "(1,2)":
        return 1.0 - (f.h_cross + f.lambda1) / f.lambda2
    return -2.0 * f.h_cross / (f.lambda1 + f.lambda2)


def tau_prime_formula(system: AffineIFS, weights: CylinderWeightModel, q: float, depth: int,
                      tol: float = 1e-9, **kw) -> tuple[float, str, EquilibriumFunctionals]:
    """tau'(q) from the equilibrium functionals of psi^{q, s_q}.

    Returns (value, regime, functionals).  Raises RegimeBoundaryError when
    s_q sits within REGIME_BOUNDARY_TOL of a seam, where the derivative
    formula is not available.
    """
    if q == 1.0:
        raise ValueError("undefined, use tau(1)=0")
    s_q = solve_sq(system, weights, q, depth, tol, **kw)
    regime = regime_of(s_q)
    if regime == "boundary":
        raise RegimeBoundaryError(f"s_q = {s_q} is on a regime seam")
    f = equilibrium_functionals(PotentialSpec.psi(system, weights, q, s_q), depth, **kw)
    return _tau_prime_from_functionals(f, regime), regime, f


def legendre_point(system: AffineIFS, weights: CylinderWeightModel, q: float, depth: int,
                   tol: float = 1e-9, **kw) -> tuple[float, float]:
    """(alpha, f) = (tau'(q), q tau'(q) - tau(q)) on the Legendre curve.

    When alpha and s_q share a regime interval, (q-1) tau'(q) <= tau(q)
    must hold (equivalently f <= alpha: the dimension is dominated by the
    cross-dimension); violations raise.
    """
    alpha, regime, _ = tau_prime_formula(system, weights, q, depth, tol, **kw)
    s_q = solve_sq(system, weights, q, depth, tol, **kw)
    f_val = q * alpha - (q - 1.0) * s_q
    if regime_of(alpha) == regime and (q - 1.0) * (alpha - s_q) > 1e-9:
        raise RuntimeError(f"(q-1) tau'(q) exceeds tau(q): alpha {alpha}, s_q {s_q}")
    return alpha, f_val


@dataclass(frozen=True)
class LyapunovDimensionResult:
    value: float
    branch: str  # which of the three expressions attains the min
    consistent: bool  # min branch matches the regime of its own value


def _check_exponents(h: float, lambda1: float, lambda2: float) -> None:
    if not (lambda2 <= lambda1 < 0.0):
        raise ValueError("need lambda2 <= lambda1 < 0 (contractive system)")
    if h < 0.0:
        raise ValueError("entropy must be nonnegative")


def lyapunov_dimension(h: float, lambda1: float, lambda2: float) -> LyapunovDimensionResult:
    """Three-branch minimum with a branch/regime consistency flag.

    For genuine invariant measures the minimizing branch agrees with the
    regime of its value; finite-level proxies can disagree, and the flag
    surfaces that instead of hiding it.
    """
    _check_exponents(h, lambda1, lambda2)
    cands = {
        "(0,1)": -h / lambda1,
        "(1,2)": 1.0 - (h + lambda1) / lambda2,
        "(2,inf)": -2.0 * h / (lambda1 + lambda2),
    }
    branch = min(cands, key=cands.get)
    value = cands[branch]
    return LyapunovDimensionResult(value, branch, regime_of(value) == branch or
                                   (branch == "(0,1)" and value == 0.0))


def lyapunov_dimension_root(h: float, lambda1: float, lambda2: float) -> float:
    """Branch-consistent Lyapunov dimension: the root of h + Lambda(phi^s) = 0.

    Continuous and piecewise in s; this is the value the exact-dimension
    statements use.
    """
    _check_exponents(h, lambda1, lambda2)
    s1 = -h / lambda1
    if s1 <= 1.0:
        return s1
    s2 = 1.0 - (h + lambda1) / lambda2
    if s2 <= 2.0:
        return s2
    return -2.0 * h / (lambda1 + lambda2)


def lyapunov_cross_dimension(h_cross: float, lambda1: float, lambda2: float) -> LyapunovDimensionResult:
    """Same formula with the cross-entropy in place of the entropy."""
    return lyapunov_dimension(h_cross, lambda1, lambda2)


def affinity_dimension(system: AffineIFS, depth: int, tol: float = 1e-9, *,
                       max_words: int = DEFAULT_MAX_WORDS, threads: int | None = None) -> float:
    """Zero of s -> P_n(phi^s); strictly decreasing, so plain bisection."""

    def P(s: float) -> float:
        return pressure_value(PotentialSpec.svf(system, s), depth,
                              max_words=max_words, threads=threads)

    slope_scale = abs(math.log(system.max_norm))
    f_lo = P(0.0)
    if f_lo <= 0.0:
        return 0.0
    hi = S_BRACKET_START
    while P(hi) >= 0.0:
        hi *= 2.0
        if hi > S_BRACKET_MAX:
            raise RuntimeError(f"no sign change in s below {S_BRACKET_MAX}")
    lo = 0.0
    mid = 0.5 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = P(mid)
        if hi - lo < tol and abs(f_mid) <= tol * slope_scale:
            break
        if f_mid < 0.0:
            hi = mid
        else:
            lo = mid
    return mid


def depth_extrapolate(f: Callable[[int], float], depth: int) -> float:
    """Linear-in-1/n extrapolation from depths (d, 2d): 2 f(2d) - f(d).

    Exact for values converging like c/n; no rate beyond that is claimed.
    """
    return 2.0 * f(2 * depth) - f(depth)


@dataclass(frozen=True)
class SpectrumPoint:
    q: float
    s_q: float = math.nan
    tau: float = math.nan
    tau_prime_fd: float = math.nan
    tau_prime_formula: float = math.nan
    f: float = math.nan
    regime: str = ""
    functionals: EquilibriumFunctionals | None = None
    status: str = "ok"


@dataclass
class SpectrumTable:
    points: list[SpectrumPoint]
    depth: int
    tol: float
    fd_step: float
    metadata: dict = field(default_factory=dict)

    def ok_points(self) -> list[SpectrumPoint]:
        return [p for p in self.points if p.status == "ok"]

    def concavity_violation(self) -> float:
        """Largest positive second difference of tau over the q grid.

        tau is concave, so this should be at most roundoff away from zero
        on grids that stay within one regime.
        """
        pts = self.ok_points()
        worst = 0.0
        for a, b, c in zip(pts, pts[1:], pts[2:]):
            d1 = (b.tau - a.tau) / (b.q - a.q)
            d2 = (c.tau - b.tau) / (c.q - b.q)
            worst = max(worst, d2 - d1)
        return worst


def spectrum_table(system: AffineIFS, weights: CylinderWeightModel, q_grid: Sequence[float],
                   depth: int, tol: float = 1e-9, fd_step: float = 1e-3,
                   q_exclusion: float = Q_EXCLUSION, **kw) -> SpectrumTable:
    """Per-q spectrum rows with both derivative routes and regime flags.

    Failures are recorded per point in `status`; the table is emitted
    regardless.  Points inside the excluded band around q = 1 are marked,
    not computed.
    """
    points: list[SpectrumPoint] = []
    for q in q_grid:
        q = float(q)
        if abs(q - 1.0) < q_exclusion:
            points.append(SpectrumPoint(q, status="excluded: q = 1 band"))
            continue
        try:
            s_q = solve_sq(system, weights, q, depth, tol, **kw)
            t = (q - 1.0) * s_q
            regime = regime_of(s_q)
            if regime == "boundary":
                points.append(SpectrumPoint(q, s_q, t, regime="boundary", status="boundary"))
                continue
            formula, _, funcs = tau_prime_formula(system, weights, q, depth, tol, **kw)
            try:
                fd = tau_prime_fd(system, weights, q, depth, fd_step, min(tol, 1e-10), **kw)
            except ValueError:
                fd = math.nan
            f_val = q * formula - t
            points.append(SpectrumPoint(q, s_q, t, fd, formula, f_val, regime, funcs))
        except Exception as exc:  # per-point failure markers, table still emitted
            points.append(SpectrumPoint(q, status=f"error: {exc}"))
    return SpectrumTable(points, depth, tol, fd_step)
