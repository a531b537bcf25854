"""Rate functions of the small-time large deviations and the numeric Legendre transform.

The limiting cgf of both marginals is identically zero on the limiting domain
D_M and infinite outside, so the rate functions are piecewise linear:

    Lambda*_X(x) = u_- x  (x < 0),   u_+ x  (x >= 0)
    Lambda*_V(x) = 2x/xi^2 (x >= 0), +inf   (x < 0)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from feller_ldp.cgf import cgf_eval, expansion_coeffs, f0_prime
from feller_ldp.exceptions import OutsideSupport, ParameterOutOfRange, UnboundedAbove
from feller_ldp.model_core import DomainBounds, Marginal, ModelParams, domain_bounds, limiting_u_pm

logger = logging.getLogger(__name__)

RICHARDSON_TIMES = (0.02, 0.01, 0.005)
LEGENDRE_GRID = 400
TAIL_DOUBLINGS = 60


@dataclass(frozen=True)
class RateValue:
    value: float
    x: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


def rate_x(p: ModelParams, x: float) -> RateValue:
    u_minus, u_plus = limiting_u_pm(p)
    slope = u_minus if x < 0 else u_plus
    return RateValue(slope * x, x)


def rate_v(p: ModelParams, x: float) -> RateValue:
    if x < 0:
        return RateValue(math.inf, x)
    return RateValue(2.0 * x / p.xi ** 2, x)


def rate(p: ModelParams, m: Marginal, x: float) -> RateValue:
    return rate_x(p, x) if Marginal.parse(m) is Marginal.X else rate_v(p, x)


def fw_rate(p: ModelParams, v0: float, x: float) -> RateValue:
    """Marginal rate function at time 1 of the small-noise Feller diffusion started at v0."""
    if v0 < 0:
        raise ParameterOutOfRange('v0', v0, 'v0 >= 0')
    if x < 0:
        return RateValue(math.inf, x)
    return RateValue((2.0 / p.xi ** 2) * (math.sqrt(x) - math.sqrt(v0)) ** 2, x)


def check_support(m: Marginal, x: float) -> Marginal:
    m = Marginal.parse(m)
    if m is Marginal.X and x == 0:
        raise OutsideSupport("x = 0 is not in the support of the X tail asymptotics (x != 0 required)")
    if m is Marginal.V and x <= 0:
        raise OutsideSupport(f"x = {x!r}: the V tail asymptotics need x > 0")
    return m


def alpha0(p: ModelParams, m: Marginal, x: float) -> float:
    m = check_support(m, x)
    if m is Marginal.V:
        return 2.0 / p.xi ** 2
    u_minus, u_plus = limiting_u_pm(p)
    return u_plus if x > 0 else u_minus


def alpha1_closed_form(p: ModelParams, m: Marginal, x: float) -> float:
    """First-order saddlepoint coefficient from expanding the saddlepoint equation in t."""
    m = check_support(m, x)
    a0 = alpha0(p, m, x)
    return -p.mu / x - expansion_coeffs(p, m, a0).f1 / f0_prime(p, m, a0)


def alpha_coeffs(p: ModelParams, m: Marginal, x: float,
                 times: Sequence[float] = RICHARDSON_TIMES) -> tuple[float, float]:
    m = check_support(m, x)
    a0 = alpha0(p, m, x)
    if m is Marginal.V:
        return a0, -p.b / p.xi ** 2 - p.mu / x

    from feller_ldp.saddlepoint import saddle_x

    times = np.asarray(times, dtype=float)
    slopes = np.array([(saddle_x(p, x, t).u_star - a0) / t for t in times])
    # polynomial through the points in t, read at t = 0
    coeffs = np.polyfit(times, slopes, deg=len(times) - 1)
    a1 = float(coeffs[-1])
    logger.debug("alpha_1^X(%g) by Richardson over t=%s: %.12g", x, times.tolist(), a1)
    return a0, a1


@dataclass(frozen=True)
class CgfCurve:
    """A convex function sampled on (lower, upper).

    ``lower_limit``/``upper_limit`` hold the limit of the function at a finite
    endpoint when it stays finite there; ``None`` means no finite limit is known.
    """
    func: Callable[[float], float]
    lower: float
    upper: float
    lower_limit: Optional[float] = None
    upper_limit: Optional[float] = None

    @classmethod
    def zero_on(cls, bounds: DomainBounds) -> 'CgfCurve':
        return cls(
            func=lambda u: 0.0,
            lower=bounds.lower,
            upper=bounds.upper,
            lower_limit=0.0 if math.isfinite(bounds.lower) else None,
            upper_limit=0.0 if math.isfinite(bounds.upper) else None,
        )


def _sample_grid(curve: CgfCurve, n: int) -> np.ndarray:
    lower, upper = curve.lower, curve.upper
    if math.isfinite(lower) and math.isfinite(upper):
        k = np.arange(1, n + 1)
        return lower + (upper - lower) * k / (n + 1)

    width = max(1.0, abs(lower) if math.isfinite(lower) else 0.0, abs(upper) if math.isfinite(upper) else 0.0)
    core_lo = lower + width / (n + 1) if math.isfinite(lower) else -width
    core_hi = upper - width / (n + 1) if math.isfinite(upper) else width
    pieces = [np.linspace(core_lo, core_hi, n)]
    tail = width * 2.0 ** np.arange(1, TAIL_DOUBLINGS + 1)
    if not math.isfinite(lower):
        pieces.insert(0, (core_lo - tail)[::-1])
    if not math.isfinite(upper):
        pieces.append(core_hi + tail)
    return np.concatenate(pieces)


def _diverges(values: np.ndarray) -> bool:
    """Objective increasing over the last three samples without its increments dying out."""
    if len(values) < 3 or not np.all(np.isfinite(values[-3:])):
        return False
    first, second = values[-2] - values[-3], values[-1] - values[-2]
    return first > 0 and second > 0 and second >= 0.75 * first


def legendre_transform(curve: CgfCurve, x: float, n: int = LEGENDRE_GRID,
                       allow_infinite: bool = True) -> RateValue:
    """sup_u {u x - Lambda(u)} over the curve's domain."""
    if n < 100:
        raise ParameterOutOfRange('n', n, 'n >= 100 sample points')
    grid = _sample_grid(curve, n)
    values = np.array([u * x - curve.func(u) for u in grid])

    unbounded_ends = []
    if not math.isfinite(curve.upper) and _diverges(values):
        unbounded_ends.append('+inf')
    if not math.isfinite(curve.lower) and _diverges(values[::-1]):
        unbounded_ends.append('-inf')
    if unbounded_ends:
        if not allow_infinite:
            raise UnboundedAbove(f"u x - Lambda(u) grows without bound toward u -> {unbounded_ends[0]} at x={x:g}")
        return RateValue(math.inf, x)

    finite = np.where(np.isfinite(values), values, -np.inf)
    k = int(np.argmax(finite))
    best = float(finite[k])
    if 0 < k < len(grid) - 1:
        # the maximiser lies between the neighbours even when grid values tie
        refined = minimize_scalar(lambda u: -(u * x - curve.func(u)),
                                  bounds=(grid[k - 1], grid[k + 1]), method='bounded',
                                  options={'xatol': 1e-12 * max(1.0, abs(grid[k])), 'maxiter': 1000})
        if math.isfinite(refined.fun):
            best = max(best, float(-refined.fun))
        logger.debug("legendre refinement at x=%g: %d evaluations", x, refined.nfev)

    candidates = [best]
    if math.isfinite(curve.upper) and curve.upper_limit is not None:
        candidates.append(curve.upper * x - curve.upper_limit)
    if math.isfinite(curve.lower) and curve.lower_limit is not None:
        candidates.append(curve.lower * x - curve.lower_limit)
    return RateValue(max(candidates), x)


@dataclass(frozen=True)
class SteepnessReport:
    domain: DomainBounds
    boundary_slopes: tuple[float, float]
    essentially_smooth: bool
    limit_residuals: tuple[tuple[float, float], ...] = ()


def _boundary_slope(curve: CgfCurve, side: int) -> float:
    edge = curve.upper if side > 0 else curve.lower
    if not math.isfinite(edge):
        # nothing to approach
        return math.inf
    other = curve.lower if side > 0 else curve.upper
    span = (edge - other) if math.isfinite(other) else 1.0 * side
    slopes = []
    for k in range(2, 9):
        gap = abs(span) * 10.0 ** (-k)
        u = edge - side * gap
        h = gap / 10.0
        left, right = curve.func(u - h), curve.func(u + h)
        if not (math.isfinite(left) and math.isfinite(right)):
            return math.inf
        slopes.append(abs(right - left) / (2.0 * h))
    growing = all(b >= a for a, b in zip(slopes, slopes[1:]))
    if growing and slopes[-1] >= 1e3 * max(1.0, slopes[0]):
        return math.inf
    return slopes[-1]


def steepness_of_curve(curve: CgfCurve) -> SteepnessReport:
    bounds = DomainBounds(curve.lower, curve.upper, 0.0)
    slopes = (_boundary_slope(curve, -1), _boundary_slope(curve, +1))
    smooth = curve.lower < curve.upper and all(math.isinf(s) for s in slopes)
    return SteepnessReport(domain=bounds, boundary_slopes=slopes, essentially_smooth=smooth)


def _compact_inside(bounds: DomainBounds, points: int = 51) -> np.ndarray:
    lower = bounds.lower if math.isfinite(bounds.lower) else -bounds.upper
    return np.linspace(0.9 * lower, 0.9 * bounds.upper, points)


def steepness_report(p: ModelParams, m: Marginal, t_grid: Iterable[float]) -> SteepnessReport:
    """Steepness of the limiting cgf, with max |Lambda_M(u, t)| over a compact of D_M for each t."""
    m = Marginal.parse(m)
    t_grid = list(t_grid)
    if not t_grid:
        raise ParameterOutOfRange('t_grid', t_grid, 'a non-empty list of times')

    limit_domain = domain_bounds(p, m, 0.0)
    base = steepness_of_curve(CgfCurve.zero_on(limit_domain))
    grid = _compact_inside(limit_domain)
    residuals = tuple(
        (float(t), max(abs(cgf_eval(p, m, u, t).lam) for u in grid))
        for t in t_grid
    )
    logger.debug("steepness %s: slopes=%s residuals=%s", m.value, base.boundary_slopes, residuals)
    return SteepnessReport(
        domain=limit_domain,
        boundary_slopes=base.boundary_slopes,
        essentially_smooth=base.essentially_smooth,
        limit_residuals=residuals,
    )
