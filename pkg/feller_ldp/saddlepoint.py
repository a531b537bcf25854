"""Time-dependent saddlepoints: the unique root u* of d/du Lambda_M(u, t) = x."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from feller_ldp.cgf import BOUNDARY_MARGIN, cgf_derivative
from feller_ldp.exceptions import (
    NonPositiveSaddle,
    OutsideSupport,
    ParameterOutOfRange,
    RootNotBracketed,
    TooCloseToBoundary,
)
from feller_ldp.model_core import Marginal, ModelParams, domain_bounds
from feller_ldp.rate_functions import alpha0, alpha1_closed_form

logger = logging.getLogger(__name__)

BRACKET_SHRINK = 1e-8
SHRINK_LADDER = (1.0, 0.1, 0.01)
WARM_START_FRACTION = 0.05
XTOL = 1e-14
RTOL = 4 * np.finfo(float).eps
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class SaddlepointResult:
    u_star: float
    residual: float
    bracket: tuple[float, float]
    t: float
    x: float
    marginal: Marginal = Marginal.X


def _check_time(t: float):
    if t <= 0:
        raise ParameterOutOfRange('t', t, 't > 0')


def _report_residual(result: SaddlepointResult) -> SaddlepointResult:
    if result.residual > RESIDUAL_TOL * max(1.0, abs(result.x)):
        logger.warning("saddlepoint residual %.3e above tolerance (m=%s x=%g t=%g)",
                       result.residual, result.marginal.value, result.x, result.t)
    return result


def saddle_v(p: ModelParams, x: float, t: float) -> SaddlepointResult:
    """Closed-form u*_V(x, t) = (2t/xi^2)(b/(e^{bt} - 1) - a/x)."""
    if x <= 0:
        raise OutsideSupport(f"saddle_v needs x > 0, got {x!r}")
    _check_time(t)
    u_star = (2.0 * t / p.xi ** 2) * (p.b / math.expm1(p.b * t) - p.a / x)
    bounds = domain_bounds(p, Marginal.V, t)
    residual = abs(cgf_derivative(p, Marginal.V, u_star, t, 1) - x)
    return _report_residual(SaddlepointResult(
        u_star=u_star, residual=residual, bracket=(bounds.lower, bounds.upper),
        t=t, x=x, marginal=Marginal.V,
    ))


def _solve_x(p: ModelParams, x: float, t: float, guess: float = None) -> SaddlepointResult:
    bounds = domain_bounds(p, Marginal.X, t)

    def objective(u):
        return cgf_derivative(p, Marginal.X, u, t, 1) - x

    last_error = None
    for factor in SHRINK_LADDER:
        eps = max(BRACKET_SHRINK * bounds.width * factor, 3.0 * BOUNDARY_MARGIN)
        lo, hi = bounds.lower + eps, bounds.upper - eps
        try:
            f_lo, f_hi = objective(lo), objective(hi)
        except TooCloseToBoundary as e:
            last_error = e
            continue
        if not (f_lo < 0 < f_hi):
            last_error = RootNotBracketed(
                f"no sign change on ({lo:.15g}, {hi:.15g}) for x={x:g} t={t:g}: ({f_lo:.3e}, {f_hi:.3e})"
            )
            logger.debug("%s", last_error)
            continue

        bracket = (lo, hi)
        if guess is not None and lo < guess < hi:
            half = WARM_START_FRACTION * bounds.width
            narrow = (max(lo, guess - half), min(hi, guess + half))
            if objective(narrow[0]) < 0 < objective(narrow[1]):
                bracket = narrow

        u_star = brentq(objective, *bracket, xtol=XTOL, rtol=RTOL, maxiter=500)
        if factor != SHRINK_LADDER[0]:
            logger.warning("saddle_x needed bracket shrink %g (x=%g t=%g)", eps, x, t)
        return _report_residual(SaddlepointResult(
            u_star=u_star, residual=abs(objective(u_star)), bracket=bracket, t=t, x=x,
        ))

    raise last_error


def saddle_x(p: ModelParams, x: float, t: float) -> SaddlepointResult:
    if x == 0:
        raise OutsideSupport("saddle_x needs x != 0; use saddle_x0 for x = 0")
    _check_time(t)
    guess = alpha0(p, Marginal.X, x) + alpha1_closed_form(p, Marginal.X, x) * t
    return _solve_x(p, x, t, guess)


def saddle_x0(p: ModelParams, t: float) -> SaddlepointResult:
    _check_time(t)
    result = _solve_x(p, 0.0, t)
    if result.u_star <= 0:
        raise NonPositiveSaddle(f"u*_X(0, {t:g}) = {result.u_star:.6g} is not positive")
    return result


def saddle(p: ModelParams, m: Marginal, x: float, t: float) -> SaddlepointResult:
    m = Marginal.parse(m)
    if m is Marginal.V:
        return saddle_v(p, x, t)
    if x == 0:
        return saddle_x0(p, t)
    return saddle_x(p, x, t)
