"""Tail probabilities P(M_t >= x): exact, sharp asymptotic, tilted Fourier inversion, Monte Carlo.

Everything is assembled in log space. The sharp formula

    P(M_t >= x) ~ C(x) t^{1 - mu} exp(-Lambda*_M(x) / t)

underflows long before it stops being meaningful, so ``log_p`` is the primary
field of a TailEstimate and ``p`` is only its exponential.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import gammaln

from feller_ldp.cgf import cgf_complex, expansion_coeffs, f0_prime, g_fn, log_f
from feller_ldp.exceptions import (
    IntegrandNotDecaying,
    MissingPrefactor,
    NonPositiveSaddle,
    OutsideSupport,
    ParameterOutOfRange,
)
from feller_ldp.model_core import Marginal, ModelParams
from feller_ldp.rate_functions import alpha_coeffs, check_support, rate
from feller_ldp.saddlepoint import saddle
from feller_ldp.special import log_gammainc_upper

logger = logging.getLogger(__name__)

GAMMA_RELATIVE_ERROR = 1e-12
QUAD_EPSREL = 1e-11
QUAD_LIMIT = 500
TRUNCATION_SCALE = 50.0
SEGMENT_TOL = 1e-10
MAX_SEGMENTS = 48
BRANCH_POINTS = 4000
BRANCH_START = 1e-3
BRANCH_SPAN = 400.0
DEFAULT_PREFACTOR_TIMES = (0.05, 0.02, 0.01, 0.005)


class Method(str, enum.Enum):
    SHARP = 'sharp'
    GAMMA_EXACT = 'gamma_exact'
    FOURIER = 'fourier'
    MONTE_CARLO = 'monte_carlo'

    @classmethod
    def parse(cls, value: Union[str, 'Method']) -> 'Method':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower().replace('-', '_'))
        except ValueError:
            choices = ', '.join(m.value.replace('_', '-') for m in cls)
            raise ParameterOutOfRange('method', value, f'one of {{{choices}}}') from None


@dataclass(frozen=True)
class TailEstimate:
    p: float
    log_p: float
    method: Method
    error: float
    error_kind: str = 'relative'
    x: float = math.nan
    t: float = math.nan
    note: str = ''

    @classmethod
    def from_log(cls, log_p: float, method: Method, error: float, **kwargs) -> 'TailEstimate':
        return cls(p=math.exp(log_p) if log_p > -math.inf else 0.0, log_p=log_p,
                   method=method, error=error, **kwargs)


def _check_time(t: float):
    if t <= 0:
        raise ParameterOutOfRange('t', t, 't > 0')


def gamma_rate(p: ModelParams, t: float) -> float:
    """lambda_t = -2b / (xi^2 (1 - e^{bt})), the rate of the Gamma law of V_t."""
    return 2.0 * p.b / (p.xi ** 2 * math.expm1(p.b * t))


def gamma_tail_v(p: ModelParams, x: float, t: float) -> TailEstimate:
    _check_time(t)
    if x <= 0:
        return TailEstimate(p=1.0, log_p=0.0, method=Method.GAMMA_EXACT, error=0.0, x=x, t=t,
                            note='V_t >= 0 almost surely')
    log_p = log_gammainc_upper(p.mu, gamma_rate(p, t) * x)
    return TailEstimate.from_log(log_p, Method.GAMMA_EXACT, GAMMA_RELATIVE_ERROR, x=x, t=t)


def log_prefactor_v(p: ModelParams, x: float) -> float:
    """log C(x) for V: C(x) = e^{bx/xi^2} (2x/xi^2)^{mu-1} / Gamma(mu)."""
    return p.b * x / p.xi ** 2 + (p.mu - 1.0) * math.log(2.0 * x / p.xi ** 2) - gammaln(p.mu)


def sharp_tail(p: ModelParams, m: Marginal, x: float, t: float,
               prefactor: Optional[float] = None, extract: bool = False) -> TailEstimate:
    m = Marginal.parse(m)
    _check_time(t)
    if m is Marginal.V and x <= 0:
        return TailEstimate(p=1.0, log_p=0.0, method=Method.SHARP, error=0.0, x=x, t=t,
                            note='V_t >= 0 almost surely')
    check_support(m, x)

    if prefactor is None:
        if m is Marginal.V:
            log_c = log_prefactor_v(p, x)
        elif extract:
            log_c = extract_prefactor(p, m, x, DEFAULT_PREFACTOR_TIMES).log_c
        else:
            raise MissingPrefactor(f"no prefactor C({x:g}) for the X marginal; supply one or extract it")
    else:
        if prefactor <= 0:
            raise ParameterOutOfRange('prefactor', prefactor, 'prefactor > 0')
        log_c = math.log(prefactor)

    log_asymptotic = log_c + (1.0 - p.mu) * math.log(t) - rate(p, m, x).value / t
    if x > 0:
        return TailEstimate.from_log(log_asymptotic, Method.SHARP, t, error_kind='order_t', x=x, t=t)
    # x < 0: P(X_t >= x) = 1 - P(X_t < x)
    left = math.exp(log_asymptotic)
    log_p = math.log1p(-left) if left < 1.0 else -math.inf
    return TailEstimate.from_log(log_p, Method.SHARP, t, error_kind='order_t', x=x, t=t,
                                 note='complement of the left-tail asymptotic')


def sharp_tail_v_full(p: ModelParams, x: float, t: float) -> TailEstimate:
    """Leading term of the Gamma tail with the exact rate: (lambda_t x)^{mu-1} e^{-lambda_t x} / Gamma(mu)."""
    _check_time(t)
    check_support(Marginal.V, x)
    z = gamma_rate(p, t) * x
    log_p = (p.mu - 1.0) * math.log(z) - z - gammaln(p.mu)
    return TailEstimate.from_log(log_p, Method.SHARP, (p.mu - 1.0) / z, error_kind='relative', x=x, t=t)


def remark_constant(p: ModelParams, m: Marginal, x: float) -> float:
    """(-mu f_0'(alpha_0)/x)^{-mu} exp(-x alpha_1 - (mu/2) g_0(alpha_0))."""
    m = check_support(m, x)
    a0, a1 = alpha_coeffs(p, m, x)
    base = -p.mu * f0_prime(p, m, a0) / x
    g0 = expansion_coeffs(p, m, a0).g0
    return base ** (-p.mu) * math.exp(-x * a1 - 0.5 * p.mu * g0)


class TiltedIntegrand:
    """Characteristic function of M_t - x under the saddlepoint-tilted measure.

    Phi(u) = exp(-i u x + (Lambda_M(u* + i u t, t) - Lambda_M(u*, t)) / t)

    For X the logarithm of f_t^X along u* + i u t is continued from u = 0 on a
    geometric grid; the principal value is shifted by the matching multiple of 2 pi.
    """

    def __init__(self, p: ModelParams, m: Marginal, x: float, t: float, u_star: float):
        self.params = p
        self.marginal = Marginal.parse(m)
        self.x = float(x)
        self.t = float(t)
        self.u_star = float(u_star)
        self.side = 1.0 if self.u_star > 0 else -1.0
        self.lam_star = float(np.real(cgf_complex(p, self.marginal, self.u_star, t)))
        self._grid = None
        self._phase = None
        if self.marginal is Marginal.X:
            self._build_branch_table()
        self._h_cached = lru_cache(maxsize=1 << 16)(self._h_scalar)

    @classmethod
    def at_saddle(cls, p: ModelParams, m: Marginal, x: float, t: float) -> 'TiltedIntegrand':
        m = check_support(m, x)
        _check_time(t)
        result = saddle(p, m, x, t)
        if x > 0 and result.u_star <= 0:
            raise NonPositiveSaddle(f"u*({x:g}, {t:g}) = {result.u_star:.6g} is not positive")
        if x < 0 and result.u_star >= 0:
            raise NonPositiveSaddle(f"u*({x:g}, {t:g}) = {result.u_star:.6g} is not negative")
        return cls(p, m, x, t, result.u_star)

    @property
    def denominator_shift(self) -> float:
        return self.u_star / self.t

    def _build_branch_table(self):
        span = BRANCH_SPAN / (self.params.xi * self.t)
        grid = np.concatenate(([0.0], np.geomspace(BRANCH_START, span, BRANCH_POINTS)))
        principal = np.asarray(log_f(self.params, self.marginal, self.u_star + 1j * grid * self.t, self.t))
        self._grid = grid
        self._phase = np.unwrap(principal.imag)

    def _log_f(self, u: np.ndarray) -> np.ndarray:
        principal = np.asarray(log_f(self.params, self.marginal, self.u_star + 1j * u * self.t, self.t),
                               dtype=complex)
        if self._grid is None:
            return principal
        reference = np.interp(np.abs(u), self._grid, self._phase)
        reference = np.where(u < 0, -reference, reference)
        turns = np.round((reference - principal.imag) / (2.0 * np.pi))
        return principal + 2j * np.pi * turns

    def log_phi(self, u):
        p, t = self.params, self.t
        u = np.asarray(u, dtype=float)
        z = self.u_star + 1j * u * t
        lam = -(p.mu * t / 2.0) * (np.asarray(g_fn(p, self.marginal, z, t)) + 2.0 * self._log_f(u))
        value = -1j * u * self.x + (lam - self.lam_star) / t
        return value.item() if value.ndim == 0 else value

    def phi(self, u):
        return np.exp(self.log_phi(u))

    def denominator(self, u):
        return self.side * (self.denominator_shift + 1j * np.asarray(u))

    def _h_scalar(self, u: float) -> complex:
        # Phi(u) e^{iux} / denominator(u); the oscillating factor goes into the quadrature weight
        return complex(np.exp(self.log_phi(u) + 1j * u * self.x) / self.denominator(u))

    def integrand(self, u):
        return np.real(self.phi(u) / self.denominator(u))

    def _segment(self, a: float, b: float, epsrel: float, limit: int) -> tuple[float, float]:
        omega = abs(self.x)
        sign = 1.0 if self.x >= 0 else -1.0
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always', IntegrationWarning)
            re, re_err = quad(lambda u: self._h_cached(u).real, a, b, weight='cos', wvar=omega,
                              epsabs=0.0, epsrel=epsrel, limit=limit)
            im, im_err = quad(lambda u: self._h_cached(u).imag, a, b, weight='sin', wvar=omega,
                              epsabs=0.0, epsrel=epsrel, limit=limit)
        for item in caught:
            logger.debug("quadrature on [%g, %g]: %s", a, b, item.message)
        return re + sign * im, re_err + im_err

    def integrate(self, epsrel: float = QUAD_EPSREL, limit: int = QUAD_LIMIT) -> tuple[float, float]:
        """(1/pi) int_0^inf Re[Phi(u) / denominator(u)] du and its absolute error estimate."""
        upper = TRUNCATION_SCALE / (self.t * self.params.xi)
        lower = 0.0
        total, error, quiet = 0.0, 0.0, 0
        for k in range(MAX_SEGMENTS):
            piece, piece_err = self._segment(lower, upper, epsrel, limit)
            total += piece
            error += piece_err
            quiet = quiet + 1 if abs(piece) < SEGMENT_TOL * abs(total) else 0
            logger.debug("segment [%g, %g]: %.6e (total %.12e)", lower, upper, piece, total)
            if quiet >= 2:
                break
            lower, upper = upper, 2.0 * upper
        else:
            raise IntegrandNotDecaying(
                f"Fourier integral still moving after {MAX_SEGMENTS} doublings (x={self.x:g}, t={self.t:g})"
            )
        if total <= 0:
            raise IntegrandNotDecaying(f"non-positive tilted integral {total:.3e} (x={self.x:g}, t={self.t:g})")
        return total / math.pi, error / math.pi

    def l1_norm(self, limit: int = QUAD_LIMIT) -> float:
        """int_R |Phi(u) / denominator(u)| du."""
        upper = TRUNCATION_SCALE / (self.t * self.params.xi)
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', IntegrationWarning)
            head, _ = quad(lambda u: abs(self._h_cached(u)), 0.0, upper, limit=limit)
            tail, _ = quad(lambda u: abs(self._h_cached(u)), upper, np.inf, limit=limit)
        total = head + tail
        if not math.isfinite(total):
            raise IntegrandNotDecaying(f"|Phi| not integrable at t={self.t:g}")
        return 2.0 * total

    def tilted_mean(self, step: float = 1e-5) -> float:
        """E^Q[M_t - x] = -i Phi'(0), which vanishes at the saddlepoint."""
        return float(np.imag(self.log_phi(step))) / step


def _log_tilted_side(p: ModelParams, m: Marginal, x: float, t: float,
                     epsrel: float = QUAD_EPSREL, limit: int = QUAD_LIMIT) -> tuple[float, float]:
    """log P(M_t >= x) for x > 0, log P(X_t <= x) for x < 0, with a relative error estimate."""
    m = Marginal.parse(m)
    if m is Marginal.V and x <= 0:
        raise OutsideSupport(f"tilted inversion for V needs x > 0, got {x!r}")
    tilted = TiltedIntegrand.at_saddle(p, m, x, t)
    integral, abs_err = tilted.integrate(epsrel, limit)
    log_side = (tilted.lam_star - x * tilted.u_star) / t + math.log(integral)
    return log_side, max(abs_err / integral, epsrel)


def tilted_fourier_tail(p: ModelParams, m: Marginal, x: float, t: float,
                        epsrel: float = QUAD_EPSREL, limit: int = QUAD_LIMIT) -> TailEstimate:
    log_side, relative = _log_tilted_side(p, m, x, t, epsrel, limit)
    if x > 0:
        return TailEstimate.from_log(log_side, Method.FOURIER, relative, x=x, t=t)

    logger.warning("P(X_t >= %g) at t=%g taken as the complement of a left-tail inversion", x, t)
    left = math.exp(log_side)
    log_p = math.log1p(-left) if left < 1.0 else -math.inf
    return TailEstimate.from_log(log_p, Method.FOURIER, relative * left / max(1.0 - left, 1e-300),
                                 x=x, t=t, note='complement of P(X_t <= x)')


def tail_probability(p: ModelParams, m: Marginal, x: float, t: float, method: Union[str, Method],
                     mc_config=None, prefactor: Optional[float] = None) -> TailEstimate:
    """P(M_t >= x) by the requested method."""
    m = Marginal.parse(m)
    method = Method.parse(method)
    if method is Method.GAMMA_EXACT:
        if m is not Marginal.V:
            raise ParameterOutOfRange('method', method.value, 'gamma_exact is only available for V')
        return gamma_tail_v(p, x, t)
    if method is Method.FOURIER:
        return tilted_fourier_tail(p, m, x, t)
    if method is Method.SHARP:
        return sharp_tail(p, m, x, t, prefactor=prefactor, extract=prefactor is None)

    from feller_ldp.montecarlo import McConfig, tail_mc

    estimate = tail_mc(p, m, x, t, mc_config or McConfig())
    log_p = math.log(estimate.p_hat) if estimate.p_hat > 0 else -math.inf
    return TailEstimate(p=estimate.p_hat, log_p=log_p, method=Method.MONTE_CARLO,
                        error=estimate.std_err, error_kind='std_err', x=x, t=t)


@dataclass(frozen=True)
class PrefactorFit:
    c_hat: float
    log_c: float
    exponent: float
    times: tuple[float, ...]
    log_p: tuple[float, ...]
    residuals: tuple[float, ...]
    residual_slope: float


def extract_prefactor(p: ModelParams, m: Marginal, x: float, t_grid: Sequence[float]) -> PrefactorFit:
    """Fit log p(t) = log C + (1 - mu) log t - Lambda*(x)/t over Fourier tails.

    ``log_c`` comes from the fit with the exponent fixed at 1 - mu; ``exponent``
    is the log t coefficient when it is left free.
    """
    m = check_support(m, x)
    times = np.asarray(sorted(t_grid, reverse=True), dtype=float)
    if len(times) < 4:
        raise ParameterOutOfRange('t_grid', list(t_grid), 'at least 4 times')

    rate_value = rate(p, m, x).value
    # for x < 0 this is the left tail, which carries the asymptotics
    log_p = np.array([_log_tilted_side(p, m, x, t)[0] for t in times])
    reduced = log_p + rate_value / times
    log_t = np.log(times)

    log_c = float(np.mean(reduced - (1.0 - p.mu) * log_t))
    residuals = reduced - (1.0 - p.mu) * log_t - log_c
    exponent = float(np.polyfit(log_t, reduced, 1)[0])
    residual_slope = float(np.polyfit(times, residuals, 1)[0])
    logger.debug("prefactor fit %s x=%g: C=%.6g exponent=%.4f", m.value, x, math.exp(log_c), exponent)
    return PrefactorFit(
        c_hat=math.exp(log_c), log_c=log_c, exponent=exponent,
        times=tuple(times.tolist()), log_p=tuple(log_p.tolist()),
        residuals=tuple(residuals.tolist()), residual_slope=residual_slope,
    )


@dataclass(frozen=True)
class PrefactorComparison:
    remark: float
    full: float
    ratio: float


def prefactor_comparison(p: ModelParams, m: Marginal, x: float,
                         prefactor: Optional[float] = None,
                         t_grid: Sequence[float] = DEFAULT_PREFACTOR_TIMES) -> PrefactorComparison:
    m = check_support(m, x)
    remark = remark_constant(p, m, x)
    if prefactor is not None:
        full = prefactor
    elif m is Marginal.V:
        full = math.exp(log_prefactor_v(p, x))
    else:
        full = extract_prefactor(p, m, x, t_grid).c_hat
    return PrefactorComparison(remark=remark, full=full, ratio=full / remark)


@dataclass(frozen=True)
class ConvergenceRow:
    t: float
    scaled_log_p: float
    rate: float
    gap: float


def ldp_convergence(p: ModelParams, m: Marginal, x: float, t_grid: Iterable[float],
                    method: Union[str, Method], mc_config=None) -> list[ConvergenceRow]:
    """Rows (t, -t log p, Lambda*(x), gap) in the order of ``t_grid``."""
    m = Marginal.parse(m)
    method = Method.parse(method)
    if method is Method.SHARP:
        raise ParameterOutOfRange('method', method.value, 'one of gamma-exact, fourier, monte-carlo')
    rate_value = rate(p, m, x).value
    rows = []
    for t in t_grid:
        estimate = tail_probability(p, m, x, t, method, mc_config=mc_config)
        scaled = -t * estimate.log_p
        rows.append(ConvergenceRow(t=float(t), scaled_log_p=scaled, rate=rate_value,
                                   gap=abs(scaled - rate_value)))
    return rows


def extrapolate_rate(rows: Sequence[ConvergenceRow]) -> float:
    """Intercept of -t log p = L + c1 t + c2 t log t fitted over the rows."""
    if len(rows) < 3:
        raise ParameterOutOfRange('rows', len(rows), 'at least 3 rows')
    t = np.array([row.t for row in rows])
    y = np.array([row.scaled_log_p for row in rows])
    basis = np.column_stack([np.ones_like(t), t, t * np.log(t)])
    coeffs, *_ = np.linalg.lstsq(basis, y, rcond=None)
    return float(coeffs[0])
