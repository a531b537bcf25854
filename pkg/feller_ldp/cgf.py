"""Rescaled cumulant generating functions Lambda_M(u, t) = t log E[exp(u M_t / t)].

Both marginals share the representation

    Lambda_M(u, t) = -(mu t / 2) [g_t^M(u) + 2 log f_t^M(u)]

with
    f_t^X(u) = cosh(y) - g_t^X(u)/(t d) sinh(y),   y = d(u/t) t / 2,   g_t^X(u) = b t + rho xi u
    f_t^V(u) = 1 + u xi^2 (1 - e^{bt}) / (2 b t),                     g_t^V(u) = 0
    d(u)     = sqrt((b + rho xi u)^2 + u (1 - u) xi^2)

f_t^X only depends on d through even functions (cosh y and sinh(y)/y), so the
square-root branch never changes its value. Everything is evaluated in complex
arithmetic; the realness of Lambda on the real domain is checked, not assumed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from feller_ldp.exceptions import NonRealResult, ParameterOutOfRange, TooCloseToBoundary
from feller_ldp.model_core import Marginal, ModelParams, domain_bounds

logger = logging.getLogger(__name__)

IMAG_TOLERANCE = 1e-9
BOUNDARY_MARGIN = 1e-8
FIRST_ORDER_STEP = 1e-6
SECOND_ORDER_STEP = 1e-4

ArrayLike = Union[float, complex, np.ndarray]


@dataclass(frozen=True)
class CgfValue:
    lam: float
    f: complex
    g: float
    finite: bool


@dataclass(frozen=True)
class ExpansionCoeffs:
    f0: float
    f1: float
    g0: float


def _as_scalar(value):
    value = np.asarray(value)
    return value.item() if value.ndim == 0 else value


def d_fn(p: ModelParams, u: ArrayLike):
    """Principal square root of (b + rho xi u)^2 + u (1 - u) xi^2."""
    u = np.asarray(u)
    q = (p.b + p.rho * p.xi * u) ** 2 + u * (1.0 - u) * p.xi ** 2
    if np.iscomplexobj(q):
        root = np.sqrt(q)
    else:
        # emath gives +i sqrt(|q|) on the negative axis, whatever the sign of zero
        root = np.emath.sqrt(q)
    return _as_scalar(np.asarray(root, dtype=complex))


def _sinhc(y):
    y = np.asarray(y, dtype=complex)
    small = np.abs(y) < 1e-6
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.sinh(y) / np.where(small, 1.0, y)
    return np.where(small, 1.0 + y * y / 6.0, ratio)


def g_x(p: ModelParams, u: ArrayLike, t: float):
    return p.b * t + p.rho * p.xi * np.asarray(u)


def f_x(p: ModelParams, u: ArrayLike, t: float):
    """f_t^X(u) for real or complex u (t > 0)."""
    u = np.asarray(u)
    y = np.asarray(d_fn(p, u / t)) * t / 2.0
    value = np.cosh(y) - 0.5 * g_x(p, u, t) * _sinhc(y)
    return _as_scalar(value)


def _v_slope(p: ModelParams, t: float) -> float:
    # xi^2 (1 - e^{bt}) / (2bt), negative for b < 0
    return -p.xi ** 2 * math.expm1(p.b * t) / (2.0 * p.b * t)


def f_v(p: ModelParams, u: ArrayLike, t: float):
    return _as_scalar(1.0 + _v_slope(p, t) * np.asarray(u, dtype=complex))


def _wrap_phase(phase):
    return np.mod(phase + np.pi, 2.0 * np.pi) - np.pi


def log_f_x(p: ModelParams, z: ArrayLike, t: float):
    """Principal log f_t^X(z), computed without overflowing cosh/sinh for large |Re y|."""
    z = np.asarray(z, dtype=complex)
    y = np.asarray(d_fn(p, z / t)) * t / 2.0
    y = np.where(y.real < 0, -y, y)
    decay = np.exp(-2.0 * y)
    small = np.abs(y) < 1e-3
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = (1.0 - decay) / np.where(small, 1.0, 2.0 * y)
    ratio = np.where(small, 1.0 - y + (2.0 / 3.0) * y ** 2 - (1.0 / 3.0) * y ** 3, ratio)
    bracket = 0.5 * (1.0 + decay) - 0.5 * g_x(p, z, t) * ratio
    log_value = y + np.log(bracket)
    return _as_scalar(log_value.real + 1j * _wrap_phase(log_value.imag))


def log_f_v(p: ModelParams, z: ArrayLike, t: float):
    return _as_scalar(np.log(np.asarray(f_v(p, z, t))))


def f_fn(p: ModelParams, m: Marginal, u: ArrayLike, t: float):
    return f_x(p, u, t) if Marginal.parse(m) is Marginal.X else f_v(p, u, t)


def g_fn(p: ModelParams, m: Marginal, u: ArrayLike, t: float):
    if Marginal.parse(m) is Marginal.X:
        return _as_scalar(g_x(p, u, t))
    return _as_scalar(np.zeros_like(np.asarray(u), dtype=float))


def log_f(p: ModelParams, m: Marginal, z: ArrayLike, t: float):
    return log_f_x(p, z, t) if Marginal.parse(m) is Marginal.X else log_f_v(p, z, t)


def cgf_complex(p: ModelParams, m: Marginal, z: ArrayLike, t: float):
    """Lambda_M(z, t) at complex z with the principal logarithm; no domain check."""
    m = Marginal.parse(m)
    value = -(p.mu * t / 2.0) * (np.asarray(g_fn(p, m, z, t)) + 2.0 * np.asarray(log_f(p, m, z, t)))
    return _as_scalar(value)


def cgf_eval(p: ModelParams, m: Marginal, u: float, t: float) -> CgfValue:
    m = Marginal.parse(m)
    if t <= 0:
        raise ParameterOutOfRange('t', t, 't > 0')
    u = float(u)
    f_value = complex(f_fn(p, m, u, t))
    g_value = float(np.real(g_fn(p, m, u, t)))
    if not domain_bounds(p, m, t).contains(u, BOUNDARY_MARGIN):
        return CgfValue(lam=math.inf, f=f_value, g=g_value, finite=False)

    lam = -(p.mu * t / 2.0) * (g_value + 2.0 * np.log(f_value))
    if abs(lam.imag) > IMAG_TOLERANCE:
        raise NonRealResult(f"Lambda_{m.value}({u:g}, {t:g}) has imaginary part {lam.imag:.3e}")
    return CgfValue(lam=float(lam.real), f=f_value, g=g_value, finite=True)


def f0_fn(p: ModelParams, m: Marginal, u: float) -> float:
    if Marginal.parse(m) is Marginal.V:
        return 1.0 - u * p.xi ** 2 / 2.0
    theta = p.rho_bar * p.xi * u / 2.0
    return math.cos(theta) - (p.rho / p.rho_bar) * math.sin(theta)


def f1_fn(p: ModelParams, m: Marginal, u: float) -> float:
    if Marginal.parse(m) is Marginal.V:
        return -p.b * u * p.xi ** 2 / 4.0
    if u == 0:
        return -p.b / 2.0
    rho, rho_bar, xi, b = p.rho, p.rho_bar, p.xi, p.b
    theta = rho_bar * xi * u / 2.0
    cos_coeff = rho * (xi + 2 * b * rho) / (4 * rho_bar ** 2)
    sin_coeff = (xi + 2 * b * rho) / (4 * rho_bar) - (xi * rho + 2 * b) / (2 * u * xi * rho_bar ** 3)
    return cos_coeff * math.cos(theta) + sin_coeff * math.sin(theta)


def g0_fn(p: ModelParams, m: Marginal, u: float) -> float:
    return p.rho * p.xi * u if Marginal.parse(m) is Marginal.X else 0.0


def f0_prime(p: ModelParams, m: Marginal, u: float) -> float:
    """Analytic derivative of f_0^M."""
    if Marginal.parse(m) is Marginal.V:
        return -p.xi ** 2 / 2.0
    theta = p.rho_bar * p.xi * u / 2.0
    return -(p.rho_bar * p.xi / 2.0) * math.sin(theta) - (p.rho * p.xi / 2.0) * math.cos(theta)


def expansion_coeffs(p: ModelParams, m: Marginal, u: float) -> ExpansionCoeffs:
    m = Marginal.parse(m)
    return ExpansionCoeffs(f0=f0_fn(p, m, u), f1=f1_fn(p, m, u), g0=g0_fn(p, m, u))


def cgf_derivative(p: ModelParams, m: Marginal, u: float, t: float, order: int = 1) -> float:
    """d^order/du^order Lambda_M(u, t) by a five-point central stencil kept inside the domain."""
    m = Marginal.parse(m)
    if order not in (1, 2):
        raise ParameterOutOfRange('order', order, 'order in {1, 2}')
    bounds = domain_bounds(p, m, t)
    room = min(u - (bounds.lower + BOUNDARY_MARGIN), (bounds.upper - BOUNDARY_MARGIN) - u)
    if room <= 0:
        raise TooCloseToBoundary(f"u={u:.15g} is not interior to ({bounds.lower:.15g}, {bounds.upper:.15g})")

    base = FIRST_ORDER_STEP if order == 1 else SECOND_ORDER_STEP
    h = max(base, base * abs(u))
    if 2 * h >= room:
        h = room / 4.0
    if h < 1e-13 * max(1.0, abs(u)):
        raise TooCloseToBoundary(f"stencil does not fit at u={u:.15g} (room {room:.3e})")

    def lam(v):
        return cgf_eval(p, m, v, t).lam

    l_m2, l_m1, l_p1, l_p2 = lam(u - 2 * h), lam(u - h), lam(u + h), lam(u + 2 * h)
    if order == 1:
        return (-l_p2 + 8.0 * l_p1 - 8.0 * l_m1 + l_m2) / (12.0 * h)
    return (-l_p2 + 16.0 * l_p1 - 30.0 * lam(u) + 16.0 * l_m1 - l_m2) / (12.0 * h * h)


def cgf_derivative_v_exact(p: ModelParams, u: float, t: float, order: int = 1) -> float:
    """Closed-form derivatives of Lambda_V(u, t) = -mu t log(1 + c u)."""
    c = _v_slope(p, t)
    ratio = c / (1.0 + c * u)
    if order == 1:
        return -p.mu * t * ratio
    return p.mu * t * ratio ** 2
