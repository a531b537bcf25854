"""Heston/Feller parameters, derived constants and effective-domain boundaries.

The system under study is

    dX_t = -V_t/2 dt + sqrt(V_t) dW_t,          X_0 = 0
    dV_t = (a + b V_t) dt + xi sqrt(V_t) dZ_t,   V_0 = 0
    d<W, Z>_t = rho dt

with a, xi > 0, b < 0, |rho| < 1 and mu = 2a/xi^2 > 1.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Union

from scipy.optimize import brentq

from feller_ldp.exceptions import (
    FellerIndexTooSmall,
    ParameterOutOfRange,
    RootNotBracketed,
)

logger = logging.getLogger(__name__)

# Outward scan for the X-domain boundaries, in units of 2/xi.
SCAN_STEP_FRACTION = 0.1
SCAN_MAX_STEPS = 10_000
BOUNDARY_RTOL = 1e-12


class Marginal(str, enum.Enum):
    X = 'X'
    V = 'V'

    @classmethod
    def parse(cls, value: Union[str, 'Marginal']) -> 'Marginal':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ParameterOutOfRange('marginal', value, "one of {'X', 'V'}") from None


@dataclass(frozen=True)
class ModelParams:
    a: float
    b: float
    xi: float
    rho: float
    mu: float = field(init=False, compare=False, repr=False)
    rho_bar: float = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'mu', 2.0 * self.a / self.xi ** 2)
        object.__setattr__(self, 'rho_bar', math.sqrt(1.0 - self.rho ** 2))

    def to_dict(self) -> dict:
        return {'a': self.a, 'b': self.b, 'xi': self.xi, 'rho': self.rho}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, raw: dict) -> 'ModelParams':
        missing = {'a', 'b', 'xi', 'rho'} - set(raw)
        if missing:
            raise ParameterOutOfRange('params', sorted(missing), 'keys {"a","b","xi","rho"} all present')
        return validate_params(raw['a'], raw['b'], raw['xi'], raw['rho'])

    @classmethod
    def from_json(cls, text: str) -> 'ModelParams':
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> 'ModelParams':
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class DomainBounds:
    """Open interval (lower, upper) on which Lambda_M(., t) is finite; t = 0 is the limiting domain."""
    lower: float
    upper: float
    t: float

    def contains(self, u: float, margin: float = 0.0) -> bool:
        return self.lower + margin < u < self.upper - margin

    @property
    def width(self) -> float:
        return self.upper - self.lower


def validate_params(a, b, xi, rho) -> ModelParams:
    """Check the standing assumptions and return a ModelParams with derived fields."""
    values = {}
    for name, raw in (('a', a), ('b', b), ('xi', xi), ('rho', rho)):
        try:
            value = float(raw)
        except (TypeError, ValueError):
            raise ParameterOutOfRange(name, raw, 'a real number') from None
        if not math.isfinite(value):
            raise ParameterOutOfRange(name, value, 'a finite real number')
        values[name] = value

    if values['a'] <= 0:
        raise ParameterOutOfRange('a', values['a'], 'a > 0')
    if values['b'] >= 0:
        raise ParameterOutOfRange('b', values['b'], 'b < 0')
    if values['xi'] <= 0:
        raise ParameterOutOfRange('xi', values['xi'], 'xi > 0')
    if abs(values['rho']) >= 1:
        raise ParameterOutOfRange('rho', values['rho'], '|rho| < 1')

    params = ModelParams(**values)
    if params.mu <= 1:
        raise FellerIndexTooSmall(params.mu)
    return params


def limiting_u_pm(p: ModelParams) -> tuple[float, float]:
    """Endpoints (u_-, u_+) of the limiting X-domain."""
    scale = 2.0 / (p.xi * p.rho_bar)
    if p.rho < 0:
        base = math.atan(p.rho_bar / p.rho)
        return scale * base, scale * (base + math.pi)
    if p.rho > 0:
        base = math.atan(p.rho_bar / p.rho)
        return scale * (base - math.pi), scale * base
    return -math.pi / p.xi, math.pi / p.xi


def v_domain_upper(p: ModelParams, t: float) -> float:
    if t == 0:
        return 2.0 / p.xi ** 2
    return 2.0 * p.b * t / (p.xi ** 2 * math.expm1(p.b * t))


def domain_bounds(p: ModelParams, m: Union[Marginal, str], t: float) -> DomainBounds:
    m = Marginal.parse(m)
    if t < 0:
        raise ParameterOutOfRange('t', t, 't >= 0')
    return _domain_bounds(p, m, float(t))


@lru_cache(maxsize=4096)
def _domain_bounds(p: ModelParams, m: Marginal, t: float) -> DomainBounds:
    if m is Marginal.V:
        return DomainBounds(-math.inf, v_domain_upper(p, t), t)
    if t == 0:
        lower, upper = limiting_u_pm(p)
        return DomainBounds(lower, upper, t)
    return DomainBounds(_x_boundary(p, t, -1), _x_boundary(p, t, +1), t)


def _x_boundary(p: ModelParams, t: float, direction: int) -> float:
    """Zero of u -> f_t^X(u) nearest to the origin on one side."""
    from feller_ldp.cgf import f_x

    def f_real(u):
        return f_x(p, u, t).real

    step = SCAN_STEP_FRACTION * 2.0 / p.xi
    previous = 0.0
    for k in range(1, SCAN_MAX_STEPS + 1):
        u = direction * k * step
        if f_real(u) <= 0.0:
            lo, hi = sorted((previous, u))
            root = brentq(f_real, lo, hi, xtol=1e-300, rtol=BOUNDARY_RTOL, maxiter=500)
            logger.debug("X-domain boundary at t=%g: %.15g (%d scan steps)", t, root, k)
            return root
        previous = u
    raise RootNotBracketed(
        f"no sign change of f_t^X within |u| <= {SCAN_MAX_STEPS * step:g} at t={t:g}"
    )
