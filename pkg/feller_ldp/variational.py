"""Discretised Freidlin-Wentzell action of the small-noise Feller diffusion on [0, 1].

    I(phi) = 1/2 int_0^1 phi'(s)^2 / (xi^2 phi(s)) 1{phi(s) > 0} ds

Its infimum over paths from v0 to x is the marginal rate function
(2/xi^2)(sqrt(x) - sqrt(v0))^2, attained by the squared straight line in psi = sqrt(phi).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.optimize import minimize

from feller_ldp.exceptions import NonConvergence, ParameterOutOfRange
from feller_ldp.model_core import ModelParams
from feller_ldp.rate_functions import fw_rate, rate_v

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 100_000
GRADIENT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class PathGrid:
    """Path values phi_0..phi_n at the uniform knots i/n of [0, 1]."""
    values: np.ndarray
    v0: float
    x: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, 'values', values)
        if values.ndim != 1 or len(values) < 3:
            raise ParameterOutOfRange('path', len(values), 'at least 3 knots')
        if values[0] != self.v0 or values[-1] != self.x:
            raise ParameterOutOfRange('path', (values[0], values[-1]), f'endpoints ({self.v0}, {self.x})')
        if np.any(values < 0):
            raise ParameterOutOfRange('path', float(values.min()), 'all values >= 0')

    @property
    def n(self) -> int:
        return len(self.values) - 1

    @property
    def knots(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n + 1)

    def rows(self):
        return zip(self.knots.tolist(), self.values.tolist())


@dataclass(frozen=True)
class ActionResult:
    value: float
    minimizer: Optional[PathGrid]
    n: int
    direct_value: float = math.nan
    direct_minimizer: Optional[PathGrid] = None
    iterations: int = 0


def _check_grid(v0: float, n: int):
    if v0 < 0:
        raise ParameterOutOfRange('v0', v0, 'v0 >= 0')
    if n < 2:
        raise ParameterOutOfRange('n', n, 'n >= 2')


def straight_line_path(v0: float, x: float, n: int) -> PathGrid:
    _check_grid(v0, n)
    values = v0 + np.linspace(0.0, 1.0, n + 1) * (x - v0)
    values[0], values[-1] = v0, x
    return PathGrid(values, v0, x)


def psi_line_path(v0: float, x: float, n: int) -> PathGrid:
    """phi_i = (sqrt(v0) + s_i (sqrt(x) - sqrt(v0)))^2."""
    _check_grid(v0, n)
    psi = math.sqrt(v0) + np.linspace(0.0, 1.0, n + 1) * (math.sqrt(x) - math.sqrt(v0))
    values = psi ** 2
    values[0], values[-1] = v0, x
    return PathGrid(values, v0, x)


def _cell_terms(values: np.ndarray, xi: float, dt: float) -> np.ndarray:
    step = np.diff(values)
    mid = 0.5 * (values[:-1] + values[1:])
    positive = mid > 0
    with np.errstate(divide='ignore', invalid='ignore'):
        terms = step ** 2 / (2.0 * xi ** 2 * np.where(positive, mid, 1.0) * dt)
    # y^{-1} 1{y > 0} = 0 at y = 0; mid == 0 with a nonzero step needs a negative knot
    return np.where(positive, terms, np.where(step == 0, 0.0, np.inf))


def action(p: ModelParams, path: PathGrid) -> float:
    """Midpoint discretisation sum (dphi)^2 / (2 xi^2 phi_mid dt)."""
    return float(np.sum(_cell_terms(path.values, p.xi, 1.0 / path.n)))


def psi_action(p: ModelParams, path: PathGrid) -> float:
    """(2/xi^2) sum (dpsi)^2 / dt with psi = sqrt(phi)."""
    psi = np.sqrt(path.values)
    return float((2.0 / p.xi ** 2) * np.sum(np.diff(psi) ** 2) * path.n)


def _action_gradient(values: np.ndarray, xi: float, dt: float) -> np.ndarray:
    step = np.diff(values)
    mid = 0.5 * (values[:-1] + values[1:])
    scale = 2.0 * xi ** 2 * dt
    safe = np.where(mid > 0, mid, 1.0)
    d_right = np.where(mid > 0, (2.0 * step * safe - 0.5 * step ** 2) / (scale * safe ** 2), 0.0)
    d_left = np.where(mid > 0, (-2.0 * step * safe - 0.5 * step ** 2) / (scale * safe ** 2), 0.0)
    grad = np.zeros_like(values)
    grad[1:] += d_right
    grad[:-1] += d_left
    return grad


def _direct_minimization(p: ModelParams, v0: float, x: float, n: int,
                         max_iter: int, gtol: float) -> tuple[PathGrid, float, int]:
    dt = 1.0 / n
    start = straight_line_path(v0, x, n).values
    use_psi = v0 > 0 and x > 0

    def full(interior):
        inner = interior ** 2 if use_psi else interior
        return np.concatenate(([v0], inner, [x]))

    def fun(interior):
        values = full(interior)
        value = float(np.sum(_cell_terms(values, p.xi, dt)))
        grad = _action_gradient(values, p.xi, dt)[1:-1]
        if use_psi:
            grad = 2.0 * interior * grad
        return value, grad

    x0 = np.sqrt(start[1:-1]) if use_psi else start[1:-1]
    bounds = None if use_psi else [(0.0, None)] * (n - 1)
    result = minimize(fun, x0, jac=True, method='L-BFGS-B', bounds=bounds,
                      options={'maxiter': max_iter, 'maxfun': 2 * max_iter, 'gtol': gtol, 'ftol': 1e-16})
    values = full(result.x)
    values = np.maximum(values, 0.0)
    best = PathGrid(values, v0, x)
    value = float(np.sum(_cell_terms(values, p.xi, dt)))

    if result.nit >= max_iter:
        raise NonConvergence(f"action minimisation hit {max_iter} iterations (n={n})",
                             best=ActionResult(value=value, minimizer=best, n=n, iterations=result.nit))
    grad_norm = float(np.linalg.norm(result.jac, np.inf))
    if grad_norm >= gtol:
        logger.warning("action minimisation stopped with gradient norm %.2e (%s)", grad_norm, result.message)
    logger.debug("direct minimisation n=%d: %.12g after %d iterations", n, value, result.nit)
    return best, value, int(result.nit)


def minimize_action(p: ModelParams, v0: float, x: float, n: int,
                    max_iter: int = MAX_ITERATIONS, gtol: float = GRADIENT_TOL) -> ActionResult:
    """Minimal discrete action from v0 to x: the squared psi-line and a direct L-BFGS-B solve."""
    _check_grid(v0, n)
    if x < 0:
        return ActionResult(value=math.inf, minimizer=None, n=n, direct_value=math.inf)

    exact = psi_line_path(v0, x, n)
    direct, direct_value, iterations = _direct_minimization(p, v0, x, n, max_iter, gtol)
    return ActionResult(
        value=action(p, exact), minimizer=exact, n=n,
        direct_value=direct_value, direct_minimizer=direct, iterations=iterations,
    )


@dataclass(frozen=True)
class ContractionRow:
    x: float
    action: float
    closed_form: float
    limit: float
    gap: float


def contraction_curve(p: ModelParams, v0: float, x_grid: Iterable[float], n: int) -> list[ContractionRow]:
    """Minimised action against the closed form and its v0 -> 0 limit 2x/xi^2."""
    rows = []
    for x in x_grid:
        result = minimize_action(p, v0, x, n)
        limit = rate_v(p, x).value
        gap = abs(result.value - limit) if math.isfinite(limit) else 0.0
        rows.append(ContractionRow(x=float(x), action=result.value, closed_form=fw_rate(p, v0, x).value,
                                   limit=limit, gap=gap))
    return rows
