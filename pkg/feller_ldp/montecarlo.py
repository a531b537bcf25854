"""Monte Carlo oracle for P(V_t >= x) and P(X_t >= x).

V_t is sampled exactly from its Gamma law. For (X_t, V_t) the variance path is
advanced by exact noncentral chi-square transitions drawn as a Poisson mixture of
Gammas, and X_t is rebuilt from the decomposition

    X_t = -1/2 int V + rho/xi (V_t - a t - b int V) + rho_bar N(0, int V)

with the time integral by the trapezoid rule.

Paths are split into ``stream_count`` streams seeded from one SeedSequence; the
streams may run on a thread pool and are always concatenated in stream order.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from feller_ldp.exceptions import NumericalError, ParameterOutOfRange, ProbabilityTooSmallForN
from feller_ldp.model_core import Marginal, ModelParams

logger = logging.getLogger(__name__)

MIN_EXPECTED_HITS = 10


@dataclass(frozen=True)
class McConfig:
    n_paths: int = 100_000
    n_steps: int = 200
    seed: int = 0
    stream_count: int = 4
    # thread-pool size; never changes the samples
    workers: int = 1

    def __post_init__(self):
        for name in ('n_paths', 'n_steps', 'stream_count', 'workers'):
            if getattr(self, name) < 1:
                raise ParameterOutOfRange(name, getattr(self, name), f'{name} >= 1')
        if not 0 <= self.seed < 2 ** 64:
            raise ParameterOutOfRange('seed', self.seed, '0 <= seed < 2^64')

    def stream_sizes(self) -> list[int]:
        base, extra = divmod(self.n_paths, self.stream_count)
        return [base + (1 if k < extra else 0) for k in range(self.stream_count)]


@dataclass(frozen=True)
class McEstimate:
    p_hat: float
    std_err: float
    n_paths: int
    hits: int = 0


def _stream_generators(cfg: McConfig) -> list[tuple[np.random.Generator, ...]]:
    """(gamma, poisson, normal) generators for each stream."""
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.stream_count)
    return [tuple(np.random.default_rng(child) for child in stream.spawn(3)) for stream in streams]


def _run_streams(cfg: McConfig, work) -> list:
    jobs = list(zip(_stream_generators(cfg), cfg.stream_sizes()))
    if cfg.workers == 1:
        return [work(rngs, size) for rngs, size in jobs]
    with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
        # map keeps stream order
        return list(executor.map(lambda job: work(*job), jobs))


def _gamma_scale(p: ModelParams, dt: float) -> float:
    # 1/lambda_dt = xi^2 (e^{b dt} - 1) / (2b)
    return p.xi ** 2 * math.expm1(p.b * dt) / (2.0 * p.b)


def sample_v_exact(p: ModelParams, t: float, cfg: McConfig) -> np.ndarray:
    """Draws of V_t ~ Gamma(mu, lambda_t); numpy's standard_gamma is Marsaglia-Tsang rejection."""
    if t <= 0:
        raise ParameterOutOfRange('t', t, 't > 0')
    scale = _gamma_scale(p, t)

    def work(rngs, size):
        return scale * rngs[0].standard_gamma(p.mu, size=size)

    return np.concatenate(_run_streams(cfg, work))


def v_transition(p: ModelParams, v: np.ndarray, dt: float, gamma_rng, poisson_rng) -> np.ndarray:
    """Exact CIR step: V' = 2c Gamma(mu + N), N ~ Poisson(V e^{b dt} / (2c))."""
    half_scale = _gamma_scale(p, dt) / 2.0
    pois = poisson_rng.poisson(v * math.exp(p.b * dt) / (2.0 * half_scale))
    return 2.0 * half_scale * gamma_rng.standard_gamma(p.mu + pois)


def simulate_xv(p: ModelParams, t: float, cfg: McConfig) -> tuple[np.ndarray, np.ndarray]:
    if t <= 0:
        raise ParameterOutOfRange('t', t, 't > 0')
    dt = t / cfg.n_steps

    def work(rngs, size):
        gamma_rng, poisson_rng, normal_rng = rngs
        v = np.zeros(size)
        integral = np.zeros(size)
        for _ in range(cfg.n_steps):
            v_next = v_transition(p, v, dt, gamma_rng, poisson_rng)
            integral += 0.5 * (v + v_next) * dt
            v = v_next
        x = (-0.5 * integral
             + p.rho * (v - p.a * t - p.b * integral) / p.xi
             + p.rho_bar * np.sqrt(integral) * normal_rng.standard_normal(size))
        return x, v

    parts = _run_streams(cfg, work)
    logger.debug("simulated %d paths x %d steps at t=%g", cfg.n_paths, cfg.n_steps, t)
    return np.concatenate([x for x, _ in parts]), np.concatenate([v for _, v in parts])


def mean_integrated_variance(p: ModelParams, t: float) -> float:
    """E[int_0^t V_s ds] with E[V_s] = a (e^{bs} - 1) / b."""
    return (p.a / p.b) * (math.expm1(p.b * t) / p.b - t)


def _expected_probability(p: ModelParams, m: Marginal, x: float, t: float) -> Optional[float]:
    """Cheap pre-estimate of P(M_t >= x); None when no estimate is available."""
    from feller_ldp.tails import gamma_tail_v, tilted_fourier_tail

    if m is Marginal.V:
        return gamma_tail_v(p, x, t).p
    if x <= 0:
        return 1.0
    try:
        return math.exp(tilted_fourier_tail(p, m, x, t).log_p)
    except NumericalError as e:
        logger.warning("no pre-estimate for P(X_t >= %g) at t=%g (%s); checking hits after simulating", x, t, e)
        return None


def estimate_from_hits(hits: int, n: int) -> McEstimate:
    p_hat = hits / n
    return McEstimate(p_hat=p_hat, std_err=math.sqrt(p_hat * (1.0 - p_hat) / n), n_paths=n, hits=hits)


def check_expected_hits(p: ModelParams, m: Marginal, x: float, t: float, cfg: McConfig):
    m = Marginal.parse(m)
    probability = _expected_probability(p, m, x, t)
    if probability is None:
        return
    expected = probability * cfg.n_paths
    if expected < MIN_EXPECTED_HITS:
        raise ProbabilityTooSmallForN(
            f"about {expected:.3g} hits expected from {cfg.n_paths} paths for P({m.value}_t >= {x:g}) "
            f"at t={t:g}; use a larger t or an x closer to 0"
        )


def draw_samples(p: ModelParams, m: Marginal, t: float, cfg: McConfig) -> tuple[Optional[np.ndarray], np.ndarray]:
    """(X_t, V_t) draws; X_t is None when only the exact V_t law is needed."""
    if Marginal.parse(m) is Marginal.V:
        return None, sample_v_exact(p, t, cfg)
    return simulate_xv(p, t, cfg)


def tail_mc(p: ModelParams, m: Marginal, x: float, t: float, cfg: McConfig,
            samples: Optional[np.ndarray] = None) -> McEstimate:
    """Indicator-mean estimate of P(M_t >= x); ``samples`` reuses draws of M_t made with ``cfg``."""
    m = Marginal.parse(m)
    check_expected_hits(p, m, x, t, cfg)

    if samples is None:
        x_draws, v_draws = draw_samples(p, m, t, cfg)
        samples = v_draws if m is Marginal.V else x_draws
    hits = int(np.count_nonzero(samples >= x))
    if hits < MIN_EXPECTED_HITS:
        raise ProbabilityTooSmallForN(
            f"only {hits} of {len(samples)} paths reached {m.value}_t >= {x:g} at t={t:g}"
        )
    estimate = estimate_from_hits(hits, len(samples))
    logger.info("MC P(%s_t >= %g) at t=%g: %.6g +/- %.2g", m.value, x, t, estimate.p_hat, estimate.std_err)
    return estimate
