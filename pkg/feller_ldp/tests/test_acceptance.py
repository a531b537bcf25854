"""End-to-end checks of the small-time asymptotics under the reference parameters P1."""

import math

import numpy as np
from django.test import SimpleTestCase, tag

from feller_ldp.cgf import expansion_coeffs, f_fn, g_fn
from feller_ldp.model_core import Marginal, domain_bounds, limiting_u_pm, validate_params
from feller_ldp.montecarlo import McConfig, tail_mc
from feller_ldp.rate_functions import (
    CgfCurve,
    legendre_transform,
    rate_v,
    rate_x,
    steepness_report,
)
from feller_ldp.saddlepoint import saddle_x
from feller_ldp.tails import (
    TiltedIntegrand,
    extract_prefactor,
    extrapolate_rate,
    gamma_tail_v,
    ldp_convergence,
    log_prefactor_v,
    sharp_tail,
    tilted_fourier_tail,
)
from feller_ldp.variational import contraction_curve, minimize_action

P1 = validate_params(0.12, -1.0, 0.4, -0.5)


def _slope(times, values):
    return float(np.polyfit(np.log(times), np.log(values), 1)[0])


class TailAcceptanceTests(SimpleTestCase):
    def test_fourier_inversion_reproduces_gamma_law(self):
        for x in (0.02, 0.05, 0.1):
            for t in (0.1, 0.05, 0.02):
                exact = gamma_tail_v(P1, x, t)
                estimate = tilted_fourier_tail(P1, Marginal.V, x, t)
                with self.subTest(x=x, t=t):
                    self.assertLessEqual(abs(estimate.log_p - exact.log_p), 1e-8)

    def test_sharp_ratio_is_first_order(self):
        times = np.array([0.05, 0.02, 0.01, 0.005])
        deviations = []
        for t in times:
            ratio = math.exp(gamma_tail_v(P1, 0.05, t).log_p - sharp_tail(P1, Marginal.V, 0.05, t).log_p)
            self.assertLessEqual(abs(ratio - 1.0), 2.0 * t)
            deviations.append(abs(ratio - 1.0))
        self.assertTrue(0.7 <= _slope(times, deviations) <= 1.3)

    def test_scaled_log_tail_tends_to_rate(self):
        rate_value = rate_x(P1, 0.1).value
        self.assertAlmostEqual(rate_value, 1.209199, places=5)
        rows = ldp_convergence(P1, Marginal.X, 0.1, [0.1, 0.05, 0.02, 0.01], 'fourier')
        gaps = [row.gap for row in rows]
        self.assertEqual(gaps, sorted(gaps, reverse=True))
        self.assertLess(abs(extrapolate_rate(rows) - rate_value), 0.05 * rate_value)

    def test_prefactor_power(self):
        fit = extract_prefactor(P1, Marginal.V, 0.05, [0.05, 0.02, 0.01, 0.005])
        closed = math.exp(log_prefactor_v(P1, 0.05))
        self.assertLess(abs(fit.c_hat / closed - 1.0), 0.05)
        self.assertAlmostEqual(fit.exponent, 1.0 - P1.mu, delta=0.1)

    def test_l1_norm_is_order_t(self):
        times = np.array([0.1, 0.05, 0.02])
        norms = [TiltedIntegrand.at_saddle(P1, Marginal.V, 0.05, t).l1_norm() for t in times]
        self.assertTrue(0.7 <= _slope(times, norms) <= 1.3)


class SaddleAcceptanceTests(SimpleTestCase):
    def test_saddle_is_first_order_in_t(self):
        _, upper = limiting_u_pm(P1)
        times = np.array([0.05, 0.02, 0.01, 0.005])
        results = [saddle_x(P1, 0.1, t) for t in times]
        for result in results:
            self.assertLessEqual(result.residual, 1e-10)
        gaps = [abs(result.u_star - upper) for result in results]
        self.assertTrue(0.7 <= _slope(times, gaps) <= 1.3)

    def test_expansion_slopes(self):
        times = np.array([0.1, 0.05, 0.02, 0.01])
        lower, upper = limiting_u_pm(P1)
        grids = {
            Marginal.X: np.linspace(lower, upper, 52)[1:-1],
            Marginal.V: np.linspace(-2 / P1.xi ** 2, 2 / P1.xi ** 2, 52)[1:-1],
        }
        for m, grid in grids.items():
            residuals = []
            for t in times:
                worst = 0.0
                for u in grid:
                    coeffs = expansion_coeffs(P1, m, u)
                    worst = max(worst, abs(f_fn(P1, m, u, t) - coeffs.f0 - coeffs.f1 * t))
                residuals.append(worst)
            with self.subTest(m=m):
                self.assertTrue(1.8 <= _slope(times, residuals) <= 2.2)

        g_residuals = [max(abs(g_fn(P1, Marginal.X, u, t) - expansion_coeffs(P1, Marginal.X, u).g0)
                           for u in grids[Marginal.X]) for t in times]
        self.assertTrue(0.8 <= _slope(times, g_residuals) <= 1.2)


class VariationalAcceptanceTests(SimpleTestCase):
    def test_closed_form_and_order(self):
        closed = 0.125
        errors = []
        for n, tolerance in ((100, 0.02), (1000, 0.002)):
            value = minimize_action(P1, 0.04, 0.09, n).value
            self.assertLess(abs(value - closed), tolerance * closed)
            errors.append(abs(value - closed))
        self.assertGreaterEqual(-_slope([100, 1000], errors), 1.0)

    def test_contraction_limit(self):
        actions = [contraction_curve(P1, v0, [0.2], 200)[0].action for v0 in (0.1, 0.01, 0.001)]
        self.assertEqual(actions, sorted(actions))
        limit = rate_v(P1, 0.2).value
        self.assertAlmostEqual(limit, 2.5, places=12)
        self.assertLess(abs(actions[-1] - limit) / limit, 0.15)


class LegendreAcceptanceTests(SimpleTestCase):
    def test_conjugacy_and_steepness(self):
        x_curve = CgfCurve.zero_on(domain_bounds(P1, Marginal.X, 0.0))
        for x in (-0.2, -0.1, 0.1, 0.2):
            with self.subTest(x=x):
                self.assertAlmostEqual(legendre_transform(x_curve, x).value, rate_x(P1, x).value, places=14)
        v_curve = CgfCurve.zero_on(domain_bounds(P1, Marginal.V, 0.0))
        self.assertEqual(legendre_transform(v_curve, -0.1).value, math.inf)
        for m in Marginal:
            self.assertFalse(steepness_report(P1, m, [0.1, 0.01]).essentially_smooth)


@tag('slow')
class MonteCarloAcceptanceTests(SimpleTestCase):
    def test_variance_tail(self):
        estimate = tail_mc(P1, Marginal.V, 0.05, 0.1, McConfig(n_paths=1_000_000, seed=2024))
        self.assertLess(abs(estimate.p_hat - gamma_tail_v(P1, 0.05, 0.1).p), 3 * estimate.std_err)

    def test_log_price_tail(self):
        estimate = tail_mc(P1, Marginal.X, 0.05, 0.1, McConfig(n_paths=1_000_000, n_steps=200, seed=2024))
        fourier = tilted_fourier_tail(P1, Marginal.X, 0.05, 0.1)
        self.assertLess(abs(estimate.p_hat - fourier.p), 3 * estimate.std_err)
