import math

import numpy as np
from django.test import SimpleTestCase

from feller_ldp.exceptions import MissingPrefactor, OutsideSupport, ParameterOutOfRange
from feller_ldp.model_core import Marginal, validate_params
from feller_ldp.montecarlo import McConfig
from feller_ldp.rate_functions import rate_v, rate_x
from feller_ldp.tails import (
    ConvergenceRow,
    Method,
    TiltedIntegrand,
    extrapolate_rate,
    gamma_rate,
    gamma_tail_v,
    ldp_convergence,
    log_prefactor_v,
    prefactor_comparison,
    remark_constant,
    sharp_tail,
    sharp_tail_v_full,
    tail_probability,
    tilted_fourier_tail,
)

P1 = validate_params(0.12, -1.0, 0.4, -0.5)


class MethodTests(SimpleTestCase):
    def test_parse(self):
        self.assertIs(Method.parse('gamma-exact'), Method.GAMMA_EXACT)
        self.assertIs(Method.parse('monte-carlo'), Method.MONTE_CARLO)
        self.assertIs(Method.parse('FOURIER'), Method.FOURIER)
        with self.assertRaises(ParameterOutOfRange):
            Method.parse('saddle')


class GammaTailTests(SimpleTestCase):
    def test_integer_index(self):
        params = validate_params(0.16, -1.0, 0.4, 0.0)
        self.assertAlmostEqual(params.mu, 2.0)
        t = 0.1
        estimate = gamma_tail_v(params, 3.0 / gamma_rate(params, t), t)
        self.assertAlmostEqual(estimate.p, 0.1991483, places=7)
        self.assertIs(estimate.method, Method.GAMMA_EXACT)

    def test_threshold_at_origin(self):
        self.assertGreater(gamma_tail_v(P1, 1e-12, 0.1).p, 1.0 - 1e-9)
        below = gamma_tail_v(P1, -0.5, 0.1)
        self.assertEqual((below.p, below.log_p), (1.0, 0.0))

    def test_rate_expansion(self):
        t = 0.001
        self.assertAlmostEqual(gamma_rate(P1, t), 2 / (P1.xi ** 2 * t) - P1.b / P1.xi ** 2, delta=0.01)

    def test_far_tail_keeps_log(self):
        estimate = gamma_tail_v(P1, 0.5, 0.001)
        self.assertEqual(estimate.p, 0.0)
        self.assertTrue(math.isfinite(estimate.log_p))
        self.assertAlmostEqual(-0.001 * estimate.log_p, rate_v(P1, 0.5).value, delta=0.05)


class SharpTailTests(SimpleTestCase):
    def test_variance_ratio_is_first_order(self):
        x = 0.05
        for t in (0.05, 0.02, 0.01, 0.005):
            ratio = math.exp(gamma_tail_v(P1, x, t).log_p - sharp_tail(P1, Marginal.V, x, t).log_p)
            with self.subTest(t=t):
                self.assertLessEqual(abs(ratio - 1.0), 2.0 * t)

    def test_full_rate_leading_term_is_closer(self):
        x, t = 0.05, 0.02
        exact = gamma_tail_v(P1, x, t).log_p
        self.assertLess(abs(sharp_tail_v_full(P1, x, t).log_p - exact),
                        abs(sharp_tail(P1, Marginal.V, x, t).log_p - exact))

    def test_log_price_needs_a_prefactor(self):
        with self.assertRaises(MissingPrefactor):
            sharp_tail(P1, Marginal.X, 0.1, 0.01)

    def test_supplied_prefactor(self):
        x, t = 0.1, 0.01
        estimate = sharp_tail(P1, Marginal.X, x, t, prefactor=2.0)
        expected = math.log(2.0) + (1 - P1.mu) * math.log(t) - rate_x(P1, x).value / t
        self.assertAlmostEqual(estimate.log_p, expected, places=12)
        self.assertEqual(estimate.error_kind, 'order_t')
        with self.assertRaises(ParameterOutOfRange):
            sharp_tail(P1, Marginal.X, x, t, prefactor=-1.0)

    def test_left_tail_is_complemented(self):
        estimate = sharp_tail(P1, Marginal.X, -0.1, 0.1, prefactor=1.0)
        left = math.exp((1 - P1.mu) * math.log(0.1) - rate_x(P1, -0.1).value / 0.1)
        self.assertAlmostEqual(estimate.log_p, math.log1p(-left), places=14)
        self.assertIn('complement', estimate.note)

    def test_variance_below_origin(self):
        self.assertEqual(sharp_tail(P1, Marginal.V, -0.1, 0.01).p, 1.0)

    def test_log_price_origin_is_outside_support(self):
        with self.assertRaises(OutsideSupport):
            sharp_tail(P1, Marginal.X, 0.0, 0.01, prefactor=1.0)


class PrefactorConstantTests(SimpleTestCase):
    def test_remark_constant_for_variance(self):
        self.assertAlmostEqual(remark_constant(P1, Marginal.V, 0.2), 2.76280, places=4)

    def test_comparison_ratio(self):
        comparison = prefactor_comparison(P1, Marginal.V, 0.2)
        self.assertAlmostEqual(comparison.full, math.exp(log_prefactor_v(P1, 0.2)), places=14)
        self.assertAlmostEqual(comparison.ratio, comparison.full / comparison.remark, places=14)
        supplied = prefactor_comparison(P1, Marginal.X, 0.1, prefactor=3.0)
        self.assertEqual(supplied.full, 3.0)


class TiltedIntegrandTests(SimpleTestCase):
    def test_normalised_at_origin(self):
        for m, x in ((Marginal.V, 0.05), (Marginal.X, 0.1), (Marginal.X, -0.1)):
            tilted = TiltedIntegrand.at_saddle(P1, m, x, 0.05)
            with self.subTest(m=m, x=x):
                self.assertAlmostEqual(abs(tilted.phi(0.0) - 1.0), 0.0, places=12)
                self.assertAlmostEqual(tilted.tilted_mean(), 0.0, delta=1e-6)

    def test_log_price_phase_is_continuous(self):
        tilted = TiltedIntegrand.at_saddle(P1, Marginal.X, 0.1, 0.02)
        u = np.linspace(0.0, 200.0, 4001)
        phase = np.imag(tilted.log_phi(u)) + u * 0.1
        self.assertLess(np.max(np.abs(np.diff(phase))), 1.0)

    def test_saddle_sign_follows_threshold(self):
        self.assertGreater(TiltedIntegrand.at_saddle(P1, Marginal.X, 0.1, 0.05).u_star, 0.0)
        self.assertLess(TiltedIntegrand.at_saddle(P1, Marginal.X, -0.1, 0.05).u_star, 0.0)


class FourierTailTests(SimpleTestCase):
    def test_matches_gamma_tail(self):
        x, t = 0.05, 0.05
        exact = gamma_tail_v(P1, x, t)
        estimate = tilted_fourier_tail(P1, Marginal.V, x, t)
        self.assertLess(abs(estimate.p / exact.p - 1.0), 1e-6)
        self.assertIs(estimate.method, Method.FOURIER)

    def test_decreasing_in_threshold(self):
        t = 0.05
        for m, xs in ((Marginal.V, (0.02, 0.05, 0.1)), (Marginal.X, (-0.1, 0.05, 0.1, 0.2))):
            values = [tilted_fourier_tail(P1, m, x, t).p for x in xs]
            with self.subTest(m=m):
                self.assertEqual(values, sorted(values, reverse=True))

    def test_left_tail_complement(self):
        estimate = tilted_fourier_tail(P1, Marginal.X, -0.1, 0.02)
        self.assertTrue(0.0 < estimate.p < 1.0)
        self.assertIn('complement', estimate.note)

    def test_support(self):
        with self.assertRaises(OutsideSupport):
            tilted_fourier_tail(P1, Marginal.V, -0.05, 0.05)
        with self.assertRaises(OutsideSupport):
            tilted_fourier_tail(P1, Marginal.X, 0.0, 0.05)


class TailProbabilityTests(SimpleTestCase):
    def test_dispatch(self):
        self.assertEqual(tail_probability(P1, 'V', 0.05, 0.1, 'gamma-exact'), gamma_tail_v(P1, 0.05, 0.1))
        with self.assertRaises(ParameterOutOfRange):
            tail_probability(P1, 'X', 0.05, 0.1, 'gamma-exact')

    def test_monte_carlo(self):
        estimate = tail_probability(P1, 'V', 0.05, 0.1, 'monte-carlo',
                                    mc_config=McConfig(n_paths=100_000, seed=3))
        exact = gamma_tail_v(P1, 0.05, 0.1).p
        self.assertEqual(estimate.error_kind, 'std_err')
        self.assertLess(abs(estimate.p - exact), 4 * estimate.error)


class ConvergenceTests(SimpleTestCase):
    def test_gap_shrinks(self):
        rows = ldp_convergence(P1, Marginal.V, 0.05, [0.1, 0.05, 0.02, 0.01], 'gamma-exact')
        gaps = [row.gap for row in rows]
        self.assertEqual([row.t for row in rows], [0.1, 0.05, 0.02, 0.01])
        self.assertEqual(gaps, sorted(gaps, reverse=True))
        for row in rows:
            self.assertAlmostEqual(row.rate, 0.625, places=12)

    def test_gap_is_absolute(self):
        for row in ldp_convergence(P1, Marginal.V, 0.05, [0.1, 0.01], 'gamma-exact'):
            with self.subTest(t=row.t):
                self.assertEqual(row.gap, abs(row.scaled_log_p - row.rate))

    def test_sharp_is_rejected(self):
        with self.assertRaises(ParameterOutOfRange):
            ldp_convergence(P1, Marginal.V, 0.05, [0.1], 'sharp')

    def test_extrapolation_recovers_intercept(self):
        times = [0.1, 0.05, 0.02, 0.01]
        rows = [ConvergenceRow(t=t, scaled_log_p=1.2 + 0.3 * t - 0.5 * t * math.log(t), rate=1.2, gap=0.0)
                for t in times]
        self.assertAlmostEqual(extrapolate_rate(rows), 1.2, places=10)
        with self.assertRaises(ParameterOutOfRange):
            extrapolate_rate(rows[:2])
