import math

import numpy as np
from django.test import SimpleTestCase

from feller_ldp.exceptions import NonConvergence, ParameterOutOfRange
from feller_ldp.model_core import validate_params
from feller_ldp.rate_functions import fw_rate
from feller_ldp.variational import (
    PathGrid,
    action,
    contraction_curve,
    minimize_action,
    psi_action,
    psi_line_path,
    straight_line_path,
)

P1 = validate_params(0.12, -1.0, 0.4, -0.5)


class PathGridTests(SimpleTestCase):
    def test_endpoints_must_match(self):
        with self.assertRaises(ParameterOutOfRange):
            PathGrid(np.array([0.04, 0.05, 0.08]), 0.04, 0.09)

    def test_values_must_be_nonnegative(self):
        with self.assertRaises(ParameterOutOfRange):
            PathGrid(np.array([0.04, -0.01, 0.09]), 0.04, 0.09)

    def test_needs_three_knots(self):
        with self.assertRaises(ParameterOutOfRange):
            PathGrid(np.array([0.04, 0.09]), 0.04, 0.09)

    def test_knots(self):
        path = psi_line_path(0.04, 0.09, 4)
        self.assertEqual(path.n, 4)
        self.assertEqual(path.knots.tolist(), [0.0, 0.25, 0.5, 0.75, 1.0])
        self.assertEqual(len(list(path.rows())), 5)


class ActionTests(SimpleTestCase):
    def test_trivial_paths_cost_nothing(self):
        self.assertEqual(action(P1, straight_line_path(0.05, 0.05, 50)), 0.0)
        self.assertEqual(action(P1, PathGrid(np.zeros(11), 0.0, 0.0)), 0.0)

    def test_straight_line_is_above_the_minimum(self):
        value = action(P1, straight_line_path(0.04, 0.09, 1000))
        self.assertGreaterEqual(value, 0.125)
        self.assertLess(value, 0.125 * 1.05)

    def test_psi_form_agrees_on_positive_paths(self):
        path = straight_line_path(0.04, 0.09, 200)
        self.assertAlmostEqual(action(P1, path), psi_action(P1, path), delta=1e-4 * action(P1, path))

    def test_noise_scaling(self):
        doubled = validate_params(0.48, -1.0, 0.8, -0.5)
        path = psi_line_path(0.04, 0.09, 100)
        self.assertAlmostEqual(action(doubled, path), action(P1, path) / 4.0, places=14)


class MinimizeActionTests(SimpleTestCase):
    def test_matches_closed_form(self):
        closed = fw_rate(P1, 0.04, 0.09).value
        coarse = minimize_action(P1, 0.04, 0.09, 100)
        fine = minimize_action(P1, 0.04, 0.09, 1000)
        self.assertLess(abs(coarse.value - closed), 0.02 * closed)
        self.assertLess(abs(fine.value - closed), 0.002 * closed)

    def test_direct_solve_agrees_with_psi_line(self):
        result = minimize_action(P1, 0.04, 0.09, 100)
        self.assertLessEqual(result.direct_value, result.value * (1 + 1e-6))
        self.assertGreater(result.direct_value, 0.99 * result.value)
        distance = np.max(np.abs(result.direct_minimizer.values - result.minimizer.values))
        self.assertLess(distance, 1e-3)

    def test_error_decreases_at_least_linearly(self):
        closed = fw_rate(P1, 0.04, 0.09).value
        sizes = np.array([50, 100, 200])
        errors = np.array([abs(minimize_action(P1, 0.04, 0.09, n).value - closed) for n in sizes])
        order = -np.polyfit(np.log(sizes), np.log(errors), 1)[0]
        self.assertGreaterEqual(order, 1.0)

    def test_start_at_target(self):
        result = minimize_action(P1, 0.04, 0.04, 50)
        self.assertAlmostEqual(result.value, 0.0, places=20)
        self.assertTrue(np.allclose(result.minimizer.values, 0.04, rtol=1e-14, atol=0.0))

    def test_from_zero(self):
        result = minimize_action(P1, 0.0, 0.2, 200)
        self.assertAlmostEqual(result.value, 2.5, delta=0.01)
        self.assertAlmostEqual(result.direct_value, 2.5, delta=0.02)

    def test_to_zero(self):
        result = minimize_action(P1, 0.04, 0.0, 200)
        self.assertAlmostEqual(result.value, 0.5, delta=0.005)

    def test_negative_target(self):
        result = minimize_action(P1, 0.04, -0.01, 50)
        self.assertEqual(result.value, math.inf)
        self.assertIsNone(result.minimizer)

    def test_iteration_cap(self):
        with self.assertRaises(NonConvergence) as ctx:
            minimize_action(P1, 0.0, 0.09, 50, max_iter=1)
        self.assertIsNotNone(ctx.exception.best)
        self.assertTrue(math.isfinite(ctx.exception.best.value))

    def test_invalid_grid(self):
        with self.assertRaises(ParameterOutOfRange):
            minimize_action(P1, -0.01, 0.09, 50)
        with self.assertRaises(ParameterOutOfRange):
            minimize_action(P1, 0.04, 0.09, 1)


class ContractionTests(SimpleTestCase):
    def test_rate_recovered_as_start_vanishes(self):
        actions = [contraction_curve(P1, v0, [0.2], 200)[0].action for v0 in (0.1, 0.01, 0.001)]
        self.assertEqual(actions, sorted(actions))
        self.assertLess(abs(actions[-1] - 2.5) / 2.5, 0.15)

    def test_rows(self):
        rows = contraction_curve(P1, 0.04, [0.0, 0.09, -0.1], 200)
        self.assertAlmostEqual(rows[0].action, 0.5, delta=0.005)
        self.assertAlmostEqual(rows[1].closed_form, 0.125, places=12)
        self.assertEqual(rows[2].action, math.inf)
        self.assertEqual(rows[2].gap, 0.0)

    def test_action_is_convex_in_target(self):
        xs = np.linspace(0.05, 0.3, 11)
        values = np.array([row.action for row in contraction_curve(P1, 0.04, xs, 200)])
        self.assertTrue(np.all(np.diff(values, 2) > 0))
