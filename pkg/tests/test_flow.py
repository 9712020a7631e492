import math
import unittest

import numpy as np

from igo.errors import RejectedInput
from igo.families import BernoulliFamily, IsotropicGaussianFamily
from igo.flow import (
    critical_dt,
    distribution_quantile,
    exact_weight,
    exact_weights,
    expectation_flow,
    flow_rhs,
    flow_speed,
    gaussian_linear_constants,
    integrate,
    lyapunov_monitor,
    surrogate_rhs,
)
from igo.objectives import Linear, OneMax, Sphere
from igo.utils import normal_pdf, normal_ppf
from igo.weights import RankSchedule, WeightScheme


class ExactFlowTest(unittest.TestCase):
    def test_weights_average_over_ties(self):
        family = BernoulliFamily(1)
        # f = 1 - x: x = 1 has probability 0.3 and quantile range [0, 0.3]
        points, probabilities, weights = exact_weights(family, np.array([0.3]), OneMax(1), WeightScheme.truncation(0.5))
        np.testing.assert_allclose(probabilities, [0.7, 0.3])
        np.testing.assert_allclose(weights, [2.0 / 7.0, 1.0])
        self.assertAlmostEqual(exact_weight(family, np.array([0.3]), OneMax(1), WeightScheme.truncation(0.5), [0.0]), 2.0 / 7.0)

    def test_rhs_vanishes_at_the_corners(self):
        family = BernoulliFamily(3)
        scheme = WeightScheme.truncation(0.5)
        for corner in (np.zeros(3), np.ones(3)):
            theta = family.project(corner)
            np.testing.assert_allclose(flow_rhs(family, theta, OneMax(3), scheme), np.zeros(3), atol=1e-5)

    def test_rhs_is_the_expectation_flow_for_bernoulli(self):
        family = BernoulliFamily(3)
        theta = np.array([0.2, 0.5, 0.7])
        objective = Linear([1.0, 2.0, 3.0])
        scheme = WeightScheme.truncation(0.3)
        np.testing.assert_allclose(flow_rhs(family, theta, objective, scheme), expectation_flow(family, theta, objective, scheme))

    def test_linear_function_monitor_is_positive(self):
        family = BernoulliFamily(4)
        theta = np.array([0.2, 0.4, 0.6, 0.8])
        self.assertGreater(lyapunov_monitor(family, theta, [1.0, 2.0, 3.0, 4.0]), 0.0)

    def test_rank_schedules_have_no_flow(self):
        with self.assertRaises(RejectedInput):
            flow_rhs(BernoulliFamily(2), np.full(2, 0.5), OneMax(2), RankSchedule((1.0,)))

    def test_sample_update_is_consistent(self):
        family = BernoulliFamily(3)
        theta = np.array([0.3, 0.5, 0.6])
        objective = Linear([1.0, 2.0, 3.0])
        scheme = WeightScheme.truncation(0.5)
        exact = flow_rhs(family, theta, objective, scheme)
        rng = np.random.default_rng(0)
        counts = np.array([100, 1000, 10000, 100000])
        errors = []
        for count in counts:
            trials = []
            for _ in range(100):
                samples = family.sample(theta, int(count), rng)
                weights = scheme.weigh(objective(samples))
                trials.append(np.linalg.norm(weights.weights @ family.natural_score(theta, samples) - exact))
            errors.append(np.mean(trials))
        slope = np.polyfit(np.log(counts), np.log(errors), 1)[0]
        self.assertAlmostEqual(slope, -0.5, delta=0.1)


class IntegrationTest(unittest.TestCase):
    def test_rk4_solves_exponential_decay(self):
        trajectory = integrate(lambda theta: -theta, [1.0], 1.0, 0.1, method="rk4")
        self.assertEqual(len(trajectory), 11)
        self.assertAlmostEqual(trajectory[-1].t, 1.0)
        self.assertAlmostEqual(float(trajectory[-1].theta[0]), math.exp(-1.0), places=5)

    def test_euler_and_callback(self):
        seen = []
        trajectory = integrate(lambda theta: np.ones(1), [0.0], 0.5, 0.25, method="euler", callback=seen.append)
        self.assertEqual(len(seen), 2)
        self.assertAlmostEqual(float(trajectory[-1].theta[0]), 0.5)

    def test_bad_arguments(self):
        with self.assertRaises(RejectedInput):
            integrate(lambda theta: theta, [0.0], 1.0, 0.1, method="midpoint")
        with self.assertRaises(RejectedInput):
            integrate(lambda theta: theta, [0.0], 1.0, 0.0)

    def test_onemax_quantile_never_increases(self):
        family = BernoulliFamily(8)
        objective = OneMax(8)
        scheme = WeightScheme.truncation(0.5)
        trajectory = integrate(
            lambda theta: flow_rhs(family, theta, objective, scheme), np.full(8, 0.3), 5.0, 0.05, project=family.project
        )
        quantiles = [distribution_quantile(family, state.theta, objective, 0.5) for state in trajectory[::2]]
        self.assertTrue(np.all(np.diff(quantiles) <= 0.0))
        self.assertLess(quantiles[-1], quantiles[0])

    def test_sphere_quantile_strictly_decreases(self):
        family = IsotropicGaussianFamily(2)
        objective = Sphere(2)
        scheme = WeightScheme.truncation(0.5)
        theta0 = np.array([1.0, 1.0, 0.0])
        trajectory = integrate(
            lambda theta: surrogate_rhs(family, theta, objective, scheme, 20000, seed=3), theta0, 1.0, 0.02, method="euler"
        )
        quantiles = [distribution_quantile(family, state.theta, objective, 0.5) for state in trajectory[::1]]
        self.assertTrue(np.all(np.diff(quantiles) < 0.0))


class LinearConstantsTest(unittest.TestCase):
    def test_median_selection(self):
        constants = gaussian_linear_constants(0.5, 1)
        self.assertAlmostEqual(constants.beta, -1.0 / math.sqrt(2.0 * math.pi), places=12)
        self.assertAlmostEqual(constants.alpha, 0.0, places=10)

    def test_alpha_closed_form(self):
        for q0 in (0.05, 0.25, 0.4, 0.75):
            for d in (1, 2, 10):
                bound = normal_ppf(q0)
                expected = -bound * normal_pdf(bound) / (2.0 * d)
                self.assertAlmostEqual(gaussian_linear_constants(q0, d).alpha, float(expected), places=9)

    def test_full_selection_does_not_move(self):
        constants = gaussian_linear_constants(1.0, 3)
        self.assertEqual(constants.beta, 0.0)
        self.assertAlmostEqual(constants.alpha, 0.0, places=9)

    def test_paths(self):
        constants = gaussian_linear_constants(0.25, 2)
        t = np.array([0.0, 1.0])
        np.testing.assert_allclose(constants.sigma_path(2.0, t), [2.0, 2.0 * math.exp(constants.alpha)])
        np.testing.assert_allclose(constants.mean_path(0.0, 1.0, 0.0), 0.0)

    def test_rejects_bad_quantile(self):
        with self.assertRaises(RejectedInput):
            gaussian_linear_constants(0.0, 1)


class CriticalStepTest(unittest.TestCase):
    def test_reference_value(self):
        self.assertAlmostEqual(critical_dt(0.25, 1), 0.5307, delta=5e-4)

    def test_second_order_curve(self):
        for q in (0.05, 0.1, 0.25, 0.45):
            self.assertAlmostEqual(critical_dt(q, 2), math.sqrt(1.0 + critical_dt(q, 1)) - 1.0, places=14)

    def test_limits(self):
        self.assertEqual(critical_dt(0.5, 1), 0.0)
        self.assertEqual(critical_dt(0.7, 2), 0.0)
        self.assertEqual(critical_dt(0.25, 0), math.inf)
        self.assertEqual(critical_dt(0.25, "inf"), 0.0)
        self.assertLess(critical_dt(0.499, 1), 0.01)

    def test_unknown_order(self):
        with self.assertRaises(RejectedInput):
            critical_dt(0.25, 3)


class SpeedTest(unittest.TestCase):
    def test_signed_median_speed_is_dimension_free(self):
        scheme = WeightScheme.signed_median(scale=0.5)
        for d in (1, 5, 10):
            family = IsotropicGaussianFamily(d)
            objective = Linear(np.ones(d), space="reals")
            theta = family.initial_theta()
            rhs = surrogate_rhs(family, theta, objective, scheme, 100000, seed=d)
            self.assertAlmostEqual(flow_speed(family, theta, rhs), 1.0 / math.sqrt(2.0 * math.pi), delta=0.02)


if __name__ == "__main__":
    unittest.main()
