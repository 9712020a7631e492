import unittest

import numpy as np

from igo import core
from igo.errors import DegenerateUpdate, DomainError
from igo.families import BernoulliFamily, ExpectationFamily, LogitBernoulliFamily, parse_family
from igo.families.bernoulli import bernoulli_fisher, bernoulli_grad_logdensity, bernoulli_igo_update
from igo.utils import sigmoid
from igo.weights import RankSchedule


class BernoulliFamilyTest(unittest.TestCase):
    def test_grad_and_fisher(self):
        np.testing.assert_allclose(bernoulli_grad_logdensity([0.5, 0.25], [1.0, 0.0]), [2.0, -4.0 / 3.0])
        np.testing.assert_allclose(bernoulli_fisher([0.5, 0.25]), np.diag([4.0, 1.0 / 0.1875]))

    def test_boundary_is_rejected(self):
        with self.assertRaises(DomainError):
            bernoulli_fisher([0.0, 0.5])

    def test_enumeration_sums_to_one(self):
        points, probabilities = BernoulliFamily(4).enumerate(np.array([0.1, 0.4, 0.5, 0.9]))
        self.assertEqual(points.shape, (16, 4))
        self.assertAlmostEqual(float(np.sum(probabilities)), 1.0, places=14)

    def test_pbil_update(self):
        theta = bernoulli_igo_update([0.5, 0.5], [[1.0, 0.0], [0.0, 0.0]], [1.0], 0.1)
        np.testing.assert_allclose(theta, [0.55, 0.45])

    def test_update_is_clamped(self):
        theta = bernoulli_igo_update([0.5], [[1.0]], [1.0], 1.0)
        self.assertLess(theta[0], 1.0)

    def test_rank_update_follows_the_schedule(self):
        family = BernoulliFamily(2)
        samples = np.array([[0.0, 1.0], [1.0, 1.0], [1.0, 0.0]])
        weights = RankSchedule((1.0,)).weigh([2.0, 0.0, 1.0])
        np.testing.assert_allclose(family.rank_update([0.5, 0.5], samples, weights, 0.2), [0.6, 0.6])

    def test_from_expectation_outside_unit_interval(self):
        with self.assertRaises(DegenerateUpdate):
            BernoulliFamily(1).from_expectation([1.5])

    def test_parse(self):
        family = parse_family("bernoulli:d=3;theta0=0.2")
        np.testing.assert_allclose(family.initial_theta(), [0.2, 0.2, 0.2])
        self.assertIsInstance(parse_family("bernoulli:d=2;expectation=true"), ExpectationFamily)


class LogitBernoulliTest(unittest.TestCase):
    def test_parametrization_difference_is_second_order(self):
        family = BernoulliFamily(3)
        logit_family = LogitBernoulliFamily(3)
        rng = np.random.default_rng(12)
        theta = np.array([0.3, 0.5, 0.8])
        samples = family.sample(theta, 50, rng)
        weights = rng.random(50) / 50

        differences = []
        for dt in (0.2, 0.1, 0.05, 0.025):
            direct = core.igo_step(family, theta, samples, weights, dt)
            through_logits = sigmoid(core.igo_step(logit_family, np.log(theta / (1.0 - theta)), samples, weights, dt))
            differences.append(np.max(np.abs(direct - through_logits)))
        ratios = np.array(differences[:-1]) / np.array(differences[1:])
        self.assertTrue(np.all((ratios > 2.0) & (ratios < 8.0)), ratios)

    def test_fisher_is_the_logistic_variance(self):
        family = LogitBernoulliFamily(2)
        np.testing.assert_allclose(family.exact_fisher([0.0, 0.0]), np.diag([0.25, 0.25]))


if __name__ == "__main__":
    unittest.main()
