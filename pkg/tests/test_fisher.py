import os
import tempfile
import unittest

import numpy as np

from igo.errors import RejectedInput, SingularFisher
from igo.families import BernoulliFamily, GaussianFamily, RbmJointFamily, RbmParams
from igo.fisher import (
    FisherMatrix,
    cross_validated_fisher,
    exact_fisher,
    invert,
    mc_fisher,
    reliability_check,
)


class FisherMatrixTest(unittest.TestCase):
    def test_rejects_asymmetric_matrices(self):
        with self.assertRaises(RejectedInput):
            FisherMatrix(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_indefinite_matrices(self):
        with self.assertRaises(RejectedInput):
            FisherMatrix(np.diag([1.0, -1.0]))

    def test_norm_rank_condition(self):
        fisher = FisherMatrix(np.diag([4.0, 1.0]))
        self.assertAlmostEqual(fisher.norm([0.5, 1.0]), np.sqrt(2.0))
        self.assertEqual(fisher.rank, 2)
        self.assertAlmostEqual(fisher.condition_number, 4.0)

    def test_to_csv(self):
        with tempfile.TemporaryDirectory() as folder:
            path = os.path.join(folder, "fisher.csv")
            FisherMatrix(np.eye(2), sample_count=None).to_csv(path)
            with open(path) as handle:
                lines = handle.read().splitlines()
        self.assertTrue(lines[0].startswith("# igo-csv v1 fisher provenance=exact"))
        self.assertEqual(lines[1:], ["1,0", "0,1"])


class InvertTest(unittest.TestCase):
    def test_inverse(self):
        np.testing.assert_allclose(invert(np.diag([4.0, 2.0])), np.diag([0.25, 0.5]))

    def test_singular(self):
        with self.assertRaises(SingularFisher):
            invert(np.diag([1.0, 0.0]))

    def test_ill_conditioned(self):
        with self.assertRaises(SingularFisher):
            invert(np.diag([1.0, 1e-13]))

    def test_ridge_is_recorded(self):
        fisher = FisherMatrix(np.diag([1.0, 0.0]))
        np.testing.assert_allclose(invert(fisher, ridge=1.0), np.diag([0.5, 1.0]))
        self.assertTrue(fisher.regularized)


class MonteCarloFisherTest(unittest.TestCase):
    def test_error_shrinks_like_inverse_square_root(self):
        family = BernoulliFamily(3)
        theta = np.array([0.3, 0.5, 0.6])
        exact = exact_fisher(family, theta).matrix
        counts = np.array([100, 1000, 10000, 100000])
        errors = []
        for count in counts:
            rng = np.random.default_rng(int(count))
            trials = [np.linalg.norm(mc_fisher(family, theta, int(count), rng).matrix - exact) for _ in range(30)]
            errors.append(np.mean(trials))
        slope = np.polyfit(np.log(counts), np.log(errors), 1)[0]
        self.assertAlmostEqual(slope, -0.5, delta=0.1)

    def test_average_estimate_is_the_exact_matrix(self):
        cases = (
            (BernoulliFamily(3), np.array([0.3, 0.5, 0.6])),
            (GaussianFamily(1), np.array([0.5, 1.0])),
        )
        for family, theta in cases:
            rng = np.random.default_rng(4)
            estimates = [mc_fisher(family, theta, 100, rng).matrix for _ in range(400)]
            np.testing.assert_allclose(np.mean(estimates, axis=0), exact_fisher(family, theta).matrix, rtol=0.05, atol=0.1)

    def test_duplicate_samples_are_rank_deficient(self):
        family = BernoulliFamily(3)
        samples = np.tile([1.0, 0.0, 1.0], (5, 1))
        with self.assertLogs("igo", level="WARNING") as logs:
            fisher = mc_fisher(family, np.full(3, 0.5), samples=samples)
        self.assertIn("rank deficient", logs.output[0])
        self.assertEqual(fisher.rank, 1)

    def test_too_few_samples(self):
        with self.assertRaises(RejectedInput):
            mc_fisher(GaussianFamily(2), np.array([0.0, 0.0, 1.0, 0.0, 1.0]), 3, np.random.default_rng(0))

    def test_shared_samples(self):
        family = BernoulliFamily(1)
        fisher = mc_fisher(family, np.array([0.5]), samples=np.array([[0.0], [1.0]]))
        np.testing.assert_allclose(fisher.matrix, [[4.0]])
        self.assertEqual(fisher.provenance, "monte_carlo")

    def test_exact_fisher_is_the_curvature_of_kl(self):
        family = RbmJointFamily(2, 2)
        rng = np.random.default_rng(3)
        theta = RbmParams(rng.normal(0, 0.5, 2), rng.normal(0, 0.5, 2), rng.normal(0, 0.5, (2, 2))).to_vector()
        fisher = exact_fisher(family, theta)
        points, probabilities = family.enumerate(theta)
        base = family.log_density(theta, points)
        epsilon = 1e-3
        for _ in range(5):
            direction = rng.normal(size=theta.size)
            kl = []
            for sign in (1.0, -1.0):
                shifted = family.log_density(theta + sign * epsilon * direction, points)
                kl.append(float(probabilities @ (base - shifted)))
            curvature = 2.0 * np.mean(kl) / epsilon ** 2
            expected = fisher.norm(direction) ** 2
            self.assertLess(abs(curvature - expected) / expected, 1e-4)


class ReliabilityTest(unittest.TestCase):
    def test_agreeing_estimates_pass(self):
        family = GaussianFamily(1)
        fisher, reliability = cross_validated_fisher(family, np.array([0.0, 1.0]), 5000, np.random.default_rng(0))
        self.assertTrue(reliability.passed)
        self.assertEqual(fisher.sample_count, 10000)
        self.assertAlmostEqual(reliability.mean_eigenvalue, 1.0, delta=0.2)

    def test_disagreeing_estimates_fail(self):
        self.assertFalse(reliability_check(np.eye(2) * 3.0, np.eye(2)).passed)
        self.assertTrue(reliability_check(np.diag([1.5, 0.8]), np.eye(2)).passed)

    def test_log_symmetric_check(self):
        # Mean eigenvalue 1.25 passes, but the log spread does not
        self.assertTrue(reliability_check(np.diag([2.4, 0.1]), np.eye(2)).passed)
        self.assertFalse(reliability_check(np.diag([2.4, 0.1]), np.eye(2), log_symmetric=True).passed)

    def test_singular_second_estimate(self):
        reliability = reliability_check(np.eye(2), np.diag([1.0, 0.0]))
        self.assertFalse(reliability.passed)
        self.assertTrue(reliability.singular)


if __name__ == "__main__":
    unittest.main()
